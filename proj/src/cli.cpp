#include "mecrl/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include <json.hpp>

#include "mecrl/comparison.hpp"
#include "mecrl/csv.hpp"
#include "mecrl/estimation.hpp"
#include "mecrl/mec.hpp"
#include "mecrl/schema.hpp"
#include "mecrl/simgen.hpp"

namespace mecrl {

namespace {

using nlohmann::json;

std::string iso_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream f(path);
  if (!f.good()) {
    throw DataError("cannot write '" + path + "'");
  }
  f << j.dump(2) << '\n';
}

// One estimation rule of the simulation study.
struct RuleSpec {
  std::string name;
  bool supervised = false;
  ThetaRule theta = ThetaRule::kMec;
  XiRule xi = XiRule::kProfileEm;
};

RuleSpec parse_rule(const std::string& name) {
  if (name == "supervised") return {name, true, {}, {}};
  if (name == "mec+profile")
    return {name, false, ThetaRule::kMec, XiRule::kProfileEm};
  if (name == "mec+empirical")
    return {name, false, ThetaRule::kMec, XiRule::kEmpirical};
  if (name == "wj+empirical")
    return {name, false, ThetaRule::kWj, XiRule::kEmpirical};
  throw UsageError("unknown estimation rule '" + name +
                   "' (choose from supervised, mec+profile, mec+empirical, "
                   "wj+empirical)");
}

std::vector<RuleSpec> parse_rules(const std::vector<std::string>& names) {
  std::vector<std::string> use = names;
  if (use.empty()) {
    use = {"supervised", "mec+profile", "mec+empirical", "wj+empirical"};
  }
  std::vector<RuleSpec> rules;
  rules.reserve(use.size());
  for (const auto& name : use) rules.push_back(parse_rule(name));
  return rules;
}

GeneratorSpec build_spec(const RunConfig& config) {
  GeneratorSpec spec = config.generator_spec_path.empty()
                           ? default_generator_spec()
                           : load_generator_spec(config.generator_spec_path);
  spec.scenario = config.scenario;
  spec.n_a = config.n_a;
  spec.n_b = config.n_b;
  spec.p_a = config.p_a;
  spec.seed = config.seed;
  if (!config.alpha.empty()) {
    if (config.alpha.size() == 1) {
      spec.alpha.assign(spec.schema.size(), config.alpha[0]);
    } else if (config.alpha.size() == spec.schema.size()) {
      spec.alpha = config.alpha;
    } else {
      throw UsageError("--alpha takes one value or one per key field (" +
                       std::to_string(spec.schema.size()) + ")");
    }
  }
  return spec;
}

// Per-repetition, per-rule results of the simulation study.
struct CellMetrics {
  double n_m_hat = 0.0;
  double flr_hat = 0.0;
  double mmr_hat = 0.0;
  double flr_true = 0.0;
  double mmr_true = 0.0;
};

std::vector<CellMetrics> run_repetition(const GeneratorSpec& cell_spec,
                                        std::uint64_t rep_seed,
                                        const std::vector<RuleSpec>& rules,
                                        const EstimatorConfig& base) {
  GeneratorSpec spec = cell_spec;
  spec.seed = rep_seed;
  const LinkageFiles files = generate_scenario(spec);
  const PatternTable space =
      build_comparison_space(files.file_a, files.file_b, 1);
  const double n_m_true = static_cast<double>(files.truth.size());

  std::vector<CellMetrics> out;
  out.reserve(rules.size());
  for (const auto& rule : rules) {
    CellMetrics cell;
    LinkageParams params;
    MecSet set;
    if (rule.supervised) {
      if (files.truth.empty()) {
        out.push_back(cell);  // nothing to learn from; all rates zero
        continue;
      }
      params = fit_supervised(space, files.truth);
      set = mec_set_of_size(space, params,
                            static_cast<std::size_t>(std::llround(params.n_m)));
    } else {
      EstimatorConfig config = base;
      config.theta_rule = rule.theta;
      config.xi_rule = rule.xi;
      FitResult fit =
          fit_unsupervised(space, files.file_a, files.file_b, config);
      params = fit.params;
      set = std::move(fit.final_set);
    }
    cell.n_m_hat = params.n_m;
    cell.flr_hat = flr_estimate(set);
    cell.mmr_hat = params.n_m > 0.0 ? mmr_estimate(set, params.n_m) : 1.0;
    const ErrorRates rates = true_error_rates(set, space, files.truth, n_m_true);
    cell.flr_true = rates.flr;
    cell.mmr_true = rates.mmr;
    out.push_back(cell);
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

// Shared driver behind `simulate` (one overlap) and `sweep` (several): runs
// every repetition of every cell, repetitions spread over a worker pool, and
// aggregates in a fixed order so the summary bytes never depend on the
// worker count.
int run_study(const RunConfig& config, const std::vector<double>& p_a_values,
              std::ostream& out, std::ostream& err) {
  const std::vector<RuleSpec> rules = parse_rules(config.rules);
  if (config.out_summary.empty()) {
    throw UsageError("simulation needs --out-summary");
  }
  if (config.repetitions < 1) {
    throw UsageError("--reps must be at least 1");
  }
  if (p_a_values.empty()) {
    throw UsageError("sweep needs --pa-list");
  }

  std::vector<GeneratorSpec> cells;
  cells.reserve(p_a_values.size());
  for (double pa : p_a_values) {
    RunConfig cell_config = config;
    cell_config.p_a = pa;
    GeneratorSpec spec = build_spec(cell_config);
    spec.normalized().validate();
    cells.push_back(std::move(spec));
  }

  const std::size_t reps = static_cast<std::size_t>(config.repetitions);
  const std::size_t total = cells.size() * reps;
  std::vector<std::vector<CellMetrics>> results(total);

  unsigned workers = config.threads ? config.threads
                                    : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(
      std::min<std::size_t>(workers, std::max<std::size_t>(total, 1)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (;;) {
      const std::size_t g = next.fetch_add(1);
      if (g >= total) return;
      try {
        const std::size_t cell = g / reps;
        results[g] = run_repetition(
            cells[cell], derive_seed(config.seed, kStreamRepetition, g % reps),
            rules, config.estimator);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::ofstream summary(config.out_summary);
  if (!summary.good()) {
    throw DataError("cannot write '" + config.out_summary + "'");
  }
  write_csv_row(summary,
                {"scenario", "p_a", "reps", "rule", "pi_hat_mean",
                 "n_m_hat_mean", "n_m_hat_median", "flr_true_mean",
                 "mmr_true_mean", "flr_hat_mean", "mmr_hat_mean"});
  for (std::size_t cell = 0; cell < cells.size(); ++cell) {
    const GeneratorSpec norm = cells[cell].normalized();
    const double n_a = static_cast<double>(norm.n_a);
    for (std::size_t ri = 0; ri < rules.size(); ++ri) {
      std::vector<double> n_m_hat, flr_hat, mmr_hat, flr_true, mmr_true;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        const CellMetrics& m = results[cell * reps + rep][ri];
        n_m_hat.push_back(m.n_m_hat);
        flr_hat.push_back(m.flr_hat);
        mmr_hat.push_back(m.mmr_hat);
        flr_true.push_back(m.flr_true);
        mmr_true.push_back(m.mmr_true);
      }
      write_csv_row(
          summary,
          {std::to_string(config.scenario), format_double(p_a_values[cell]),
           std::to_string(reps), rules[ri].name,
           format_double(mean_of(n_m_hat) / n_a),
           format_double(mean_of(n_m_hat)), format_double(median_of(n_m_hat)),
           format_double(mean_of(flr_true)), format_double(mean_of(mmr_true)),
           format_double(mean_of(flr_hat)), format_double(mean_of(mmr_hat))});
    }
  }
  summary.close();
  out << "wrote " << config.out_summary << " (" << cells.size() * rules.size()
      << " rows, " << total << " repetitions)\n";
  (void)err;
  return kExitOk;
}

}  // namespace

int run_link(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.file_a.empty() || config.file_b.empty() ||
      config.schema_path.empty()) {
    throw UsageError("link needs --file-a, --file-b and --schema");
  }
  const KeySchema schema = load_schema(config.schema_path);
  std::vector<std::string> warnings;
  std::vector<KeyRecord> a = ingest_csv(config.file_a, schema, &warnings);
  std::vector<KeyRecord> b = ingest_csv(config.file_b, schema, &warnings);
  if (!warnings.empty()) {
    err << warnings.size() << " row(s) ingested with degraded fields\n";
  }
  a = dedup_keys(a);
  b = dedup_keys(b);
  const PatternTable space = build_comparison_space(a, b, config.threads);
  const FitResult fit = fit_unsupervised(space, a, b, config.estimator);
  for (const auto& w : fit.warnings) err << "warning: " << w << "\n";

  MecSet set;
  double flr_hat;
  json threshold;  // null unless a target was requested
  if (config.target_flr) {
    FlrSearchResult res =
        flr_target_search(space, fit.params, *config.target_flr);
    set = std::move(res.set);
    flr_hat = res.flr_hat;
    threshold = res.threshold;
  } else {
    set = fit.final_set;
    flr_hat = flr_estimate(set);
  }

  if (!config.out_links.empty()) {
    std::ofstream links(config.out_links);
    if (!links.good()) {
      throw DataError("cannot write '" + config.out_links + "'");
    }
    write_links_csv(set, space, links);
  }

  json metrics;
  metrics["n_hat_m"] = fit.params.n_m;
  metrics["flr_hat"] = flr_hat;
  metrics["mmr_hat"] =
      fit.params.n_m > 0.0 ? mmr_estimate(set, fit.params.n_m) : 1.0;
  metrics["entropy"] = set.empty() ? 0.0 : entropy(set).value;
  metrics["threshold"] = threshold;
  metrics["iterations"] = fit.iterations;
  metrics["converged"] = fit.converged;
  if (config.timestamp) metrics["generated_at"] = iso_now();
  if (!config.out_metrics.empty()) {
    write_json_file(metrics, config.out_metrics);
  }

  out << "linked " << set.size() << " pair(s), expected match count "
      << format_double(fit.params.n_m) << "\n";
  if (!fit.converged) {
    err << "estimation did not converge within "
        << config.estimator.max_outer_iter << " iterations\n";
    return kExitNoConvergence;
  }
  return kExitOk;
}

int run_evaluate(const RunConfig& config, std::ostream& out,
                 std::ostream& err) {
  (void)err;
  if (config.links_path.empty() || config.truth_path.empty()) {
    throw UsageError("evaluate needs --links and --truth");
  }
  const CsvTable table = read_csv(config.links_path);
  if (table.header.size() < 2 || table.header[0] != "a_id" ||
      table.header[1] != "b_id") {
    throw DataError(config.links_path + ": expected a links CSV starting with "
                                        "a_id,b_id columns");
  }
  const TruthPairs truth = read_truth_csv(config.truth_path);
  std::set<std::pair<std::string, std::string>> truth_set(truth.begin(),
                                                          truth.end());
  std::size_t found = 0;
  for (const auto& row : table.rows) {
    if (truth_set.count({row[0], row[1]})) found++;
  }
  const std::size_t n_links = table.rows.size();
  json metrics;
  metrics["flr_true"] =
      n_links == 0 ? 0.0
                   : static_cast<double>(n_links - found) /
                         static_cast<double>(n_links);
  metrics["mmr_true"] =
      truth.empty() ? 0.0
                    : 1.0 - static_cast<double>(found) /
                                static_cast<double>(truth.size());
  if (config.timestamp) metrics["generated_at"] = iso_now();
  if (config.out_metrics.empty()) {
    throw UsageError("evaluate needs --out-metrics");
  }
  write_json_file(metrics, config.out_metrics);
  out << "evaluated " << n_links << " link(s) against " << truth.size()
      << " labelled match(es)\n";
  return kExitOk;
}

int run_simulate(const RunConfig& config, std::ostream& out,
                 std::ostream& err) {
  return run_study(config, {config.p_a}, out, err);
}

int run_sweep(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return run_study(config, config.p_a_list, out, err);
}

int run_command(const RunConfig& config, std::ostream& out,
                std::ostream& err) {
  try {
    if (config.command == "link") return run_link(config, out, err);
    if (config.command == "simulate") return run_simulate(config, out, err);
    if (config.command == "evaluate") return run_evaluate(config, out, err);
    if (config.command == "sweep") return run_sweep(config, out, err);
    throw UsageError("unknown command '" + config.command + "'");
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace mecrl
