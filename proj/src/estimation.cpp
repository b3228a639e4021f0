#include "mecrl/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>

#include "mecrl/csv.hpp"

namespace mecrl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp_prob(double p) {
  return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

// Agreement pattern of one concrete pair, located through the per-pattern
// pair lists (sorted by id rank, so each lookup is a binary search).
std::optional<PatternBits> pattern_of_pair(const PatternTable& space,
                                           std::uint32_t a_index,
                                           std::uint32_t b_index) {
  const auto key = std::make_pair(space.a_rank(a_index), space.b_rank(b_index));
  for (const auto& entry : space.patterns()) {
    auto it = std::lower_bound(
        entry.pairs.begin(), entry.pairs.end(), key,
        [&](const std::pair<std::uint32_t, std::uint32_t>& pr,
            const std::pair<std::uint32_t, std::uint32_t>& k) {
          return std::make_pair(space.a_rank(pr.first),
                                space.b_rank(pr.second)) < k;
        });
    if (it != entry.pairs.end() && it->first == a_index &&
        it->second == b_index) {
      return entry.bits;
    }
  }
  return std::nullopt;
}

// Patterns of the labelled pairs that exist in the space.
std::vector<PatternBits> labelled_patterns(const PatternTable& space,
                                           const TruthPairs& truth) {
  std::vector<PatternBits> out;
  out.reserve(truth.size());
  for (const auto& [aid, bid] : truth) {
    const int ai = space.find_a(aid);
    const int bi = space.find_b(bid);
    if (ai < 0 || bi < 0) continue;
    if (auto bits = pattern_of_pair(space, static_cast<std::uint32_t>(ai),
                                    static_cast<std::uint32_t>(bi))) {
      out.push_back(*bits);
    }
  }
  return out;
}

std::vector<double> theta_from_patterns(const std::vector<PatternBits>& pats,
                                        std::size_t field_count, bool clamp) {
  std::vector<double> theta(field_count, 0.0);
  for (PatternBits bits : pats) {
    for (std::size_t k = 0; k < field_count; ++k) {
      if ((bits >> k) & 1u) theta[k] += 1.0;
    }
  }
  for (auto& v : theta) {
    v /= static_cast<double>(pats.size());
    if (clamp) v = clamp_prob(v);
  }
  return theta;
}

// Sum of log ratios of a link set under fresh parameters (the stored per-link
// r belongs to the parameters the set was built with).
double sum_log_ratio(const MecSet& set, const LinkageParams& params) {
  std::map<PatternBits, double> cache;
  double sum = 0.0;
  for (const auto& link : set.links) {
    auto it = cache.find(link.pattern);
    if (it == cache.end()) {
      it = cache.emplace(link.pattern, std::log(ratio(link.pattern, params)))
               .first;
    }
    sum += it->second;
  }
  return sum;
}

}  // namespace

std::vector<double> theta_update_mec(const MecSet& set,
                                     std::size_t field_count) {
  if (set.empty()) {
    throw UsageError("theta update over an empty link set");
  }
  std::vector<PatternBits> pats;
  pats.reserve(set.size());
  for (const auto& link : set.links) pats.push_back(link.pattern);
  return theta_from_patterns(pats, field_count, /*clamp=*/true);
}

std::vector<double> theta_update_wj(const PatternTable& space,
                                    const LinkageParams& params) {
  const std::size_t K = space.field_count();
  std::vector<double> agree(K, 0.0);
  double mass = 0.0;
  for (const auto& entry : space.patterns()) {
    const double w = static_cast<double>(entry.count()) *
                     match_posterior(entry.bits, params);
    mass += w;
    for (std::size_t k = 0; k < K; ++k) {
      if ((entry.bits >> k) & 1u) agree[k] += w;
    }
  }
  if (!(mass > 0.0)) {
    throw UsageError("posterior-weighted theta update has zero posterior mass");
  }
  for (auto& v : agree) v = clamp_prob(v / mass);
  return agree;
}

std::vector<double> theta_update_wj_labeled(const PatternTable& space,
                                            const TruthPairs& truth) {
  const auto pats = labelled_patterns(space, truth);
  if (pats.empty()) {
    throw UsageError("no labelled pairs present in the comparison space");
  }
  return theta_from_patterns(pats, space.field_count(), /*clamp=*/true);
}

std::vector<double> xi_empirical(const PatternTable& space) {
  const double n = static_cast<double>(space.total_pairs());
  std::vector<double> xi(space.field_count());
  for (std::size_t k = 0; k < xi.size(); ++k) {
    xi[k] = clamp_prob(static_cast<double>(space.marginal_agree(k)) / n);
  }
  return xi;
}

std::vector<std::vector<double>> mkd_empirical(
    const std::vector<KeyRecord>& records,
    const std::vector<std::uint32_t>& min_cardinality) {
  if (records.empty()) {
    throw UsageError("category frequencies of an empty record file");
  }
  const std::size_t K = records[0].values.size();
  std::vector<std::vector<double>> m(K);
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t width = k < min_cardinality.size() ? min_cardinality[k] : 0;
    for (const auto& rec : records) {
      width = std::max<std::size_t>(width, rec.values[k]);
    }
    m[k].assign(width, 0.0);
    double observed = 0.0;
    for (const auto& rec : records) {
      const Category v = rec.values[k];
      if (v == kMissing) continue;
      m[k][v - 1] += 1.0;
      observed += 1.0;
    }
    if (observed > 0.0) {
      for (auto& w : m[k]) w /= observed;
    }
  }
  return m;
}

ProfileEmResult xi_profile_em(const std::vector<KeyRecord>& larger,
                              const std::vector<std::vector<double>>& m_kd,
                              double p, std::size_t smaller_size,
                              const EstimatorConfig& config) {
  if (larger.empty() || smaller_size == 0) {
    throw UsageError("profiled xi needs records on both sides");
  }
  const std::size_t K = m_kd.size();
  const double n_s = static_cast<double>(smaller_size);

  // match-component frequencies, widened to cover the larger file's values
  std::vector<std::vector<double>> m_hat = m_kd;
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t width = m_hat[k].size();
    for (const auto& rec : larger) {
      width = std::max<std::size_t>(width, rec.values[k]);
    }
    m_hat[k].resize(width, 0.0);
  }

  ProfileEmResult res;
  // fresh start from the larger file's own value frequencies
  res.u_kd = mkd_empirical(larger, [&] {
    std::vector<std::uint32_t> widths(K);
    for (std::size_t k = 0; k < K; ++k) {
      widths[k] = static_cast<std::uint32_t>(m_hat[k].size());
    }
    return widths;
  }());

  const double log_p = std::log(p);
  const double log_q = std::log(1.0 - p);
  std::vector<double> delta(larger.size(), 0.0);

  for (int iter = 0; iter < config.inner_em_max_iter; ++iter) {
    // observed-data log likelihood at the current parameters
    double loglik = 0.0;
    for (std::size_t b = 0; b < larger.size(); ++b) {
      double lm = log_p, lu = log_q;
      for (std::size_t k = 0; k < K; ++k) {
        const Category v = larger[b].values[k];
        if (v == kMissing) continue;
        lm += std::log(m_hat[k][v - 1]);
        lu += std::log(res.u_kd[k][v - 1]);
      }
      const double hi = std::max(lm, lu);
      if (hi == -kInf) {
        delta[b] = 0.0;  // both components vanish: call it unmatched
        loglik += -kInf;
        continue;
      }
      const double lse = hi + std::log(std::exp(lm - hi) + std::exp(lu - hi));
      loglik += lse;
      delta[b] = std::exp(lm - lse);
    }
    res.loglik_trace.push_back(loglik);
    res.iterations = iter + 1;

    // M-step with per-field denominators so missing values drop out
    bool all_matched = true;
    for (double d : delta) {
      if (d <= 1.0 - 1e-12) {
        all_matched = false;
        break;
      }
    }
    if (all_matched) {
      res.degenerate = true;
      res.u_kd = m_hat;  // no unmatched mass left to estimate from
      break;
    }

    double max_step = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<double> next(m_hat[k].size(), 0.0);
      double denom = 0.0;
      for (std::size_t b = 0; b < larger.size(); ++b) {
        const Category v = larger[b].values[k];
        if (v == kMissing) continue;
        next[v - 1] += 1.0 - delta[b];
        denom += 1.0 - delta[b];
      }
      if (denom > 0.0) {
        for (auto& w : next) w /= denom;
        for (std::size_t d = 0; d < next.size(); ++d) {
          max_step = std::max(max_step, std::fabs(next[d] - res.u_kd[k][d]));
        }
        res.u_kd[k] = std::move(next);
      }
    }
    if (max_step < config.inner_em_tol) break;
  }

  res.xi.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    double cross = 0.0, self = 0.0;
    for (std::size_t d = 0; d < m_hat[k].size(); ++d) {
      cross += res.u_kd[k][d] * m_hat[k][d];
      self += m_hat[k][d] * m_hat[k][d];
    }
    const double xi =
        ((1.0 - p) * cross + p * (1.0 - 1.0 / n_s) * self) / (1.0 - p / n_s);
    res.xi[k] = clamp_prob(xi);
  }
  return res;
}

namespace {

struct XiEngine {
  const PatternTable& space;
  const std::vector<KeyRecord>& a;
  const std::vector<KeyRecord>& b;
  const EstimatorConfig& config;
  std::vector<double> cached_empirical;
  std::vector<std::vector<double>> m_kd;  // smaller file, profile rule only
  const std::vector<KeyRecord>* larger = nullptr;
  std::size_t smaller_size = 0;

  XiEngine(const PatternTable& s, const std::vector<KeyRecord>& ra,
           const std::vector<KeyRecord>& rb, const EstimatorConfig& cfg)
      : space(s), a(ra), b(rb), config(cfg) {
    if (config.xi_rule == XiRule::kEmpirical) {
      cached_empirical = xi_empirical(space);
      return;
    }
    if (a.size() != space.size_a() || b.size() != space.size_b() ||
        a.empty() || b.empty()) {
      throw UsageError(
          "profiled xi rule needs the key records behind the comparison space");
    }
    const bool a_smaller = a.size() <= b.size();
    larger = a_smaller ? &b : &a;
    const std::vector<KeyRecord>& smaller = a_smaller ? a : b;
    smaller_size = smaller.size();

    // frequency arrays sized by the values seen in either file
    std::vector<std::uint32_t> widths(space.field_count(), 0);
    for (const auto* file : {&a, &b}) {
      for (const auto& rec : *file) {
        for (std::size_t k = 0; k < widths.size(); ++k) {
          widths[k] = std::max<std::uint32_t>(widths[k], rec.values[k]);
        }
      }
    }
    m_kd = mkd_empirical(smaller, widths);
  }

  std::vector<double> update(double n_m_latest) {
    if (config.xi_rule == XiRule::kEmpirical) return cached_empirical;
    const double p =
        std::clamp(n_m_latest / static_cast<double>(larger->size()), 0.0, 1.0);
    return xi_profile_em(*larger, m_kd, p, smaller_size, config).xi;
  }
};

}  // namespace

FitResult fit_unsupervised(const PatternTable& space,
                           const std::vector<KeyRecord>& a,
                           const std::vector<KeyRecord>& b,
                           const EstimatorConfig& config) {
  const std::size_t K = space.field_count();
  std::vector<double> theta = config.theta_init;
  if (theta.empty()) {
    theta.assign(K, 0.9);
  } else if (theta.size() != K) {
    throw UsageError("theta_init has " + std::to_string(theta.size()) +
                     " entries for " + std::to_string(K) + " key fields");
  }

  FitResult fit;
  XiEngine xi_engine(space, a, b, config);
  const double n = static_cast<double>(space.total_pairs());

  MecSet current = maximal_mec(space);
  double n_m_prev = static_cast<double>(current.size());
  if (current.empty()) {
    fit.warnings.push_back(
        "maximal match set is empty; starting the substitution from a unit "
        "seed");
    n_m_prev = 1.0;
  }

  for (int t = 0; t < config.max_outer_iter; ++t) {
    const std::vector<double> xi = xi_engine.update(n_m_prev);
    std::vector<double> theta_prev = theta;
    if (t > 0) {
      if (config.theta_rule == ThetaRule::kMec) {
        theta = theta_update_mec(current, K);
      } else {
        LinkageParams wj;
        wj.theta = theta_prev;
        wj.xi = xi;
        wj.n_m = n_m_prev;
        wj.n = n;
        theta = theta_update_wj(space, wj);
      }
    }

    // expected-match substitution, slotting in the current set's size
    const double slot =
        t == 0 ? n_m_prev : static_cast<double>(current.size());
    LinkageParams params;
    params.theta = theta;
    params.xi = xi;
    params.n_m = slot;
    params.n = n;
    const double n_m = expected_matches(space, params);

    params.n_m = n_m;
    FitIteration it;
    it.t = t;
    it.theta = theta;
    it.xi = xi;
    it.n_m = n_m;
    it.m_size = current.size();
    it.entropy = n_m > 0.0 ? sum_log_ratio(current, params) / n_m : 0.0;

    const long long n_star = std::llround(n_m);
    bool collapsed = false;
    MecSet next;
    if (n_star >= 1) {
      next = mec_set_of_size(space, params, static_cast<std::size_t>(n_star));
      it.sum_log_r_next = sum_log_ratio(next, params);
      it.q_next = n_m > 0.0 ? it.sum_log_r_next / n_m : 0.0;
      it.precondition =
          it.q_next >= it.entropy - 1e-12 && it.sum_log_r_next > 0.0;
    } else {
      collapsed = true;
    }
    fit.trace.push_back(it);
    fit.iterations = t + 1;

    fit.params = params;
    if (collapsed) {
      fit.warnings.push_back(
          "expected match count collapsed below one; stopping with an empty "
          "link set");
      fit.converged = true;
      fit.final_set = std::move(next);  // never built, i.e. empty
      return fit;
    }

    if (t > 0) {
      const bool count_stable =
          std::llround(n_m) == std::llround(n_m_prev);
      double step = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        step = std::max(step, std::fabs(theta[k] - theta_prev[k]));
      }
      if (count_stable || step < config.epsilon) {
        fit.converged = true;
        fit.final_set = std::move(next);  // priced under the final parameters
        return fit;
      }
    }

    current = std::move(next);
    n_m_prev = n_m;
  }
  fit.warnings.push_back("estimation hit the outer iteration limit");
  fit.final_set = current;
  return fit;
}

LinkageParams fit_supervised(const PatternTable& space,
                             const TruthPairs& truth) {
  const auto pats = labelled_patterns(space, truth);
  if (pats.empty()) {
    throw UsageError("no labelled pairs present in the comparison space");
  }
  LinkageParams params;
  params.theta =
      theta_from_patterns(pats, space.field_count(), /*clamp=*/false);
  params.xi = xi_empirical(space);
  params.n_m = static_cast<double>(pats.size());
  params.n = static_cast<double>(space.total_pairs());
  return params;
}

std::vector<double> xi_from_labels(const PatternTable& space,
                                   const TruthPairs& truth) {
  const auto pats = labelled_patterns(space, truth);
  const double n = static_cast<double>(space.total_pairs());
  const double n_m = static_cast<double>(pats.size());
  if (n <= n_m) {
    throw UsageError("labels cover the whole space; no unmatched remainder");
  }
  std::vector<double> xi(space.field_count());
  for (std::size_t k = 0; k < xi.size(); ++k) {
    double matched_agree = 0.0;
    for (PatternBits bits : pats) {
      if ((bits >> k) & 1u) matched_agree += 1.0;
    }
    xi[k] = (static_cast<double>(space.marginal_agree(k)) - matched_agree) /
            (n - n_m);
  }
  return xi;
}

MomentAlpha moment_alpha(const PatternTable& space,
                         const std::vector<double>& xi_hat, double n_m_hat) {
  MomentAlpha res;
  const double n = static_cast<double>(space.total_pairs());
  res.alpha.resize(xi_hat.size());
  for (std::size_t k = 0; k < xi_hat.size(); ++k) {
    const double disagree =
        n - static_cast<double>(space.marginal_agree(k));
    const double denom = n_m_hat * (1.0 - xi_hat[k]);
    double alpha;
    if (denom > 0.0) {
      alpha = 1.0 - (n * (1.0 - xi_hat[k]) - disagree) / denom;
    } else {
      alpha = 1.0;  // no match signal to attribute the disagreements to
    }
    if (alpha < 0.0 || alpha > 1.0) res.clamped_fields.push_back(k);
    res.alpha[k] = std::clamp(alpha, 0.0, 1.0);
  }
  res.note =
      "moment estimate divides by n_m (1 - xi); treat small-denominator "
      "fields with caution";
  return res;
}

MomentNm moment_nm(const PatternTable& space,
                   const std::vector<double>& xi_hat) {
  MomentNm res;
  const double n = static_cast<double>(space.total_pairs());
  const std::size_t cap = std::min(space.size_a(), space.size_b());
  std::vector<double> disagree(xi_hat.size());
  for (std::size_t k = 0; k < xi_hat.size(); ++k) {
    disagree[k] = n - static_cast<double>(space.marginal_agree(k));
  }
  double best = 0.0;
  std::size_t best_x = 0;
  bool flat = false;
  for (std::size_t x = 0; x <= cap; ++x) {
    double obj = 0.0;
    for (std::size_t k = 0; k < xi_hat.size(); ++k) {
      const double d =
          disagree[k] - (n - static_cast<double>(x)) * (1.0 - xi_hat[k]);
      obj += d * d;
    }
    if (x == 0) {
      best = obj;
      continue;
    }
    const double tol = 1e-9 * std::max(1.0, best);
    if (obj < best - tol) {
      best = obj;
      best_x = x;
      flat = false;
    } else if (obj <= best + tol) {
      flat = true;  // another integer achieves the minimum within tolerance
    }
  }
  res.n_m = static_cast<double>(best_x);
  res.flat = flat;
  return res;
}

MonotonicityReport entropy_monotone_check(const FitResult& fit) {
  MonotonicityReport report;
  for (std::size_t t = 0; t + 1 < fit.trace.size(); ++t) {
    if (!fit.trace[t].precondition) {
      report.skipped++;
      continue;
    }
    report.checked++;
    const double d_t = fit.trace[t].entropy;
    const double d_next = fit.trace[t + 1].entropy;
    if (d_next < d_t - 1e-9) {
      report.violations.push_back({fit.trace[t].t, d_t, d_next});
    }
  }
  return report;
}

void write_trace_csv(const FitResult& fit, std::ostream& out) {
  const std::size_t K = fit.trace.empty() ? 0 : fit.trace[0].theta.size();
  std::vector<std::string> row{"iteration", "n_m", "entropy"};
  for (std::size_t k = 1; k <= K; ++k) row.push_back("theta_" + std::to_string(k));
  for (std::size_t k = 1; k <= K; ++k) row.push_back("xi_" + std::to_string(k));
  write_csv_row(out, row);
  for (const auto& it : fit.trace) {
    row.clear();
    row.push_back(std::to_string(it.t));
    row.push_back(format_double(it.n_m));
    row.push_back(format_double(it.entropy));
    for (double v : it.theta) row.push_back(format_double(v));
    for (double v : it.xi) row.push_back(format_double(v));
    write_csv_row(out, row);
  }
}

}  // namespace mecrl
