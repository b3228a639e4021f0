// Command-line front end: probabilistic record linkage with one-to-one
// maximum-entropy link sets, plus the synthetic-data simulation driver.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mecrl/cli.hpp"

int main(int argc, char** argv) {
  mecrl::RunConfig cfg;
  std::string theta_rule = "mec";
  std::string xi_rule = "profile";
  bool no_timestamp = false;

  CLI::App app{"one-to-one record linkage with entropy-maximal link sets"};
  app.require_subcommand(1);

  auto* link = app.add_subcommand(
      "link", "estimate match parameters and write a one-to-one link set");
  link->add_option("--file-a", cfg.file_a, "left record file (CSV)")
      ->required();
  link->add_option("--file-b", cfg.file_b, "right record file (CSV)")
      ->required();
  link->add_option("--schema", cfg.schema_path, "key schema (JSON)")
      ->required();
  link->add_option("--theta-rule", theta_rule,
                   "match-parameter update: mec | wj");
  link->add_option("--xi-rule", xi_rule,
                   "unmatched-parameter update: profile | empirical");
  link->add_option("--target-flr", cfg.target_flr,
                   "pick the largest link set with estimated FLR <= target");
  link->add_option("--out-links", cfg.out_links, "output links CSV");
  link->add_option("--out-metrics", cfg.out_metrics, "output metrics JSON");

  auto* simulate = app.add_subcommand(
      "simulate", "run the synthetic-data study at one overlap");
  auto* sweep = app.add_subcommand(
      "sweep", "run the synthetic-data study over several overlaps");
  for (CLI::App* cmd : {simulate, sweep}) {
    cmd->add_option("--gen-spec", cfg.generator_spec_path,
                    "generator spec JSON (default: bundled spec)");
    cmd->add_option("--scenario", cfg.scenario, "1 or 2");
    cmd->add_option("--na", cfg.n_a, "records in file A");
    cmd->add_option("--nb", cfg.n_b, "records in file B");
    cmd->add_option("--alpha", cfg.alpha,
                    "perturbation rate: one value or one per key field")
        ->delimiter(',');
    cmd->add_option("--reps", cfg.repetitions, "repetitions per cell");
    cmd->add_option("--rules", cfg.rules,
                    "estimation rules: supervised, mec+profile, "
                    "mec+empirical, wj+empirical")
        ->delimiter(',');
    cmd->add_option("--out-summary", cfg.out_summary, "output summary CSV")
        ->required();
  }
  simulate->add_option("--pa", cfg.p_a, "expected overlap n_m / n_a");
  sweep->add_option("--pa-list", cfg.p_a_list, "overlaps to sweep")
      ->delimiter(',')
      ->required();

  auto* evaluate = app.add_subcommand(
      "evaluate", "score a links CSV against truth labels");
  evaluate->add_option("--links", cfg.links_path, "links CSV")->required();
  evaluate->add_option("--truth", cfg.truth_path, "truth CSV (a_id,b_id)")
      ->required();
  evaluate->add_option("--out-metrics", cfg.out_metrics,
                       "output metrics JSON")
      ->required();

  for (CLI::App* cmd : {link, simulate, sweep, evaluate}) {
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_option("--threads", cfg.threads,
                    "worker threads (0 = all cores)");
    cmd->add_flag("--no-timestamp", no_timestamp,
                  "omit timestamps so reruns are byte-identical");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? mecrl::kExitOk : mecrl::kExitUsage;
  }

  for (const auto* cmd : {link, simulate, sweep, evaluate}) {
    if (app.got_subcommand(cmd)) cfg.command = cmd->get_name();
  }
  cfg.estimator.theta_rule = theta_rule == "wj" ? mecrl::ThetaRule::kWj
                                                : mecrl::ThetaRule::kMec;
  cfg.estimator.xi_rule = xi_rule == "empirical" ? mecrl::XiRule::kEmpirical
                                                 : mecrl::XiRule::kProfileEm;
  if (theta_rule != "mec" && theta_rule != "wj") {
    std::cerr << "error: --theta-rule must be mec or wj\n";
    return mecrl::kExitUsage;
  }
  if (xi_rule != "profile" && xi_rule != "empirical") {
    std::cerr << "error: --xi-rule must be profile or empirical\n";
    return mecrl::kExitUsage;
  }
  cfg.timestamp = !no_timestamp;

  return mecrl::run_command(cfg, std::cout, std::cerr);
}
