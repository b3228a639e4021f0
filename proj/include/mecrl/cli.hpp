#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mecrl/estimation.hpp"
#include "mecrl/simgen.hpp"

namespace mecrl {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNoConvergence = 4;

struct RunConfig {
  std::string command;  // link | simulate | evaluate | sweep

  // link
  std::string file_a;
  std::string file_b;
  std::string schema_path;
  EstimatorConfig estimator;
  std::optional<double> target_flr;
  std::string out_links;
  std::string out_metrics;

  // simulate / sweep
  std::string generator_spec_path;  // empty -> bundled defaults
  int scenario = 1;
  std::uint32_t n_a = 500;
  std::uint32_t n_b = 1000;
  double p_a = 0.8;
  std::vector<double> p_a_list;  // sweep
  std::vector<double> alpha;     // scalar or per-field override
  int repetitions = 50;
  std::vector<std::string> rules;  // subset of {supervised, mec+profile,
                                   // mec+empirical, wj+empirical}
  std::string out_summary;
  unsigned threads = 0;

  // evaluate
  std::string links_path;
  std::string truth_path;

  std::uint64_t seed = 1;
  bool timestamp = true;  // --no-timestamp clears; keeps reruns byte-equal
};

// Each returns a process exit code and reports problems on `err`. Partial
// outputs are still written when estimation fails to converge (exit 4).
int run_link(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_sweep(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_command(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace mecrl
