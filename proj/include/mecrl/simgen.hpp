#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mecrl/mec.hpp"
#include "mecrl/rng.hpp"
#include "mecrl/schema.hpp"
#include "mecrl/types.hpp"

namespace mecrl {

// One clause of the informative-selection filter, evaluated on true
// (pre-perturbation) category values.
struct FilterClause {
  enum class Op { kEq, kNe, kLe, kLt, kGe, kGt, kOdd, kEven };
  std::string field;
  Op op = Op::kEq;
  std::uint32_t value = 0;  // unused for kOdd/kEven
};

// Synthetic-data generator configuration. File sizes are swap-normalized so
// that n_a <= n_b.
struct GeneratorSpec {
  KeySchema schema;
  // Per field: category weights, length D_k (normalized on validation).
  std::vector<std::vector<double>> category_dists;
  // Per field: probability that a matched pair disagrees due to noise.
  // Applied per side with rate 1 - sqrt(1 - alpha), so the pairwise
  // perturbation probability is exactly alpha.
  std::vector<double> alpha;
  std::uint32_t n_a = 500;
  std::uint32_t n_b = 1000;
  double p_a = 0.8;  // overlap: scenario 1 E(n_m) = n_a p_a, scenario 2
                     // fixed n_m = round(n_a p_a)
  int scenario = 1;
  std::vector<FilterClause> informative_filter;  // scenario 2 B-only records
  std::uint64_t seed = 1;

  void validate() const;  // also normalizes: see normalized()
  GeneratorSpec normalized() const;
};

// The bundled default: a 12-field key (two 4-part phonetic name codes, sex,
// day/month/year of birth), surname-like letter frequencies, alpha = 0.1
// everywhere, and a scenario-2 filter selecting female, born in or before
// 1970 (category 61), odd birth month.
GeneratorSpec default_generator_spec();

GeneratorSpec load_generator_spec(const std::string& path);
void save_generator_spec(const GeneratorSpec& spec, const std::string& path);

// `size` records with ids "P<index+1>" and i.i.d. category values; record i
// is drawn from its own counter stream derive_seed(seed, tag, i), so
// populations of different sizes share a prefix.
std::vector<KeyRecord> generate_population(std::size_t size,
                                           const GeneratorSpec& spec,
                                           std::uint64_t stream_tag = kStreamPopulation);

// Hit-miss redraw of one record: each field is independently replaced by a
// fresh draw from its category distribution with the per-side rate. Ids are
// never touched. Fields with alpha = 0 are returned verbatim.
KeyRecord perturb_hit_miss(const KeyRecord& record, const GeneratorSpec& spec,
                           SplitMix64& rng);

struct LinkageFiles {
  std::vector<KeyRecord> file_a;
  std::vector<KeyRecord> file_b;
  TruthPairs truth;  // (a id, b id) of every true match
};

// Scenario 1: a population of round(n_b/p_a) entities; A and B are
// independent without-replacement samples of sizes n_a and n_b, so the match
// count is random with mean n_a p_a. Both files are perturbed after
// selection.
LinkageFiles scenario_one(const GeneratorSpec& spec);

// Scenario 2: exactly round(n_a p_a) of A's entities also enter B; the
// remaining B records are drawn from entities that pass the informative
// filter on their true keys (filter with no satisfiable records -> DataError).
LinkageFiles scenario_two(const GeneratorSpec& spec);

LinkageFiles generate_scenario(const GeneratorSpec& spec);

void write_truth_csv(const TruthPairs& truth, const std::string& path);
TruthPairs read_truth_csv(const std::string& path);

}  // namespace mecrl
