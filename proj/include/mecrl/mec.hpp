#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mecrl/model.hpp"

namespace mecrl {

struct MecLink {
  std::uint32_t a_index = 0;
  std::uint32_t b_index = 0;
  PatternBits pattern = 0;
  double r = 0.0;  // NaN in parameter-free sets (maximal_mec)
  double g = 0.0;
};

// A one-to-one link set, links held in construction order: likelihood ratio
// descending, ties broken by (a id, b id) ascending. Every stop rule yields
// a prefix of the same greedy scan, so narrower sets are prefixes of wider
// ones built under the same parameters.
struct MecSet {
  std::vector<MecLink> links;

  std::size_t size() const { return links.size(); }
  bool empty() const { return links.empty(); }
};

// The maximal match set: pairs that agree on every field and are each
// other's only full-agreement partner. Parameter-free (r, g = NaN). May be
// empty.
MecSet maximal_mec(const PatternTable& space);

// Greedy one-to-one set of (up to) n_star links in ratio-descending order.
// Returns fewer links only when the scan exhausts the space (every remaining
// pair shares a record with an accepted link).
MecSet mec_set_of_size(const PatternTable& space, const LinkageParams& params,
                       std::size_t n_star);

// Same greedy scan restricted to pairs with r >= threshold; no size cap.
MecSet mec_set_by_threshold(const PatternTable& space,
                            const LinkageParams& params, double threshold);

// Re-prices an existing set's r and g under the given parameters; link order
// and membership are unchanged.
MecSet with_params(const MecSet& set, const PatternTable& space,
                   const LinkageParams& params);

struct EntropyResult {
  double value = 0.0;       // mean log r over links with finite positive r
  std::size_t finite = 0;   // links contributing to the mean
  std::size_t infinite = 0; // links with r = +inf, reported separately
  std::size_t zero = 0;     // links with r = 0 (log undefined), ditto
};

// Average link entropy (1/|M|) sum log r. Throws UsageError on an empty set.
// Links with infinite or zero ratio are counted apart so they do not poison
// the finite mean.
EntropyResult entropy(const MecSet& set);

// Estimated false-link rate psi = (1/|M|) sum (1 - g); 0 for an empty set.
double flr_estimate(const MecSet& set);

// Estimated missing-match rate tau = 1 - (sum g)/n_m_hat. Throws UsageError
// when n_m_hat <= 0.
double mmr_estimate(const MecSet& set, double n_m_hat);

struct FlrSearchResult {
  double threshold = 0.0;
  MecSet set;
  double flr_hat = 0.0;
};

// Largest threshold set whose estimated FLR is <= target, searching the
// finite grid of distinct pattern ratios from the smallest threshold up.
// If no threshold meets the target, returns the highest-threshold
// (smallest) set with its achieved FLR. Requires 0 < target < 1 and a
// non-empty space (UsageError otherwise).
FlrSearchResult flr_target_search(const PatternTable& space,
                                  const LinkageParams& params, double target);

// Truth labels as (a id, b id) pairs.
using TruthPairs = std::vector<std::pair<std::string, std::string>>;

struct ErrorRates {
  double flr = 0.0;
  double mmr = 0.0;
};

// True error rates of a link set against labels: FLR = fraction of links not
// in truth (0 for an empty set), MMR = 1 - (true links found)/n_m_true
// (0 when n_m_true = 0).
ErrorRates true_error_rates(const MecSet& set, const PatternTable& space,
                            const TruthPairs& truth, double n_m_true);

// Sum of posteriors of the links in `wide` but not in `narrow` — the
// estimated matches forgone by preferring the narrower set. Both sets must
// come from the same space and `narrow` must be a subset of `wide`
// (UsageError otherwise).
double missing_match_delta(const MecSet& wide, const MecSet& narrow);

// links CSV: a_id,b_id,pattern_bits,ratio,posterior.
void write_links_csv(const MecSet& set, const PatternTable& space,
                     std::ostream& out);

}  // namespace mecrl
