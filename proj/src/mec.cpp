#include "mecrl/mec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "mecrl/csv.hpp"

namespace mecrl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct RatedPattern {
  double r = 0.0;
  const PatternEntry* entry = nullptr;
};

// Patterns ordered by likelihood ratio descending, ties by bits ascending so
// the grouping below is deterministic.
std::vector<RatedPattern> rate_patterns(const PatternTable& space,
                                        const LinkageParams& params) {
  std::vector<RatedPattern> rated;
  rated.reserve(space.patterns().size());
  for (const auto& entry : space.patterns()) {
    rated.push_back({ratio(entry.bits, params), &entry});
  }
  std::sort(rated.begin(), rated.end(),
            [](const RatedPattern& x, const RatedPattern& y) {
              if (x.r != y.r) return x.r > y.r;
              return x.entry->bits < y.entry->bits;
            });
  return rated;
}

// The single greedy scan behind every selection rule: walk patterns in ratio
// order, within an equal-ratio group walk pairs in (a id, b id) order, accept
// a pair iff both records are still free. Stops at `limit` accepted links or
// when the ratio falls below `threshold`.
MecSet greedy_scan(const PatternTable& space, const LinkageParams& params,
                   std::size_t limit, double threshold) {
  MecSet set;
  if (limit == 0) return set;
  const auto rated = rate_patterns(space, params);
  std::vector<char> used_a(space.size_a(), 0), used_b(space.size_b(), 0);

  std::size_t i = 0;
  while (i < rated.size()) {
    const double r = rated[i].r;
    if (r < threshold) break;  // sorted descending: nothing below qualifies
    std::size_t j = i;
    while (j < rated.size() && rated[j].r == r) ++j;

    auto accept = [&](const std::pair<std::uint32_t, std::uint32_t>& pr,
                      PatternBits bits) {
      if (used_a[pr.first] || used_b[pr.second]) return false;
      used_a[pr.first] = used_b[pr.second] = 1;
      MecLink link;
      link.a_index = pr.first;
      link.b_index = pr.second;
      link.pattern = bits;
      link.r = r;
      link.g = match_posterior_from_ratio(r, params.n_m, params.n);
      set.links.push_back(link);
      return set.size() >= limit;
    };

    if (j == i + 1) {
      for (const auto& pr : rated[i].entry->pairs) {
        if (accept(pr, rated[i].entry->bits)) return set;
      }
    } else {
      // tied ratios across patterns: merge their pair lists into id order
      std::vector<std::pair<std::pair<std::uint32_t, std::uint32_t>,
                            PatternBits>> merged;
      for (std::size_t g = i; g < j; ++g) {
        for (const auto& pr : rated[g].entry->pairs) {
          merged.emplace_back(pr, rated[g].entry->bits);
        }
      }
      std::sort(merged.begin(), merged.end(),
                [&](const auto& x, const auto& y) {
                  const auto kx = std::make_pair(space.a_rank(x.first.first),
                                                 space.b_rank(x.first.second));
                  const auto ky = std::make_pair(space.a_rank(y.first.first),
                                                 space.b_rank(y.first.second));
                  return kx < ky;
                });
      for (const auto& [pr, bits] : merged) {
        if (accept(pr, bits)) return set;
      }
    }
    i = j;
  }
  return set;
}

}  // namespace

MecSet maximal_mec(const PatternTable& space) {
  MecSet set;
  const PatternBits full = space.all_agree_mask();
  const PatternEntry* entry = nullptr;
  for (const auto& e : space.patterns()) {
    if (e.bits == full) {
      entry = &e;
      break;
    }
  }
  if (!entry) return set;

  std::vector<std::uint32_t> degree_a(space.size_a(), 0),
      degree_b(space.size_b(), 0);
  for (const auto& pr : entry->pairs) {
    degree_a[pr.first]++;
    degree_b[pr.second]++;
  }
  for (const auto& pr : entry->pairs) {
    if (degree_a[pr.first] != 1 || degree_b[pr.second] != 1) continue;
    MecLink link;
    link.a_index = pr.first;
    link.b_index = pr.second;
    link.pattern = full;
    link.r = kNan;
    link.g = kNan;
    set.links.push_back(link);
  }
  return set;
}

MecSet mec_set_of_size(const PatternTable& space, const LinkageParams& params,
                       std::size_t n_star) {
  return greedy_scan(space, params, n_star, -kInf);
}

MecSet mec_set_by_threshold(const PatternTable& space,
                            const LinkageParams& params, double threshold) {
  return greedy_scan(space, params, std::numeric_limits<std::size_t>::max(),
                     threshold);
}

MecSet with_params(const MecSet& set, const PatternTable& space,
                   const LinkageParams& params) {
  (void)space;
  MecSet out = set;
  for (auto& link : out.links) {
    link.r = ratio(link.pattern, params);
    link.g = match_posterior_from_ratio(link.r, params.n_m, params.n);
  }
  return out;
}

EntropyResult entropy(const MecSet& set) {
  if (set.empty()) {
    throw UsageError("entropy of an empty link set is undefined");
  }
  EntropyResult res;
  double sum = 0.0;
  for (const auto& link : set.links) {
    if (std::isinf(link.r)) {
      res.infinite++;
    } else if (link.r > 0.0) {
      sum += std::log(link.r);
      res.finite++;
    } else {
      res.zero++;  // r = 0 or unpriced: log undefined
    }
  }
  if (res.finite > 0) res.value = sum / static_cast<double>(res.finite);
  return res;
}

double flr_estimate(const MecSet& set) {
  if (set.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& link : set.links) sum += 1.0 - link.g;
  return sum / static_cast<double>(set.size());
}

double mmr_estimate(const MecSet& set, double n_m_hat) {
  if (n_m_hat <= 0.0) {
    throw UsageError("missing-match rate needs a positive match-count estimate");
  }
  double sum = 0.0;
  for (const auto& link : set.links) sum += link.g;
  return 1.0 - sum / n_m_hat;
}

FlrSearchResult flr_target_search(const PatternTable& space,
                                  const LinkageParams& params, double target) {
  if (!(target > 0.0 && target < 1.0)) {
    throw UsageError("false-link-rate target must lie strictly in (0, 1)");
  }
  if (space.patterns().empty()) {
    throw UsageError("false-link-rate search over an empty comparison space");
  }
  // One full greedy scan; every threshold set is a prefix of it, cut at an
  // equal-ratio group boundary. Scan those boundaries for the longest prefix
  // whose estimated FLR stays within the target.
  const MecSet full = greedy_scan(
      space, params, std::numeric_limits<std::size_t>::max(), -kInf);

  FlrSearchResult res;
  if (full.empty()) {  // cannot happen with a non-empty space, but stay safe
    res.threshold = kInf;
    return res;
  }

  double loss = 0.0;  // running sum of (1 - g)
  std::size_t best_end = 0;
  double best_flr = 0.0;
  bool found = false;
  double first_flr = 0.0;
  std::size_t first_end = 0;
  for (std::size_t i = 0; i < full.links.size(); ++i) {
    loss += 1.0 - full.links[i].g;
    const bool group_end = i + 1 == full.links.size() ||
                           full.links[i + 1].r != full.links[i].r;
    if (!group_end) continue;
    const double flr = loss / static_cast<double>(i + 1);
    if (first_end == 0) {
      first_end = i + 1;
      first_flr = flr;
    }
    if (flr <= target) {
      found = true;
      best_end = i + 1;
      best_flr = flr;
    }
  }
  if (!found) {
    best_end = first_end;  // smallest set: honest miss at the top threshold
    best_flr = first_flr;
  }
  res.threshold = full.links[best_end - 1].r;
  res.flr_hat = best_flr;
  res.set.links.assign(full.links.begin(),
                       full.links.begin() + static_cast<std::ptrdiff_t>(best_end));
  return res;
}

ErrorRates true_error_rates(const MecSet& set, const PatternTable& space,
                            const TruthPairs& truth, double n_m_true) {
  std::set<std::pair<std::string, std::string>> labels(truth.begin(),
                                                       truth.end());
  std::size_t found = 0;
  for (const auto& link : set.links) {
    if (labels.count({space.a_id(link.a_index), space.b_id(link.b_index)})) {
      found++;
    }
  }
  ErrorRates er;
  if (!set.empty()) {
    er.flr = static_cast<double>(set.size() - found) /
             static_cast<double>(set.size());
  }
  if (n_m_true > 0.0) {
    er.mmr = 1.0 - static_cast<double>(found) / n_m_true;
  }
  return er;
}

double missing_match_delta(const MecSet& wide, const MecSet& narrow) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> wide_pairs;
  for (const auto& link : wide.links) {
    wide_pairs.emplace(link.a_index, link.b_index);
  }
  std::set<std::pair<std::uint32_t, std::uint32_t>> narrow_pairs;
  for (const auto& link : narrow.links) {
    if (!wide_pairs.count({link.a_index, link.b_index})) {
      throw UsageError("missing-match delta needs nested link sets");
    }
    narrow_pairs.emplace(link.a_index, link.b_index);
  }
  double delta = 0.0;
  for (const auto& link : wide.links) {
    if (!narrow_pairs.count({link.a_index, link.b_index})) delta += link.g;
  }
  return delta;
}

void write_links_csv(const MecSet& set, const PatternTable& space,
                     std::ostream& out) {
  write_csv_row(out, {"a_id", "b_id", "pattern_bits", "ratio", "posterior"});
  for (const auto& link : set.links) {
    write_csv_row(out, {space.a_id(link.a_index), space.b_id(link.b_index),
                        std::to_string(link.pattern), format_double(link.r),
                        format_double(link.g)});
  }
}

}  // namespace mecrl
