#pragma once

// Canonical single-field 20x20 instances with known closed-form behavior,
// shared by the unit and acceptance suites. Built from explicit pattern
// matrices: n = 400 pairs, truth = the diagonal (n_m = 20), K = 1.
//
//   perfect:   all 20 matches agree, no non-match agrees.
//   miss4:     4 matches have a damaged key (d = 4 disagree), no non-match
//              agrees. Supervised theta = 0.8, posterior at gamma=0 is
//              4/384, the maximal set has 16 links, its MMR is 4/20.
//   stray4:    all matches agree and 4 non-match pairs also agree
//              ((17,18),(18,17),(19,20),(20,19)). xi over U = 4/380, the
//              ratio at gamma=1 is 95 and the posterior 5/6.

#include <string>
#include <vector>

#include "mecrl/comparison.hpp"
#include "mecrl/mec.hpp"

namespace testinst {

inline std::vector<std::string> side_ids(char prefix, int count) {
  std::vector<std::string> ids;
  ids.reserve(count);
  for (int i = 1; i <= count; ++i) {
    // zero-padded so lexicographic order equals numeric order
    std::string n = std::to_string(i);
    ids.push_back(prefix + std::string(2 - n.size(), '0') + n);
  }
  return ids;
}

inline mecrl::TruthPairs diagonal_truth(int count) {
  mecrl::TruthPairs t;
  auto a = side_ids('a', count), b = side_ids('b', count);
  for (int i = 0; i < count; ++i) t.emplace_back(a[i], b[i]);
  return t;
}

enum class Closed { kPerfect, kMiss4, kStray4 };

inline mecrl::PatternTable closed_form_space(Closed kind) {
  const int n = 20;
  std::vector<std::vector<mecrl::PatternBits>> gamma(
      n, std::vector<mecrl::PatternBits>(n, 0));
  for (int i = 0; i < n; ++i) gamma[i][i] = 1;
  if (kind == Closed::kMiss4) {
    for (int i = 16; i < 20; ++i) gamma[i][i] = 0;
  }
  if (kind == Closed::kStray4) {
    gamma[16][17] = gamma[17][16] = 1;
    gamma[18][19] = gamma[19][18] = 1;
  }
  return mecrl::pattern_table_from_gammas(side_ids('a', n), side_ids('b', n), 1,
                                          gamma);
}

}  // namespace testinst
