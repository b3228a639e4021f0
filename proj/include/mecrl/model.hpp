#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mecrl/comparison.hpp"
#include "mecrl/types.hpp"

namespace mecrl {

// Parameters of the two-component conditional-independence mixture over
// agreement patterns: per-field agreement probabilities theta (matches) and
// xi (non-matches), the expected match count n_m, and the total pair count
// n. The iterative estimators keep theta and xi inside
// [kProbFloor, 1 - kProbFloor]; boundary values (theta_k = 1, xi_k = 0) are
// permitted here for supervised and diagnostic use.
struct LinkageParams {
  std::vector<double> theta;
  std::vector<double> xi;
  double n_m = 0.0;
  double n = 0.0;

  std::size_t field_count() const { return theta.size(); }
  double prevalence() const { return n > 0 ? n_m / n : 0.0; }
};

inline constexpr double kProbFloor = 1e-6;

// log prod_k p_k^{gamma_k} (1-p_k)^{1-gamma_k}; -inf when a factor is 0.
double log_pattern_prob(PatternBits bits, const std::vector<double>& probs);
double m_prob(PatternBits bits, const LinkageParams& params);
double u_prob(PatternBits bits, const LinkageParams& params);

// Likelihood ratio r = m/u, computed in log space. u = 0 with m > 0 gives
// +inf; m = 0 gives 0.
double ratio(PatternBits bits, const LinkageParams& params);

// Match posterior g = n_m r / (n_m (r - 1) + n), clamped to [0, 1].
// r = +inf -> 1 (when n_m > 0), r = 0 -> 0, n_m <= 0 -> 0 for finite r.
double match_posterior_from_ratio(double r, double n_m, double n);
double match_posterior(PatternBits bits, const LinkageParams& params);

// Sum of match posteriors over the whole comparison space,
// sum_gamma n(gamma) g(gamma). Equals params.n_m exactly when theta == xi.
double expected_matches(const PatternTable& space, const LinkageParams& params);

struct FixedPointResult {
  double n_m = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Successive substitution of n_m -> expected_matches until the step is below
// `tol`. Iterates are clamped to [0, min(|A|, |B|)]. With theta == xi every
// point is a fixed point and the initial value is returned unchanged. An
// iterate stuck at the capacity bound with expected_matches still above it is
// stationary only because of the clamp, so it is reported as not converged.
FixedPointResult solve_fixed_point(const PatternTable& space,
                                   const std::vector<double>& theta,
                                   const std::vector<double>& xi,
                                   double n_m_init, double tol = 1e-6,
                                   int max_iter = 10000);

// Empirical-frame objectives for a labelled match set M (given as the
// multiset of its patterns):
//   q_f = sum_{S(M)} fhat(g) r_f(g) - (1/n_m) sum_M log r_f(g),
//         with r_f = m(g;theta)/fhat(g), fhat the pattern EDF over the space;
//   q   = the same with uhat, the EDF over the unmatched remainder, in place
//         of fhat. q is undefined (nullopt) when some matched pattern has no
//         unmatched mass (uhat = 0).
struct SupervisedObjectives {
  double q_f = 0.0;
  std::optional<double> q;
};
SupervisedObjectives supervised_objectives(
    const std::vector<PatternBits>& matched_patterns, const PatternTable& space,
    const std::vector<double>& theta);

}  // namespace mecrl
