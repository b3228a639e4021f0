#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mecrl/mec.hpp"
#include "mecrl/model.hpp"
#include "mecrl/types.hpp"

namespace mecrl {

enum class ThetaRule { kMec, kWj };
enum class XiRule { kEmpirical, kProfileEm };

struct EstimatorConfig {
  ThetaRule theta_rule = ThetaRule::kMec;
  XiRule xi_rule = XiRule::kProfileEm;
  std::vector<double> theta_init;  // empty -> all fields 0.9
  double epsilon = 1e-6;           // sup-norm theta stop
  int max_outer_iter = 200;
  double inner_em_tol = 1e-8;
  int inner_em_max_iter = 100;
};

// One outer iteration of the unsupervised fit. `entropy` is the average link
// entropy D(t) of the current set under the fresh parameters, normalized by
// the substituted expected match count. `q_next`/`sum_log_r_next` describe
// the next set under the *current* parameters: together they decide whether
// the monotonicity precondition held for the t -> t+1 transition.
struct FitIteration {
  int t = 0;
  std::vector<double> theta;
  std::vector<double> xi;
  double n_m = 0.0;         // substituted expected match count at t
  std::size_t m_size = 0;   // |M(t)|
  double entropy = 0.0;     // D(t)
  double q_next = 0.0;
  double sum_log_r_next = 0.0;
  bool precondition = false;
};

struct FitResult {
  LinkageParams params;
  std::vector<FitIteration> trace;
  bool converged = false;
  int iterations = 0;
  MecSet final_set;  // the current MEC set at termination
  std::vector<std::string> warnings;
};

// Per-field agreement frequencies over a link set (Eq.-style empirical
// distribution of the matched patterns), clamped into the open interval.
std::vector<double> theta_update_mec(const MecSet& set, std::size_t field_count);

// Posterior-weighted agreement frequencies over the whole space,
// theta_k = sum n(g) ghat(g) gamma_k / sum n(g) ghat(g), clamped. Requires a
// strictly positive posterior mass (UsageError otherwise).
std::vector<double> theta_update_wj(const PatternTable& space,
                                    const LinkageParams& params);

// theta_update_wj with binary 0/1 weights given by labels; integer counting,
// so a labelled run and theta_update_mec over the same links coincide
// exactly.
std::vector<double> theta_update_wj_labeled(const PatternTable& space,
                                            const TruthPairs& truth);

// xi_k = n(1;k)/n over the whole space, clamped.
std::vector<double> xi_empirical(const PatternTable& space);

// Per-field category frequencies of the non-missing values of `records`
// (the smaller file provides the match-component estimate m_kd). Arrays are
// sized by the larger of `min_cardinality[k]` and the maximum observed
// category.
std::vector<std::vector<double>> mkd_empirical(
    const std::vector<KeyRecord>& records,
    const std::vector<std::uint32_t>& min_cardinality = {});

struct ProfileEmResult {
  std::vector<std::vector<double>> u_kd;
  std::vector<double> xi;
  std::vector<double> loglik_trace;  // observed-data log likelihood, one per
                                     // inner iteration; non-decreasing
  int iterations = 0;
  bool degenerate = false;  // every record classified as a match; u := m
};

// Non-match agreement probabilities by profiling out the value distribution
// of the larger file: an inner EM over `larger` with mixing weight p held
// fixed estimates the non-match category frequencies u_kd, then
//   xi_k = [(1-p) sum_d u_kd mhat_kd + p (1 - 1/n_small) sum_d mhat_kd^2]
//          / (1 - p/n_small),
// clamped. `m_kd` are the smaller file's frequencies and `smaller_size` its
// record count.
ProfileEmResult xi_profile_em(const std::vector<KeyRecord>& larger,
                              const std::vector<std::vector<double>>& m_kd,
                              double p, std::size_t smaller_size,
                              const EstimatorConfig& config);

// Alternating MEC estimation: start from the maximal match set, then cycle
// xi update, theta update, expected-match substitution, and a fresh greedy
// set of the substituted size, until the rounded match count or the theta
// vector stabilizes.
FitResult fit_unsupervised(const PatternTable& space,
                           const std::vector<KeyRecord>& a,
                           const std::vector<KeyRecord>& b,
                           const EstimatorConfig& config);

// Labelled fit: theta from the matched pairs' agreement frequencies
// (unclamped; perfect keys give theta = 1), xi from the whole space
// (clamped), n_m = number of labelled pairs present in the space.
LinkageParams fit_supervised(const PatternTable& space, const TruthPairs& truth);

// xi from the unmatched remainder U = O \ M (unclamped diagnostic
// estimator): xi_k = [n(1;k) - (matched pairs agreeing on k)] / (n - n_m).
std::vector<double> xi_from_labels(const PatternTable& space,
                                   const TruthPairs& truth);

struct MomentAlpha {
  std::vector<double> alpha;  // clamped to [0, 1]
  std::vector<std::size_t> clamped_fields;
  // The estimator divides by n_m (1 - xi_k); small denominators make it
  // unstable, so a caution always accompanies the numbers.
  std::string note;
};

// Method-of-moments perturbation rates from the pattern margins:
// alpha_k = 1 - [n (1 - xi_k) - n(0;k)] / [n_m (1 - xi_k)].
MomentAlpha moment_alpha(const PatternTable& space,
                         const std::vector<double>& xi_hat, double n_m_hat);

struct MomentNm {
  double n_m = 0.0;
  bool flat = false;  // multiple integer minimizers within tolerance
};

// Minimum-distance match-count estimate: integer n_m in [0, min(|A|, |B|)]
// minimizing sum_k [n(0;k) - (n - n_m)(1 - xi_k)]^2; smallest minimizer wins,
// ties flagged.
MomentNm moment_nm(const PatternTable& space, const std::vector<double>& xi_hat);

struct MonotonicityReport {
  struct Violation {
    int t = 0;
    double d_t = 0.0;
    double d_next = 0.0;
  };
  std::vector<Violation> violations;
  int checked = 0;  // transitions where the precondition held
  int skipped = 0;  // transitions where it did not
};

// Checks D(t+1) >= D(t) - 1e-9 across the trace, restricted to transitions
// whose recorded precondition held.
MonotonicityReport entropy_monotone_check(const FitResult& fit);

// Trace CSV: iteration,n_m,entropy,theta_1..K,xi_1..K.
void write_trace_csv(const FitResult& fit, std::ostream& out);

}  // namespace mecrl
