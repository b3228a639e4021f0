#include "mecrl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mecrl/types.hpp"

namespace mecrl {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double log_pattern_prob(PatternBits bits, const std::vector<double>& probs) {
  double sum = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double p = ((bits >> k) & 1u) ? probs[k] : 1.0 - probs[k];
    sum += std::log(p);
  }
  return sum;
}

double m_prob(PatternBits bits, const LinkageParams& params) {
  return std::exp(log_pattern_prob(bits, params.theta));
}

double u_prob(PatternBits bits, const LinkageParams& params) {
  return std::exp(log_pattern_prob(bits, params.xi));
}

double ratio(PatternBits bits, const LinkageParams& params) {
  const double log_m = log_pattern_prob(bits, params.theta);
  if (log_m == -kInf) return 0.0;
  const double log_u = log_pattern_prob(bits, params.xi);
  if (log_u == -kInf) return kInf;
  return std::exp(log_m - log_u);
}

double match_posterior_from_ratio(double r, double n_m, double n) {
  if (n_m <= 0.0) return 0.0;
  if (std::isinf(r)) return 1.0;
  if (r <= 0.0) return 0.0;
  double g;
  if (r >= 1.0) {
    // divide through by r so huge ratios cannot overflow the denominator
    g = n_m / (n_m * (1.0 - 1.0 / r) + n / r);
  } else {
    g = n_m * r / (n_m * (r - 1.0) + n);
  }
  return std::clamp(g, 0.0, 1.0);
}

double match_posterior(PatternBits bits, const LinkageParams& params) {
  return match_posterior_from_ratio(ratio(bits, params), params.n_m, params.n);
}

double expected_matches(const PatternTable& space, const LinkageParams& params) {
  double total = 0.0;
  for (const auto& entry : space.patterns()) {
    total += static_cast<double>(entry.count()) *
             match_posterior(entry.bits, params);
  }
  return total;
}

FixedPointResult solve_fixed_point(const PatternTable& space,
                                   const std::vector<double>& theta,
                                   const std::vector<double>& xi,
                                   double n_m_init, double tol, int max_iter) {
  FixedPointResult res;
  if (theta == xi) {
    // every point is a fixed point of the substitution map; report the start
    res.n_m = n_m_init;
    res.converged = true;
    return res;
  }
  const double cap =
      static_cast<double>(std::min(space.size_a(), space.size_b()));
  // zero is always a (degenerate) fixed point; a strictly positive start lets
  // infinite-ratio mass pull the iterate away from it
  double x = std::clamp(n_m_init, 1e-12, cap);

  LinkageParams params;
  params.theta = theta;
  params.xi = xi;
  params.n = static_cast<double>(space.total_pairs());
  for (int t = 0; t < max_iter; ++t) {
    params.n_m = x;
    const double image = expected_matches(space, params);
    const double next = std::clamp(image, 0.0, cap);
    res.iterations = t + 1;
    if (std::fabs(next - x) < tol) {
      res.n_m = next;
      // an iterate pinned at the cap with image > cap is stationary for the
      // clamped map but not a fixed point of the substitution itself
      res.converged = std::fabs(image - next) < tol;
      return res;
    }
    x = next;
  }
  res.n_m = x;
  res.converged = false;
  return res;
}

SupervisedObjectives supervised_objectives(
    const std::vector<PatternBits>& matched_patterns, const PatternTable& space,
    const std::vector<double>& theta) {
  SupervisedObjectives out;
  if (matched_patterns.empty()) {
    throw UsageError("supervised objectives need a non-empty match set");
  }
  const double n = static_cast<double>(space.total_pairs());
  const double n_m = static_cast<double>(matched_patterns.size());

  std::map<PatternBits, double> m_count;
  for (PatternBits bits : matched_patterns) m_count[bits] += 1.0;

  // q_f: the space-wide pattern EDF as the mixture denominator
  double first_f = 0.0, second_f = 0.0;
  bool q_defined = n > n_m;
  double first_u = 0.0, second_u = 0.0;
  for (const auto& [bits, count] : m_count) {
    const double f_hat = static_cast<double>(space.pattern_count(bits)) / n;
    const double m = std::exp(log_pattern_prob(bits, theta));
    first_f += f_hat * (m / f_hat);
    second_f += count * std::log(m / f_hat);

    if (q_defined) {
      const double u_hat =
          (static_cast<double>(space.pattern_count(bits)) - count) / (n - n_m);
      if (u_hat <= 0.0) {
        q_defined = false;
      } else {
        first_u += u_hat * (m / u_hat);
        second_u += count * std::log(m / u_hat);
      }
    }
  }
  out.q_f = first_f - second_f / n_m;
  if (q_defined) out.q = first_u - second_u / n_m;
  return out;
}

}  // namespace mecrl
