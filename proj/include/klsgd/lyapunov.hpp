#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "klsgd/coefficients.hpp"
#include "klsgd/kl.hpp"
#include "klsgd/schemes.hpp"

namespace klsgd {

// Mean of F over the final `fraction` of the logged rows (at least one row).
double tail_mean(const TrajectoryRecord& traj, double fraction = 0.05);
// Standard deviation of F over the same rows.
double tail_stddev(const TrajectoryRecord& traj, double fraction = 0.05);

struct LyapunovTrack {
  std::vector<double> p;
  std::vector<double> w;
  std::vector<double> lyapunov;
  // Limit of L_k under the tail estimate of F: (F_hat - F*) / p_{k-1} - sum_{i<k} w_i / p_i.
  std::vector<double> lyapunov_limit;
  double f_limit = 0.0;
};

LyapunovTrack lyapunov_track(const TrajectoryRecord& traj, const DescentCoefficients& coeffs);

// Same, with an externally supplied estimate of lim F(x_k).
LyapunovTrack lyapunov_track(const TrajectoryRecord& traj, const DescentCoefficients& coeffs,
                             double f_limit);

struct XiGammaReport {
  // Condition A at k: F(x_k) > F_hat. Evaluated for k >= 1.
  std::vector<bool> above_limit;
  // Condition B at k: |L_hat_{k,inf} - L_hat_{k+1,inf}| <= gamma v_k / p_k ||grad F(x_k)||^2.
  std::vector<bool> limit_drift;
  double fraction_above = 0.0;
  double fraction_drift = 0.0;
  std::optional<std::size_t> first_below;
  std::optional<std::size_t> first_drift;

  nlohmann::json to_json() const;
};

// Pathwise proxy for the event that the limit value bounds F from below and
// the limit sequence drifts slower than the gradient-driven decrease.
XiGammaReport xi_gamma_monitor(const TrajectoryRecord& traj, const DescentCoefficients& coeffs,
                               double gamma, double f_limit);

struct GammaPhiReport {
  std::vector<double> summands;
  std::vector<double> partial_sums;
  // Iterations whose summand is negative beyond Monte-Carlo error.
  std::vector<std::size_t> flagged;
  // Arguments below zero clamped to zero before evaluating phi.
  std::size_t clamped = 0;
  double tail_increment = 0.0;
  bool plateau = false;

  nlohmann::json to_json() const;
};

// Partial sums of sum_k (s_k p_k / v_k)(phi((F(x_k) - F_hat)/p_{k-1})
// - phi((E[F(x_{k+1}) | x_k] - F_hat)/p_k)) for k >= 1, estimating the
// conditional expectation with `inner` continuations per logged state.
GammaPhiReport gamma_phi_partial_sums(const TrajectoryRecord& traj, const Scheme& scheme,
                                      const Problem& problem, const ExtendedDesingularizer& phi,
                                      const DescentCoefficients& coeffs, std::size_t inner,
                                      std::uint64_t seed, double f_limit);

}  // namespace klsgd
