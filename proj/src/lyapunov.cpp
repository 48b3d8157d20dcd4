#include "klsgd/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "klsgd/stats.hpp"

namespace klsgd {

namespace {

std::size_t tail_start(const TrajectoryRecord& traj, double fraction) {
  if (traj.rows.empty()) throw std::invalid_argument("empty trajectory");
  const auto n = traj.rows.size();
  const auto count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
  return n - std::min(count, n);
}

nlohmann::json optional_index(const std::optional<std::size_t>& k) {
  return k ? nlohmann::json(*k) : nlohmann::json(nullptr);
}

}  // namespace

double tail_mean(const TrajectoryRecord& traj, double fraction) {
  RunningStats stats;
  for (std::size_t k = tail_start(traj, fraction); k < traj.rows.size(); ++k) {
    stats.add(traj.rows[k].f);
  }
  return stats.mean();
}

double tail_stddev(const TrajectoryRecord& traj, double fraction) {
  RunningStats stats;
  for (std::size_t k = tail_start(traj, fraction); k < traj.rows.size(); ++k) {
    stats.add(traj.rows[k].f);
  }
  return stats.stddev();
}

LyapunovTrack lyapunov_track(const TrajectoryRecord& traj, const DescentCoefficients& coeffs) {
  return lyapunov_track(traj, coeffs, tail_mean(traj));
}

LyapunovTrack lyapunov_track(const TrajectoryRecord& traj, const DescentCoefficients& coeffs,
                             double f_limit) {
  LyapunovTrack out;
  out.f_limit = f_limit;
  const auto n = traj.rows.size();
  out.p.resize(n);
  out.w.resize(n);
  out.lyapunov.resize(n);
  out.lyapunov_limit.resize(n);
  double p_previous = 1.0;
  double weighted = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    out.p[k] = p_previous * (1.0 + coeffs.u(k));
    out.w[k] = coeffs.w(k);
    out.lyapunov[k] = (traj.rows[k].f - traj.f_star) / p_previous - weighted;
    out.lyapunov_limit[k] = (f_limit - traj.f_star) / p_previous - weighted;
    weighted += out.w[k] / out.p[k];
    p_previous = out.p[k];
  }
  return out;
}

nlohmann::json XiGammaReport::to_json() const {
  return {{"fraction_above_limit", fraction_above},
          {"fraction_drift_bounded", fraction_drift},
          {"first_below_limit_k", optional_index(first_below)},
          {"first_drift_violation_k", optional_index(first_drift)},
          {"checked", above_limit.size()}};
}

XiGammaReport xi_gamma_monitor(const TrajectoryRecord& traj, const DescentCoefficients& coeffs,
                               double gamma, double f_limit) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  const auto track = lyapunov_track(traj, coeffs, f_limit);
  XiGammaReport out;
  std::size_t above = 0;
  std::size_t drift = 0;
  for (std::size_t k = 1; k + 1 < traj.rows.size(); ++k) {
    const bool a = traj.rows[k].f > f_limit;
    const double change = std::abs(track.lyapunov_limit[k] - track.lyapunov_limit[k + 1]);
    const double allowance =
        gamma * coeffs.v(k) / track.p[k] * traj.rows[k].grad_norm * traj.rows[k].grad_norm;
    const bool b = change <= allowance + 1e-12 * std::max(1.0, std::abs(track.lyapunov_limit[k]));
    out.above_limit.push_back(a);
    out.limit_drift.push_back(b);
    above += a;
    drift += b;
    if (!a && !out.first_below) out.first_below = k;
    if (!b && !out.first_drift) out.first_drift = k;
  }
  const double checked = static_cast<double>(out.above_limit.size());
  out.fraction_above = checked > 0 ? static_cast<double>(above) / checked : 1.0;
  out.fraction_drift = checked > 0 ? static_cast<double>(drift) / checked : 1.0;
  return out;
}

nlohmann::json GammaPhiReport::to_json() const {
  return {{"terms", summands.size()},
          {"final_partial_sum", partial_sums.empty() ? 0.0 : partial_sums.back()},
          {"tail_increment", tail_increment},
          {"plateau", plateau},
          {"clamped", clamped},
          {"flagged", flagged}};
}

GammaPhiReport gamma_phi_partial_sums(const TrajectoryRecord& traj, const Scheme& scheme,
                                      const Problem& problem, const ExtendedDesingularizer& phi,
                                      const DescentCoefficients& coeffs, std::size_t inner,
                                      std::uint64_t seed, double f_limit) {
  if (!phi.bounded()) throw std::invalid_argument("partial sums need a bounded desingularizer");
  if (inner < 1) throw std::invalid_argument("need at least one continuation");
  const auto track = lyapunov_track(traj, coeffs, f_limit);
  GammaPhiReport out;
  const auto clamp = [&](double s) {
    if (s < 0.0) {
      ++out.clamped;
      return 0.0;
    }
    return s;
  };
  double running = 0.0;
  for (std::size_t k = 1; k + 1 < traj.rows.size(); ++k) {
    const auto& row = traj.rows[k];
    RunningStats next_f;
    for (std::size_t j = 0; j < inner; ++j) {
      const auto next = step(scheme, problem, row.x, k, {seed, j});
      next_f.add(problem.evaluate(next.next));
    }
    const double weight = coeffs.s(k) * track.p[k] / coeffs.v(k);
    const double now = clamp((row.f - f_limit) / track.p[k - 1]);
    const double later = clamp((next_f.mean() - f_limit) / track.p[k]);
    const double summand = weight * (phi.value(now) - phi.value(later));
    // Delta-method error of phi at the estimated expectation.
    const double slope =
        later > 0.0 ? phi.derivative(later) : std::numeric_limits<double>::infinity();
    const double error = next_f.se() > 0.0 ? weight * slope * next_f.se() / track.p[k] : 0.0;
    if (summand < -kStandardErrors * error - 1e-12) out.flagged.push_back(k);
    running += summand;
    out.summands.push_back(summand);
    out.partial_sums.push_back(running);
  }
  if (!out.partial_sums.empty()) {
    const std::size_t n = out.partial_sums.size();
    const std::size_t start = n - std::max<std::size_t>(1, n / 10);
    const double base = start > 0 ? out.partial_sums[start - 1] : 0.0;
    out.tail_increment = std::abs(out.partial_sums.back() - base);
    out.plateau = out.tail_increment < 1e-3;
  }
  return out;
}

}  // namespace klsgd
