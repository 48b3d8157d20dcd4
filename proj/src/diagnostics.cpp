#include "klsgd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "klsgd/lyapunov.hpp"

namespace klsgd {

LevelMatch match_critical_level(double f_limit, double f_limit_std,
                                const std::vector<double>& levels) {
  LevelMatch out;
  out.tolerance = std::max(1e-3, 3.0 * f_limit_std);
  if (levels.empty()) return out;
  double best = std::numeric_limits<double>::infinity();
  for (double level : levels) best = std::min(best, std::abs(f_limit - level));
  for (double level : levels) {
    if (std::abs(f_limit - level) == best) out.tied.push_back(level);
  }
  out.gap = best;
  if (out.tied.size() > 1) return out;
  out.level = out.tied.front();
  out.tied.clear();
  out.verdict = best < out.tolerance ? Verdict::pass : Verdict::fail;
  return out;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

nlohmann::json DiagnosticsReport::to_json() const {
  nlohmann::json out = {{"path_length", path_length},
                        {"tail_increment", tail_increment},
                        {"final_dist", final_dist},
                        {"final_grad", final_grad},
                        {"f_limit", f_limit},
                        {"f_limit_std", f_limit_std},
                        {"level",
                         {{"level", optional_json(level.level)},
                          {"gap", level.gap},
                          {"tolerance", level.tolerance},
                          {"tied", level.tied},
                          {"verdict", to_string(level.verdict)}}},
                        {"accumulation_diameter", accumulation_diameter},
                        {"diverged", diverged},
                        {"success", success}};
  out["kl_entry"] = kl_entry ? nlohmann::json(*kl_entry) : nlohmann::json(nullptr);
  return out;
}

DiagnosticsReport convergence_diagnostics(const TrajectoryRecord& traj,
                                          const DiagnosticsOptions& options) {
  if (traj.rows.empty()) throw std::invalid_argument("empty trajectory");
  DiagnosticsReport out;
  const auto n = traj.rows.size();
  out.diverged = traj.diverged;

  out.path_partial_sums.resize(n);
  double running = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    out.path_partial_sums[k] = running;
    if (k + 1 < n) running += traj.rows[k].step_norm;
  }
  out.path_length = running;
  out.cauchy_tail.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.cauchy_tail[k] = running - out.path_partial_sums[k];
  const std::size_t window_start = n - 1 > options.tail_window ? n - 1 - options.tail_window : 0;
  out.tail_increment = running - out.path_partial_sums[window_start];

  const auto& last = traj.rows.back();
  out.final_dist = last.dist_crit;
  out.final_grad = last.grad_norm;
  out.f_limit = tail_mean(traj);
  out.f_limit_std = tail_stddev(traj);
  out.level = match_critical_level(out.f_limit, out.f_limit_std, traj.critical_levels);

  const double reference = out.level.level ? *out.level.level : out.f_limit;
  for (std::size_t k = n; k-- > 0;) {
    const auto& row = traj.rows[k];
    const double gap = row.f - reference;
    if (!(row.dist_crit <= options.kl_epsilon && gap > 0.0 && gap < options.kl_zeta)) break;
    out.kl_entry = k;
  }

  const std::size_t accumulation_start = static_cast<std::size_t>(0.9 * static_cast<double>(n - 1));
  double diameter = 0.0;
  for (std::size_t i = accumulation_start; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      diameter = std::max(diameter, (traj.rows[i].x - traj.rows[j].x).norm());
    }
  }
  out.accumulation_diameter = diameter;

  out.success = !traj.diverged && out.final_dist < options.success_dist &&
                out.final_grad < options.success_grad && out.tail_increment < options.success_tail;
  return out;
}

nlohmann::json MultiSeedSummary::to_json() const {
  return {{"runs", runs},
          {"successes", successes},
          {"success_fraction", success_fraction},
          {"median_final_dist", median_final_dist},
          {"median_tail_increment", median_tail_increment}};
}

MultiSeedSummary summarize(const std::vector<DiagnosticsReport>& reports) {
  MultiSeedSummary out;
  out.runs = reports.size();
  std::vector<double> dists;
  std::vector<double> tails;
  for (const auto& r : reports) {
    out.successes += r.success;
    dists.push_back(r.final_dist);
    tails.push_back(r.tail_increment);
  }
  out.success_fraction =
      out.runs > 0 ? static_cast<double>(out.successes) / static_cast<double>(out.runs) : 0.0;
  out.median_final_dist = median(dists);
  out.median_tail_increment = median(tails);
  return out;
}

}  // namespace klsgd
