#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "klsgd/schemes.hpp"
#include "klsgd/stats.hpp"

namespace klsgd {

struct DiagnosticsOptions {
  // KL window used for the entry index.
  double kl_epsilon = 0.1;
  double kl_zeta = 0.1;
  // Iterations summed for the final path-length increment.
  std::size_t tail_window = 1000;
  double success_dist = 1e-2;
  double success_grad = 1e-2;
  double success_tail = 1e-2;
};

// Which critical level the tail of F settled on.
struct LevelMatch {
  std::optional<double> level;
  double gap = 0.0;
  // max(1e-3, 3 * tail standard deviation).
  double tolerance = 0.0;
  // Two levels equally close; both reported, verdict inconclusive.
  std::vector<double> tied;
  Verdict verdict = Verdict::inconclusive;
};

LevelMatch match_critical_level(double f_limit, double f_limit_std,
                                const std::vector<double>& levels);

struct DiagnosticsReport {
  // sum_{i<k} ||x_{i+1} - x_i|| for k = 0..K.
  std::vector<double> path_partial_sums;
  // sum_{i>=k} ||x_{i+1} - x_i|| within the horizon.
  std::vector<double> cauchy_tail;
  double path_length = 0.0;
  double tail_increment = 0.0;
  double final_dist = 0.0;
  double final_grad = 0.0;
  double f_limit = 0.0;
  double f_limit_std = 0.0;
  LevelMatch level;
  std::optional<std::size_t> kl_entry;
  double accumulation_diameter = 0.0;
  bool diverged = false;
  bool success = false;

  nlohmann::json to_json() const;
};

DiagnosticsReport convergence_diagnostics(const TrajectoryRecord& traj,
                                          const DiagnosticsOptions& options = {});

struct MultiSeedSummary {
  std::size_t runs = 0;
  std::size_t successes = 0;
  double success_fraction = 0.0;
  double median_final_dist = 0.0;
  double median_tail_increment = 0.0;

  nlohmann::json to_json() const;
};

MultiSeedSummary summarize(const std::vector<DiagnosticsReport>& reports);

}  // namespace klsgd
