#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "klsgd/coefficients.hpp"
#include "klsgd/oracles.hpp"
#include "klsgd/problems.hpp"

namespace klsgd {

// x+ = x - alpha_k U_k f_k.
struct SgdScheme {
  GradientOracle oracle;
  Preconditioner preconditioner;
  Schedule step;
};

// x+ = x + lambda_k (P_k(x - gamma_k g_k) - x), g_k approximating grad G.
struct ProxGradientScheme {
  GradientOracle oracle;
  ProxOracle prox;
  Schedule gamma;
  Schedule lambda;
};

using Scheme = std::variant<SgdScheme, ProxGradientScheme>;

std::string scheme_id(const Scheme& scheme);
nlohmann::json scheme_json(const Scheme& scheme);

struct StepResult {
  Vector next;
  // f_k with next = x - (step size) f_k; for the proximal scheme
  // f_k = (x - P_k(x - gamma g_k)) / gamma and the step size is gamma lambda.
  Vector implicit_gradient;
  // The proximal step exceeded 1 / beta_H.
  bool prox_warning = false;
};

// The preconditioner is drawn from its own substream before the gradient.
Vector step_preconditioned_sgd(const Problem& problem, const GradientOracle& oracle,
                               const Preconditioner& preconditioner, double alpha, const Vector& x,
                               std::size_t k, StreamKey key);

StepResult step_prox_gradient(const Problem& problem, const GradientOracle& oracle,
                              const ProxOracle& prox, double gamma, double lambda, const Vector& x,
                              std::size_t k, StreamKey key);

StepResult step(const Scheme& scheme, const Problem& problem, const Vector& x, std::size_t k,
                StreamKey key);

// Step size multiplying the implicit gradient at iteration k.
double effective_step(const Scheme& scheme, std::size_t k);

struct TrajectoryRow {
  std::size_t k = 0;
  Vector x;
  double f = 0.0;
  double grad_norm = 0.0;
  // ||x_{k+1} - x_k||; NaN on the final row.
  double step_norm = std::numeric_limits<double>::quiet_NaN();
  double dist_crit = 0.0;
  double w = 0.0;
  double p = 1.0;
  double lyapunov = 0.0;
};

struct TrajectoryRecord {
  std::vector<TrajectoryRow> rows;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  std::size_t horizon = 0;
  std::string problem_id;
  nlohmann::json scheme;
  double f_star = 0.0;
  std::vector<double> critical_levels;
  bool diverged = false;
  std::optional<std::size_t> divergence_k;
  bool left_box = false;
  std::optional<std::size_t> first_exit_k;
  bool prox_warning = false;

  nlohmann::json metadata() const;
};

// Deterministic in (scheme, problem, seed, replicate, x0). When coefficients
// are supplied, p_k = prod_{i<=k}(1 + u_i) and
// L_k = (F(x_k) - F*) / p_{k-1} - sum_{i<k} w_i / p_i with p_{-1} = 1;
// otherwise u = w = 0.
TrajectoryRecord run_trajectory(const Scheme& scheme, const Problem& problem, std::size_t horizon,
                                std::uint64_t seed, const Vector& x0,
                                const DescentCoefficients* coeffs = nullptr,
                                std::uint64_t replicate = 0);

inline constexpr double kDivergenceNorm = 1e6;

}  // namespace klsgd
