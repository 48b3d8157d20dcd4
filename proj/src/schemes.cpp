#include "klsgd/schemes.hpp"

#include <cmath>
#include <stdexcept>

namespace klsgd {

std::string scheme_id(const Scheme& scheme) {
  return std::holds_alternative<SgdScheme>(scheme) ? "sgd" : "prox_gradient";
}

nlohmann::json scheme_json(const Scheme& scheme) {
  if (const auto* sgd = std::get_if<SgdScheme>(&scheme)) {
    return {{"id", "sgd"},
            {"oracle", sgd->oracle.name()},
            {"preconditioner", sgd->preconditioner.name()},
            {"step", sgd->step.to_string()}};
  }
  const auto& pg = std::get<ProxGradientScheme>(scheme);
  return {{"id", "prox_gradient"},
          {"oracle", pg.oracle.name()},
          {"prox", pg.prox.name()},
          {"gamma", pg.gamma.to_string()},
          {"lambda", pg.lambda.to_string()}};
}

Vector step_preconditioned_sgd(const Problem& problem, const GradientOracle& oracle,
                               const Preconditioner& preconditioner, double alpha, const Vector& x,
                               std::size_t k, StreamKey key) {
  if (!(alpha > 0.0)) throw std::invalid_argument("step size must be positive");
  Stream precondition_rng(key, k, StreamRole::preconditioner);
  const Matrix u = preconditioner.sample(x, k, precondition_rng);
  Stream gradient_rng(key, k, StreamRole::gradient);
  const Vector f = oracle.sample(problem.gradient(x), k, gradient_rng);
  return x - alpha * (u * f);
}

StepResult step_prox_gradient(const Problem& problem, const GradientOracle& oracle,
                              const ProxOracle& prox, double gamma, double lambda, const Vector& x,
                              std::size_t k, StreamKey key) {
  if (!(gamma > 0.0)) throw std::invalid_argument("proximal step must be positive");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("relaxation must lie in (0, 1]");
  const auto& split = problem.split();
  if (!split) throw std::invalid_argument("proximal-gradient scheme needs a composite problem");
  if (!x.allFinite()) throw std::domain_error("non-finite input point");
  Stream gradient_rng(key, k, StreamRole::gradient);
  const Vector g = oracle.sample(split->smooth_gradient(x), k, gradient_rng);
  Stream prox_rng(key, k, StreamRole::prox);
  const Vector p = prox.sample(x - gamma * g, gamma, k, prox_rng);
  StepResult out;
  out.implicit_gradient = (x - p) / gamma;
  out.next = x + lambda * (p - x);
  out.prox_warning = gamma * split->convex.curvature >= 1.0;
  return out;
}

StepResult step(const Scheme& scheme, const Problem& problem, const Vector& x, std::size_t k,
                StreamKey key) {
  if (const auto* sgd = std::get_if<SgdScheme>(&scheme)) {
    const double alpha = sgd->step(k);
    StepResult out;
    out.next = step_preconditioned_sgd(problem, sgd->oracle, sgd->preconditioner, alpha, x, k, key);
    out.implicit_gradient = (x - out.next) / alpha;
    return out;
  }
  const auto& pg = std::get<ProxGradientScheme>(scheme);
  return step_prox_gradient(problem, pg.oracle, pg.prox, pg.gamma(k), pg.lambda(k), x, k, key);
}

double effective_step(const Scheme& scheme, std::size_t k) {
  if (const auto* sgd = std::get_if<SgdScheme>(&scheme)) return sgd->step(k);
  const auto& pg = std::get<ProxGradientScheme>(scheme);
  return pg.gamma(k) * pg.lambda(k);
}

nlohmann::json TrajectoryRecord::metadata() const {
  nlohmann::json out = {{"seed", seed},
                        {"replicate", replicate},
                        {"horizon", horizon},
                        {"rows", rows.size()},
                        {"problem", problem_id},
                        {"scheme", scheme},
                        {"f_star", f_star},
                        {"critical_levels", critical_levels},
                        {"diverged", diverged},
                        {"left_box", left_box},
                        {"prox_warning", prox_warning}};
  out["divergence_k"] = divergence_k ? nlohmann::json(*divergence_k) : nlohmann::json(nullptr);
  out["first_exit_k"] = first_exit_k ? nlohmann::json(*first_exit_k) : nlohmann::json(nullptr);
  return out;
}

namespace {

bool diverged(const Vector& x) { return !x.allFinite() || x.norm() > kDivergenceNorm; }

}  // namespace

TrajectoryRecord run_trajectory(const Scheme& scheme, const Problem& problem, std::size_t horizon,
                                std::uint64_t seed, const Vector& x0, const DescentCoefficients* coeffs,
                                std::uint64_t replicate) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (x0.size() != problem.dimension()) throw std::invalid_argument("x0 has the wrong dimension");
  TrajectoryRecord record;
  record.seed = seed;
  record.replicate = replicate;
  record.horizon = horizon;
  record.problem_id = problem.id();
  record.scheme = scheme_json(scheme);
  record.f_star = problem.f_star();
  record.critical_levels = problem.critical_levels();
  record.rows.reserve(horizon + 1);

  const StreamKey key{seed, replicate};
  Vector x = x0;
  double p_previous = 1.0;
  double weighted_noise = 0.0;
  for (std::size_t k = 0;; ++k) {
    TrajectoryRow row;
    row.k = k;
    row.x = x;
    row.f = problem.evaluate(x);
    row.grad_norm = problem.gradient(x).norm();
    row.dist_crit = problem.distance_to_critical_set(x);
    const double u = coeffs ? coeffs->u(k) : 0.0;
    row.w = coeffs ? coeffs->w(k) : 0.0;
    row.p = p_previous * (1.0 + u);
    row.lyapunov = (row.f - problem.f_star()) / p_previous - weighted_noise;
    if (!problem.in_working_box(x) && !record.left_box) {
      record.left_box = true;
      record.first_exit_k = k;
    }
    if (k == horizon) {
      record.rows.push_back(std::move(row));
      break;
    }
    const StepResult next = step(scheme, problem, x, k, key);
    record.prox_warning = record.prox_warning || next.prox_warning;
    if (diverged(next.next)) {
      record.rows.push_back(std::move(row));
      record.diverged = true;
      record.divergence_k = k + 1;
      break;
    }
    row.step_norm = (next.next - x).norm();
    weighted_noise += row.w / row.p;
    p_previous = row.p;
    record.rows.push_back(std::move(row));
    x = next.next;
  }
  return record;
}

}  // namespace klsgd
