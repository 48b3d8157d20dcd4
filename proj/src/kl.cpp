#include "klsgd/kl.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace klsgd {

Desingularizer::Desingularizer(double c, double theta, double zeta)
    : c_(c), theta_(theta), zeta_(zeta) {
  if (!(c > 0.0)) throw std::invalid_argument("desingularizer coefficient must be positive");
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("exponent must lie in (0, 1)");
  if (!(zeta > 0.0)) throw std::invalid_argument("domain bound must be positive");
}

double Desingularizer::value(double s) const {
  if (!(s >= 0.0 && s < zeta_)) {
    throw std::domain_error("argument outside [0, zeta); use the bounded extension");
  }
  return c_ * std::pow(s, 1.0 - theta_) / (1.0 - theta_);
}

double Desingularizer::derivative(double s) const {
  if (!(s > 0.0 && s < zeta_)) throw std::domain_error("derivative is defined on (0, zeta) only");
  return c_ * std::pow(s, -theta_);
}

ExtendedDesingularizer::ExtendedDesingularizer(const Desingularizer& base) : base_(base) {
  if (bounded()) {
    const double z = base_.zeta();
    l1_ = base_.c() * std::pow(z, 1.0 - base_.theta()) / (1.0 - base_.theta());
    l2_ = base_.c() * std::pow(z, -base_.theta());
  }
}

double ExtendedDesingularizer::supremum() const {
  return bounded() ? l1_ + l2_ * base_.zeta() : std::numeric_limits<double>::infinity();
}

double ExtendedDesingularizer::value(double s) const {
  if (s < base_.zeta()) return base_.value(s);
  const double z = base_.zeta();
  return l1_ + l2_ * z * (1.0 - z / s);
}

double ExtendedDesingularizer::derivative(double s) const {
  if (s < base_.zeta()) return base_.derivative(s);
  const double z = base_.zeta();
  return l2_ * z * z / (s * s);
}

ExtendedDesingularizer extend_to_infinity(const Desingularizer& d) {
  return ExtendedDesingularizer(d);
}

double DesingularizerSum::value(double s) const {
  if (!(s >= 0.0 && s < zeta)) throw std::domain_error("argument outside [0, zeta)");
  double total = 0.0;
  for (const auto& t : terms) total += t.c() * std::pow(s, 1.0 - t.theta()) / (1.0 - t.theta());
  return total;
}

double DesingularizerSum::derivative(double s) const {
  if (!(s > 0.0 && s < zeta)) throw std::domain_error("derivative is defined on (0, zeta) only");
  double total = 0.0;
  for (const auto& t : terms) total += t.c() * std::pow(s, -t.theta());
  return total;
}

KLPointResult kl_check_pointwise(const Problem& problem, std::size_t component,
                                 const Desingularizer& d, const Vector& x, double window) {
  if (component >= problem.components().size()) {
    throw std::invalid_argument("component index out of range");
  }
  const double gap = problem.evaluate(x) - problem.components()[component].level;
  const double upper = std::min(window, d.zeta());
  if (!(gap > 0.0 && gap < upper)) {
    return {KLPointVerdict::not_in_window, std::numeric_limits<double>::quiet_NaN()};
  }
  const double margin = problem.gradient(x).norm() * d.derivative(gap) - 1.0;
  return {margin >= 0.0 ? KLPointVerdict::holds : KLPointVerdict::violated, margin};
}

const char* to_string(KLVerdict v) {
  switch (v) {
    case KLVerdict::holds:
      return "holds";
    case KLVerdict::violated:
      return "violated";
    case KLVerdict::inconclusive:
      break;
  }
  return "inconclusive";
}

namespace {

// Uniform draw from {x : dist(x, C) < epsilon} by rejection.
std::optional<Vector> sample_tube(const CriticalComponent& component, double epsilon, Stream& rng,
                                  std::size_t& attempts_left) {
  auto [lo, hi] = component.bounding_box();
  lo.array() -= epsilon;
  hi.array() += epsilon;
  Vector x(lo.size());
  while (attempts_left > 0) {
    --attempts_left;
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(lo[i], hi[i]);
    if (component.distance(x) < epsilon) return x;
  }
  return std::nullopt;
}

std::size_t attempt_budget(std::size_t n_samples) { return 100 * n_samples; }

}  // namespace

std::size_t KLReport::total_violated() const {
  std::size_t total = 0;
  for (const auto& c : components) total += c.violated;
  return total;
}

double KLReport::min_margin() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : components) best = std::min(best, c.min_margin);
  return best;
}

KLVerdict KLReport::verdict() const {
  bool any_holds = false;
  for (const auto& c : components) {
    if (c.verdict == KLVerdict::violated) return KLVerdict::violated;
    any_holds = any_holds || c.verdict == KLVerdict::holds;
  }
  return any_holds ? KLVerdict::holds : KLVerdict::inconclusive;
}

namespace {

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json KLReport::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : components) {
    out.push_back({{"component", r.component},
                   {"level", r.level},
                   {"attempts", r.attempts},
                   {"checked", r.checked},
                   {"holds", r.holds},
                   {"violated", r.violated},
                   {"out_of_window", r.out_of_window},
                   {"inconclusive", r.verdict == KLVerdict::inconclusive},
                   {"verdict", to_string(r.verdict)},
                   {"min_margin", finite_or_null(r.min_margin)},
                   {"epsilon", epsilon},
                   {"zeta", zeta},
                   {"c", c},
                   {"theta", theta}});
  }
  return out;
}

KLReport kl_check_uniform(const Problem& problem, const Desingularizer& d, double epsilon,
                          double zeta, std::size_t n_samples, std::uint64_t seed) {
  if (!(epsilon > 0.0) || !(zeta > 0.0)) {
    throw std::invalid_argument("tube radius and window must be positive");
  }
  KLReport report;
  report.epsilon = epsilon;
  report.zeta = zeta;
  report.c = d.c();
  report.theta = d.theta();
  for (std::size_t i = 0; i < problem.components().size(); ++i) {
    const auto& component = problem.components()[i];
    KLComponentReport r;
    r.component = i;
    r.level = component.level;
    Stream rng({seed, i}, 0, StreamRole::sampling);
    std::size_t budget = attempt_budget(n_samples);
    while (r.checked < n_samples) {
      const auto x = sample_tube(component, epsilon, rng, budget);
      if (!x) break;
      ++r.checked;
      const auto point = kl_check_pointwise(problem, i, d, *x, zeta);
      switch (point.verdict) {
        case KLPointVerdict::holds:
          ++r.holds;
          break;
        case KLPointVerdict::violated:
          ++r.violated;
          break;
        case KLPointVerdict::not_in_window:
          ++r.out_of_window;
          continue;
      }
      r.min_margin = std::min(r.min_margin, point.margin);
    }
    r.attempts = attempt_budget(n_samples) - budget;
    if (r.violated > 0) {
      r.verdict = KLVerdict::violated;
    } else if (r.holds > 0) {
      r.verdict = KLVerdict::holds;
    }
    report.components.push_back(r);
  }
  return report;
}

nlohmann::json MergedKL::to_json() const {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : phi.terms) terms.push_back({{"c", t.c()}, {"theta", t.theta()}});
  return {{"terms", terms},
          {"zeta", zeta},
          {"epsilon", epsilon},
          {"level_gap_bound", finite_or_null(level_gap_bound)},
          {"single_component", single_component},
          {"degenerate", degenerate},
          {"requested_radii", requested_radii},
          {"achieved_radii", achieved_radii}};
}

MergedKL build_extended_uniform(const Problem& problem, const std::vector<ComponentKL>& per_component,
                                double upsilon, double delta, std::size_t n_samples,
                                std::uint64_t seed) {
  const auto& components = problem.components();
  if (per_component.size() != components.size()) {
    throw std::invalid_argument("need one KL triple per critical component");
  }
  if (!(upsilon > 0.0 && upsilon < 0.5)) throw std::invalid_argument("upsilon must lie in (0, 1/2)");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");

  MergedKL merged;
  for (const auto& p : per_component) merged.requested_radii.push_back(p.epsilon);

  if (per_component.size() == 1) {
    merged.single_component = true;
    merged.phi.terms = {per_component[0].phi};
    merged.phi.zeta = per_component[0].zeta;
    merged.zeta = per_component[0].zeta;
    merged.epsilon = per_component[0].epsilon;
    merged.achieved_radii = merged.requested_radii;
    return merged;
  }

  const auto levels = problem.critical_levels();
  double min_zeta = std::numeric_limits<double>::infinity();
  for (const auto& p : per_component) min_zeta = std::min(min_zeta, p.zeta);
  if (levels.size() < 2) {
    merged.degenerate = true;
    merged.zeta = min_zeta;
  } else {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < levels.size(); ++i) gap = std::min(gap, levels[i] - levels[i - 1]);
    merged.level_gap_bound = upsilon * gap;
    merged.zeta = std::min(min_zeta, merged.level_gap_bound);
  }

  double min_radius = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < components.size(); ++i) {
    double radius = per_component[i].epsilon;
    if (!merged.degenerate) {
      Stream rng({seed, i}, 1, StreamRole::sampling);
      bool found = false;
      for (int j = 0; j < 400 && !found; ++j, radius *= 0.9) {
        std::size_t budget = attempt_budget(n_samples);
        found = true;
        for (std::size_t s = 0; s < n_samples; ++s) {
          const auto x = sample_tube(components[i], radius, rng, budget);
          if (!x) break;
          if (std::abs(problem.evaluate(*x) - components[i].level) >= merged.level_gap_bound) {
            found = false;
            break;
          }
        }
        if (found) break;
      }
      if (!found) radius = 0.0;
    }
    merged.achieved_radii.push_back(radius);
    min_radius = std::min(min_radius, radius);
  }
  merged.epsilon = delta * min_radius;
  merged.phi.zeta = merged.zeta;
  for (const auto& p : per_component) merged.phi.terms.push_back(p.phi);
  return merged;
}

}  // namespace klsgd
