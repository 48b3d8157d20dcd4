#include "klsgd/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <unsupported/Eigen/Polynomials>

namespace klsgd {

double CriticalComponent::distance(const Vector& x) const {
  return std::visit(
      [&](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, PointGeometry>) {
          return (x - g.point).norm();
        } else if constexpr (std::is_same_v<T, SphereGeometry>) {
          return std::abs((x - g.center).norm() - g.radius);
        } else {
          double best = std::numeric_limits<double>::infinity();
          for (const auto& p : g.points) best = std::min(best, (x - p).norm());
          return best;
        }
      },
      geometry);
}

std::pair<Vector, Vector> CriticalComponent::bounding_box() const {
  return std::visit(
      [](const auto& g) -> std::pair<Vector, Vector> {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, PointGeometry>) {
          return {g.point, g.point};
        } else if constexpr (std::is_same_v<T, SphereGeometry>) {
          const Vector r = Vector::Constant(g.center.size(), g.radius);
          return {g.center - r, g.center + r};
        } else {
          Vector lo = g.points.front();
          Vector hi = g.points.front();
          for (const auto& p : g.points) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
          }
          return {lo, hi};
        }
      },
      geometry);
}

Vector CriticalComponent::sample(Stream& rng) const {
  return std::visit(
      [&](const auto& g) -> Vector {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, PointGeometry>) {
          return g.point;
        } else if constexpr (std::is_same_v<T, SphereGeometry>) {
          Vector direction(g.center.size());
          do {
            for (Eigen::Index i = 0; i < direction.size(); ++i) direction[i] = rng.normal();
          } while (direction.norm() == 0.0);
          return g.center + g.radius * direction.normalized();
        } else {
          return g.points[rng.index(g.points.size())];
        }
      },
      geometry);
}

std::string CriticalComponent::kind() const {
  switch (geometry.index()) {
    case 0:
      return "point";
    case 1:
      return "sphere";
    default:
      return "finite_set";
  }
}

double ConvexQuadratic::value(const Vector& u) const {
  return 0.5 * curvature * (u - center).squaredNorm();
}

Vector ConvexQuadratic::gradient(const Vector& u) const { return curvature * (u - center); }

Vector ConvexQuadratic::prox(const Vector& y, double gamma) const {
  if (!(gamma > 0.0)) throw std::invalid_argument("prox step must be positive");
  return (y + gamma * curvature * center) / (1.0 + gamma * curvature);
}

Problem::Problem(Definition definition) : def_(std::move(definition)) {
  if (def_.dimension < 1) throw std::invalid_argument("dimension must be positive");
  if (def_.components.empty()) throw std::invalid_argument("problem needs a critical component");
  if (def_.default_x0.size() == 0) {
    def_.default_x0 = Vector::Zero(def_.dimension);
    def_.default_x0[0] = 2.0;
  }
}

void Problem::validate(const Vector& x) const {
  if (x.size() != def_.dimension) {
    throw std::domain_error("expected a point of dimension " + std::to_string(def_.dimension) +
                            ", got " + std::to_string(x.size()));
  }
  if (!x.allFinite()) throw std::domain_error("non-finite input point");
}

double Problem::evaluate(const Vector& x) const {
  validate(x);
  return def_.objective(x);
}

Vector Problem::gradient(const Vector& x) const {
  validate(x);
  return def_.gradient(x);
}

double Problem::distance_to_critical_set(const Vector& x) const {
  validate(x);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : def_.components) best = std::min(best, c.distance(x));
  return best;
}

bool Problem::in_working_box(const Vector& x) const {
  return x.allFinite() && x.cwiseAbs().maxCoeff() <= def_.box_radius;
}

double Problem::finite_difference_check(const Vector& x, double h) const {
  if (!(h >= 1e-8 && h <= 1e-2)) throw std::invalid_argument("step must lie in [1e-8, 1e-2]");
  const Vector g = gradient(x);
  double worst = 0.0;
  for (int i = 0; i < def_.dimension; ++i) {
    Vector plus = x;
    Vector minus = x;
    plus[i] += h;
    minus[i] -= h;
    const double fd = (def_.objective(plus) - def_.objective(minus)) / (2.0 * h);
    worst = std::max(worst, std::abs(g[i] - fd) / std::max(1.0, std::abs(g[i])));
  }
  return worst;
}

std::vector<double> Problem::critical_levels() const {
  std::vector<double> levels;
  for (const auto& c : def_.components) levels.push_back(c.level);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return levels;
}

Problem quadratic(int dimension, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("quadratic curvature must be positive");
  Problem::Definition d;
  d.id = "quadratic";
  d.dimension = dimension;
  d.objective = [beta](const Vector& x) { return 0.5 * beta * x.squaredNorm(); };
  d.gradient = [beta](const Vector& x) -> Vector { return beta * x; };
  d.f_star = 0.0;
  d.beta = beta;
  d.box_radius = std::numeric_limits<double>::infinity();
  d.coercivity_radius = std::sqrt(2.0 / beta) + 1.0;
  d.components = {{PointGeometry{Vector::Zero(dimension)}, 0.0}};
  d.isotropic_curvature = beta;
  return Problem(std::move(d));
}

Problem double_well_1d() {
  Problem::Definition d;
  d.id = "double_well_1d";
  d.dimension = 1;
  d.objective = [](const Vector& x) {
    const double t = x[0] * x[0] - 1.0;
    return t * t;
  };
  d.gradient = [](const Vector& x) -> Vector {
    return Vector::Constant(1, 4.0 * x[0] * (x[0] * x[0] - 1.0));
  };
  d.f_star = 0.0;
  // F'' = 12x^2 - 4 on [-2, 2]
  d.beta = 44.0;
  d.components = {{PointGeometry{Vector::Constant(1, -1.0)}, 0.0},
                  {PointGeometry{Vector::Constant(1, 0.0)}, 1.0},
                  {PointGeometry{Vector::Constant(1, 1.0)}, 0.0}};
  return Problem(std::move(d));
}

Problem circle_quartic() {
  Problem::Definition d;
  d.id = "circle_quartic";
  d.dimension = 2;
  d.objective = [](const Vector& x) {
    const double t = x.squaredNorm() - 1.0;
    return t * t;
  };
  d.gradient = [](const Vector& x) -> Vector { return 4.0 * (x.squaredNorm() - 1.0) * x; };
  d.f_star = 0.0;
  // Hessian eigenvalues 4(r^2 - 1) and 12 r^2 - 4 with r^2 <= 8 on [-2, 2]^2
  d.beta = 92.0;
  d.components = {{SphereGeometry{Vector::Zero(2), 1.0}, 0.0},
                  {PointGeometry{Vector::Zero(2)}, 1.0}};
  return Problem(std::move(d));
}

std::vector<double> composite_coordinate_roots(double mu, double z) {
  const auto g = [&](double x) { return 4.0 * x * x * x - 4.0 * x + mu * (x - z); };
  const auto dg = [&](double x) { return 12.0 * x * x - 4.0 + mu; };
  Eigen::Vector4d coefficients(-mu * z, mu - 4.0, 0.0, 4.0);
  Eigen::PolynomialSolver<double, 3> solver(coefficients);
  std::vector<double> candidates;
  for (const auto& root : solver.roots()) {
    if (std::abs(root.imag()) < 1e-6) candidates.push_back(root.real());
  }
  std::vector<double> roots;
  for (double x : candidates) {
    for (int it = 0; it < 100; ++it) {
      const double slope = dg(x);
      if (slope == 0.0 || g(x) == 0.0) break;
      const double next = x - g(x) / slope;
      if (next == x) break;
      x = next;
    }
    if (std::abs(g(x)) < 1e-10) roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-7; }),
              roots.end());
  return roots;
}

Problem composite_quartic_quadratic(int dimension, double mu_h, const Vector& z0) {
  if (dimension < 1 || dimension > 10) throw std::invalid_argument("dimension must be in [1, 10]");
  if (!(mu_h > 0.0)) throw std::invalid_argument("mu_h must be positive");
  if (z0.size() != dimension) throw std::invalid_argument("z0 has the wrong dimension");
  if (z0.cwiseAbs().maxCoeff() > 2.0) throw std::invalid_argument("z0 must lie in [-2, 2]^N");

  CompositeSplit split;
  split.smooth = [](const Vector& x) { return (x.array().square() - 1.0).square().sum(); };
  split.smooth_gradient = [](const Vector& x) -> Vector {
    return (4.0 * x.array() * (x.array().square() - 1.0)).matrix();
  };
  split.beta_smooth = 44.0;
  split.convex = ConvexQuadratic{mu_h, z0};

  Problem::Definition d;
  d.id = "composite_quartic_quadratic";
  d.dimension = dimension;
  d.objective = [split](const Vector& x) { return split.smooth(x) + split.convex.value(x); };
  d.gradient = [split](const Vector& x) -> Vector {
    return split.smooth_gradient(x) + split.convex.gradient(x);
  };
  d.beta = split.beta_smooth + mu_h;
  d.coercivity_radius = 4.0 * std::sqrt(static_cast<double>(dimension)) + 2.0;

  // F is separable, so critical points are products of per-coordinate roots.
  std::vector<std::vector<double>> roots(dimension);
  std::vector<std::vector<double>> values(dimension);
  d.f_star = 0.0;
  for (int i = 0; i < dimension; ++i) {
    roots[i] = composite_coordinate_roots(mu_h, z0[i]);
    double best = std::numeric_limits<double>::infinity();
    for (double r : roots[i]) {
      const double v = (r * r - 1.0) * (r * r - 1.0) + 0.5 * mu_h * (r - z0[i]) * (r - z0[i]);
      values[i].push_back(v);
      best = std::min(best, v);
    }
    d.f_star += best;
  }

  std::vector<std::pair<double, Vector>> points;
  std::vector<std::size_t> index(dimension, 0);
  while (true) {
    Vector p(dimension);
    for (int i = 0; i < dimension; ++i) p[i] = roots[i][index[i]];
    points.emplace_back(d.objective(p), p);
    int i = 0;
    while (i < dimension && ++index[i] == roots[i].size()) index[i++] = 0;
    if (i == dimension) break;
  }
  std::sort(points.begin(), points.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t start = 0; start < points.size();) {
    std::size_t end = start + 1;
    const double level = points[start].first;
    while (end < points.size() &&
           std::abs(points[end].first - level) <= 1e-12 * std::max(1.0, std::abs(level))) {
      ++end;
    }
    if (end - start == 1) {
      d.components.push_back({PointGeometry{points[start].second}, level});
    } else {
      FiniteSetGeometry set;
      for (std::size_t j = start; j < end; ++j) set.points.push_back(points[j].second);
      d.components.push_back({std::move(set), level});
    }
    start = end;
  }
  d.split = std::move(split);
  return Problem(std::move(d));
}

}  // namespace klsgd
