#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "klsgd/random.hpp"

namespace klsgd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct PointGeometry {
  Vector point;
};

struct SphereGeometry {
  Vector center;
  double radius = 1.0;
};

struct FiniteSetGeometry {
  std::vector<Vector> points;
};

using Geometry = std::variant<PointGeometry, SphereGeometry, FiniteSetGeometry>;

// A connected piece of the critical set on which the objective is constant.
struct CriticalComponent {
  Geometry geometry;
  double level = 0.0;

  double distance(const Vector& x) const;
  // Axis-aligned box containing the component.
  std::pair<Vector, Vector> bounding_box() const;
  // A point of the component drawn at random.
  Vector sample(Stream& rng) const;
  std::string kind() const;
};

// H(u) = (curvature / 2) * ||u - center||^2.
struct ConvexQuadratic {
  double curvature = 1.0;
  Vector center;

  double value(const Vector& u) const;
  Vector gradient(const Vector& u) const;
  Vector prox(const Vector& y, double gamma) const;
};

// F = G + H with G smooth and H a convex quadratic.
struct CompositeSplit {
  std::function<double(const Vector&)> smooth;
  std::function<Vector(const Vector&)> smooth_gradient;
  double beta_smooth = 0.0;
  ConvexQuadratic convex;
};

// Immutable description of a test objective with known critical set.
class Problem {
 public:
  struct Definition {
    std::string id;
    int dimension = 1;
    std::function<double(const Vector&)> objective;
    std::function<Vector(const Vector&)> gradient;
    double f_star = 0.0;
    // Lipschitz constant of the gradient on the working box.
    double beta = 1.0;
    // Working box is |x_i| <= box_radius; infinity when beta is global.
    double box_radius = 2.0;
    // Every x with ||x|| = coercivity_radius has F(x) > F(0) + 1.
    double coercivity_radius = 2.0;
    std::vector<CriticalComponent> components;
    std::optional<CompositeSplit> split;
    // Set when F(x) = (curvature / 2) ||x||^2 exactly.
    std::optional<double> isotropic_curvature;
    Vector default_x0;
  };

  explicit Problem(Definition definition);

  const std::string& id() const { return def_.id; }
  int dimension() const { return def_.dimension; }
  double f_star() const { return def_.f_star; }
  double beta() const { return def_.beta; }
  double box_radius() const { return def_.box_radius; }
  double coercivity_radius() const { return def_.coercivity_radius; }
  const std::vector<CriticalComponent>& components() const { return def_.components; }
  const std::optional<CompositeSplit>& split() const { return def_.split; }
  const std::optional<double>& isotropic_curvature() const { return def_.isotropic_curvature; }
  const Vector& default_x0() const { return def_.default_x0; }

  // Throw std::domain_error on non-finite input or wrong dimension.
  double evaluate(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  double distance_to_critical_set(const Vector& x) const;
  bool in_working_box(const Vector& x) const;

  // Max over coordinates of |g_i - fd_i| / max(1, |g_i|) with central
  // differences of step h in [1e-8, 1e-2].
  double finite_difference_check(const Vector& x, double h) const;

  // Distinct critical levels in increasing order.
  std::vector<double> critical_levels() const;

 private:
  void validate(const Vector& x) const;

  Definition def_;
};

Problem quadratic(int dimension, double beta);
Problem double_well_1d();
Problem circle_quartic();
// G(x) = sum_i (x_i^2 - 1)^2, H(x) = (mu_h / 2) ||x - z0||^2. z0 must lie
// in the working box.
Problem composite_quartic_quadratic(int dimension, double mu_h, const Vector& z0);

// Real roots of 4x^3 - 4x + mu (x - z) = 0, ascending.
std::vector<double> composite_coordinate_roots(double mu, double z);

}  // namespace klsgd
