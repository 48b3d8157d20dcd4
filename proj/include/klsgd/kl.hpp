#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <json.hpp>

#include "klsgd/problems.hpp"

namespace klsgd {

// phi(s) = c s^(1-theta) / (1-theta) on [0, zeta).
class Desingularizer {
 public:
  Desingularizer(double c, double theta,
                 double zeta = std::numeric_limits<double>::infinity());

  double c() const { return c_; }
  double theta() const { return theta_; }
  double zeta() const { return zeta_; }

  // Domain error for s outside [0, zeta).
  double value(double s) const;
  // Domain error for s outside (0, zeta).
  double derivative(double s) const;

 private:
  double c_;
  double theta_;
  double zeta_;
};

// Bounded concave extension of a desingularizer to [0, infinity):
// l1 + l2 zeta (1 - zeta / s) beyond zeta.
class ExtendedDesingularizer {
 public:
  explicit ExtendedDesingularizer(const Desingularizer& base);

  const Desingularizer& base() const { return base_; }
  double l1() const { return l1_; }
  double l2() const { return l2_; }
  bool bounded() const { return std::isfinite(base_.zeta()); }
  // l1 + l2 zeta; infinity when the base is unbounded.
  double supremum() const;

  double value(double s) const;
  double derivative(double s) const;

 private:
  Desingularizer base_;
  double l1_ = 0.0;
  double l2_ = 0.0;
};

// Identity when zeta is infinite.
ExtendedDesingularizer extend_to_infinity(const Desingularizer& d);

// Sum of desingularizers sharing the domain [0, zeta).
struct DesingularizerSum {
  std::vector<Desingularizer> terms;
  double zeta = std::numeric_limits<double>::infinity();

  double value(double s) const;
  double derivative(double s) const;
};

enum class KLPointVerdict { holds, violated, not_in_window };

struct KLPointResult {
  KLPointVerdict verdict = KLPointVerdict::not_in_window;
  // ||grad F|| phi'(F - level) - 1; NaN outside the window.
  double margin = 0.0;
};

// Window is 0 < F(x) - level < min(window, d.zeta()).
KLPointResult kl_check_pointwise(const Problem& problem, std::size_t component,
                                 const Desingularizer& d, const Vector& x,
                                 double window = std::numeric_limits<double>::infinity());

enum class KLVerdict { holds, violated, inconclusive };

const char* to_string(KLVerdict v);

struct KLComponentReport {
  std::size_t component = 0;
  double level = 0.0;
  std::size_t attempts = 0;
  std::size_t checked = 0;
  std::size_t holds = 0;
  std::size_t violated = 0;
  std::size_t out_of_window = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  KLVerdict verdict = KLVerdict::inconclusive;
};

struct KLReport {
  std::vector<KLComponentReport> components;
  double epsilon = 0.0;
  double zeta = 0.0;
  double c = 0.0;
  double theta = 0.0;

  std::size_t total_violated() const;
  double min_margin() const;
  KLVerdict verdict() const;
  nlohmann::json to_json() const;
};

// Samples n_samples points per component uniformly in its epsilon-tube by
// rejection from the inflated bounding box, giving up after 100 n_samples
// attempts.
KLReport kl_check_uniform(const Problem& problem, const Desingularizer& d, double epsilon,
                          double zeta, std::size_t n_samples, std::uint64_t seed);

struct ComponentKL {
  Desingularizer phi;
  double epsilon;
  double zeta;
};

struct MergedKL {
  DesingularizerSum phi;
  double zeta = 0.0;
  double epsilon = 0.0;
  // upsilon times the smallest gap between distinct levels; NaN if undefined.
  double level_gap_bound = std::numeric_limits<double>::quiet_NaN();
  bool single_component = false;
  bool degenerate = false;
  std::vector<double> requested_radii;
  std::vector<double> achieved_radii;

  nlohmann::json to_json() const;
};

// Merges per-component KL data into one (phi, zeta, epsilon) valid near the
// whole critical set. The continuity radius of each component is found by a
// decreasing grid search r = epsilon_i 0.9^j checked on sampled tube points.
MergedKL build_extended_uniform(const Problem& problem, const std::vector<ComponentKL>& per_component,
                                double upsilon, double delta, std::size_t n_samples,
                                std::uint64_t seed);

}  // namespace klsgd
