#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "klsgd/problems.hpp"
#include "klsgd/random.hpp"
#include "klsgd/sequence.hpp"
#include "klsgd/stats.hpp"

namespace klsgd {

// E||f_k||^2 <= a (F - F*) + b ||grad F||^2 + c.
struct MomentCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

// E||error||^2 <= d ||grad F||^2 + e.
struct ErrorCoefficients {
  double d = 0.0;
  double e = 0.0;
};

// Stochastic approximation of a gradient. Draws are conditioned on the exact
// gradient at the current point, so the same oracle serves grad F and grad G.
class GradientOracle {
 public:
  enum class Kind { additive_gaussian, multiplicative, minibatch, biased_decaying };

  // f = g + sigma_k n with n standard normal.
  static GradientOracle additive_gaussian(int dimension, Schedule sigma);
  // f = s g with s = 1 +- sqrt(b - 1) equally likely, so E[s] = 1, E[s^2] = b.
  static GradientOracle multiplicative(int dimension, double b);
  // Finite sum of population terms F + <xi_j, x> with centered offsets xi_j of
  // scale spread; f averages batch of them drawn without replacement.
  static GradientOracle minibatch(int dimension, std::size_t population, std::size_t batch,
                                  double spread, std::uint64_t seed);
  // Additive Gaussian plus a fixed direction scaled to norm bias_k.
  static GradientOracle biased_decaying(int dimension, Schedule sigma, Schedule bias);

  Kind kind() const { return kind_; }
  std::string name() const;
  int dimension() const { return dimension_; }

  Vector sample(const Vector& exact, std::size_t k, Stream& rng) const;
  // E[f | current point].
  Vector mean(const Vector& exact, std::size_t k) const;

  MomentCoefficients declared_moments(std::size_t k) const;
  // (d, e) for the error f - g; nullopt when no such bound holds uniformly.
  std::optional<ErrorCoefficients> declared_errors(std::size_t k) const;
  double bias_norm(std::size_t k) const;
  bool unbiased() const { return kind_ != Kind::biased_decaying; }

  // Declared sequences for the coefficient calculators.
  Sequence a_sequence() const;
  Sequence b_sequence() const;
  Sequence c_sequence() const;
  Sequence bias_sequence() const;
  Sequence d_sequence() const;
  Sequence e_sequence() const;

  const Schedule& sigma() const { return sigma_; }
  double strong_growth() const { return growth_; }
  const std::vector<Vector>& offsets() const { return offsets_; }
  std::size_t batch() const { return batch_; }

 private:
  GradientOracle() = default;

  Kind kind_ = Kind::additive_gaussian;
  int dimension_ = 1;
  Schedule sigma_ = Schedule::zero();
  Schedule bias_ = Schedule::zero();
  double growth_ = 1.0;
  std::vector<Vector> offsets_;
  std::size_t batch_ = 1;
  double batch_variance_ = 0.0;
  Vector bias_direction_;
};

struct MomentReport {
  double mean = 0.0;
  double se = 0.0;
  double bound = 0.0;
  Verdict verdict = Verdict::inconclusive;
};

// Monte-Carlo estimate of E||f_k||^2 at x against the declared bound; pass
// when mean - 4 se stays at or below it.
MomentReport empirical_moment_check(const GradientOracle& oracle, const Problem& problem,
                                    const Vector& x, std::size_t k, std::size_t samples,
                                    std::uint64_t seed,
                                    std::optional<MomentCoefficients> declared = std::nullopt);

// Random self-adjoint operator with spectrum in [mu_k, nu_k].
class Preconditioner {
 public:
  enum class Kind { identity, random_diagonal, capped_bfgs };

  static Preconditioner identity();
  static Preconditioner random_diagonal(Schedule mu, Schedule nu);
  // Inverse-BFGS update of the identity from a random secant pair, then
  // eigenvalues clipped to [mu_k, nu_k].
  static Preconditioner capped_bfgs(Schedule mu, Schedule nu);

  Kind kind() const { return kind_; }
  std::string name() const;

  Matrix sample(const Vector& x, std::size_t k, Stream& rng) const;
  // True when every draw equals the same multiple of the identity.
  std::optional<double> deterministic_scale(std::size_t k) const;

  Sequence mu_sequence() const;
  Sequence nu_sequence() const;
  double mu(std::size_t k) const { return mu_(k); }
  double nu(std::size_t k) const { return nu_(k); }

 private:
  Preconditioner(Kind kind, Schedule mu, Schedule nu);

  Kind kind_;
  Schedule mu_;
  Schedule nu_;
};

// Stochastic approximation of prox_{gamma H} for a convex quadratic H.
class ProxOracle {
 public:
  enum class Kind { exact, federated, perturbed };

  static ProxOracle exact(ConvexQuadratic h);
  // P(y) = (I / m) sum_{i in S} w_i prox_{gamma H_i}(y), S uniform of size m.
  // The clients must satisfy sum w_i H_i = h up to a constant; declared errors
  // are worst cases over |y_i| <= y_radius.
  static ProxOracle federated(ConvexQuadratic h, std::vector<ConvexQuadratic> clients,
                              std::vector<double> weights, std::size_t subset, double y_radius);
  // Exact prox plus Gaussian noise of total variance e_k.
  static ProxOracle perturbed(ConvexQuadratic h, Schedule e);

  Kind kind() const { return kind_; }
  std::string name() const;
  const ConvexQuadratic& target() const { return h_; }

  Vector sample(const Vector& y, double gamma, std::size_t k, Stream& rng) const;
  Vector exact_prox(const Vector& y, double gamma) const { return h_.prox(y, gamma); }
  // E[P(y)].
  Vector mean(const Vector& y, double gamma) const;
  bool unbiased(double gamma) const;

  ErrorCoefficients declared_errors(std::size_t k, double gamma) const;
  // Exact E||P(y) - prox(y)||^2; federated draws are enumerated.
  double error_second_moment(const Vector& y, double gamma, std::size_t k) const;

  const std::vector<ConvexQuadratic>& clients() const { return clients_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t subset() const { return subset_; }

 private:
  ProxOracle() = default;
  // All subsets of size subset_ of the clients.
  std::vector<std::vector<std::size_t>> subsets() const;
  Vector subset_prox(const std::vector<std::size_t>& s, const Vector& y, double gamma) const;

  Kind kind_ = Kind::exact;
  ConvexQuadratic h_;
  std::vector<ConvexQuadratic> clients_;
  std::vector<double> weights_;
  std::size_t subset_ = 0;
  double y_radius_ = 0.0;
  Schedule e_ = Schedule::zero();
};

}  // namespace klsgd
