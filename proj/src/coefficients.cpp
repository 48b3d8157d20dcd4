#include "klsgd/coefficients.hpp"

#include <cmath>
#include <stdexcept>

namespace klsgd {

DescentCoefficients sgd_coefficients(const SgdCoefficientInput& in) {
  if (!(in.beta > 0.0)) throw std::invalid_argument("Lipschitz constant must be positive");
  if (in.biased && !(in.rho > 0.0 && in.rho < 1.0)) {
    throw std::invalid_argument("descent share must lie in (0, 1)");
  }
  const Sequence nu2 = in.nu * in.nu;
  const Sequence alpha2 = in.alpha * in.alpha;
  const Sequence descent = in.biased ? in.rho * in.mu : in.mu;
  DescentCoefficients out;
  out.u = (in.beta / 2.0) * (alpha2 * nu2 * in.a);
  out.v = in.alpha * (descent - (in.beta / 2.0) * (in.alpha * nu2 * in.b));
  out.w = (in.beta / 2.0) * (alpha2 * nu2 * in.c);
  if (in.biased) {
    const double scale = 1.0 / (4.0 * (1.0 - in.rho));
    out.w = out.w + scale * (in.alpha * nu2 * reciprocal(in.mu) * (in.bias * in.bias));
  }
  const Sequence step = in.alpha * in.nu;
  out.r = step * sqrt(in.a);
  out.s = step * sqrt(in.b);
  out.t = step * sqrt(in.c);
  return out;
}

ProxCoefficients prox_coefficients(const ProxCoefficientInput& in) {
  if (!(in.beta_convex > 0.0)) throw std::invalid_argument("convex curvature must be positive");
  if (!(in.beta_smooth >= 0.0)) throw std::invalid_argument("smooth Lipschitz constant must be nonnegative");
  ProxCoefficients out;
  out.beta = in.beta_smooth + in.beta_convex;
  const double beta = out.beta;
  const double bh = in.beta_convex;
  const Sequence gamma = in.gamma;
  const Sequence lambda = in.lambda;
  const Sequence d = in.d;
  const Sequence e = in.e;

  out.rho = Sequence([gamma, bh](std::size_t k) { return 1.0 / (1.0 - bh * gamma(k)); },
                     Summability::unknown,
                     gamma.limit() ? std::optional<double>(1.0 / (1.0 - bh * *gamma.limit()))
                                   : std::nullopt,
                     "1/(1-beta_h*gamma)");
  const Sequence rho = out.rho;
  out.sigma = 0.5 * (gamma * rho) * ((std::sqrt(2.0) + 1.0) * bh * Sequence(Schedule::constant(1.0)) +
                                     (4.0 * beta) * (lambda * rho));
  // lambda beta / gamma
  const Sequence pull = beta * (lambda * reciprocal(gamma));
  const Sequence gl = gamma * lambda;
  out.contraction = out.sigma + d * (out.sigma + pull);

  DescentCoefficients& c = out.coeffs;
  c.u = Sequence(Schedule::zero());
  c.v = gl * (Sequence(Schedule::constant(1.0)) - out.sigma * (Sequence(Schedule::constant(1.0)) + d) -
              pull * d);
  c.w = gl * e * (out.sigma + pull);
  c.r = Sequence(Schedule::zero());
  const Sequence root_d = sqrt(d);
  c.s = gl * (rho + rho * root_d + root_d);
  c.t = gl * (rho + Sequence(Schedule::constant(1.0))) * sqrt(e);
  return out;
}

}  // namespace klsgd
