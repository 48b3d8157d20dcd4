#pragma once

#include "klsgd/sequence.hpp"

namespace klsgd {

// Deterministic sequences of the two descent inequalities
//   E[F(x+) - F* | x] <= (1 + u)(F(x) - F*) - v ||grad F(x)||^2 + w,
//   E[||x+ - x|| | x] <= r sqrt(F(x) - F*) + s ||grad F(x)|| + t.
struct DescentCoefficients {
  Sequence u;
  Sequence v;
  Sequence w;
  Sequence r;
  Sequence s;
  Sequence t;
};

// Preconditioned SGD with moment coefficients (a, b, c) and spectrum
// [mu, nu]. In the biased case the descent share rho lies in (0, 1) and the
// bias norm enters w.
struct SgdCoefficientInput {
  Sequence alpha;
  Sequence mu;
  Sequence nu;
  Sequence a;
  Sequence b;
  Sequence c;
  Sequence bias;
  double beta = 1.0;
  bool biased = false;
  double rho = 0.5;
};

DescentCoefficients sgd_coefficients(const SgdCoefficientInput& in);

// Stochastic forward-backward with steps gamma, relaxation lambda and
// error coefficients (d, e) shared by the gradient and prox oracles.
struct ProxCoefficientInput {
  Sequence gamma;
  Sequence lambda;
  Sequence d;
  Sequence e;
  double beta_smooth = 0.0;
  double beta_convex = 1.0;
};

struct ProxCoefficients {
  double beta = 0.0;
  // 1 / (1 - beta_convex gamma).
  Sequence rho;
  Sequence sigma;
  // sigma + d (sigma + lambda beta / gamma); must stay below 1.
  Sequence contraction;
  DescentCoefficients coeffs;
};

ProxCoefficients prox_coefficients(const ProxCoefficientInput& in);

}  // namespace klsgd
