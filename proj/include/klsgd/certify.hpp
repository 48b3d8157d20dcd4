#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "klsgd/coefficients.hpp"
#include "klsgd/schemes.hpp"
#include "klsgd/stats.hpp"

namespace klsgd {

struct Evidence {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
  double bound = std::numeric_limits<double>::quiet_NaN();
  double margin = std::numeric_limits<double>::quiet_NaN();
  std::optional<std::size_t> first_violation_k;
  nlohmann::json extras = nlohmann::json::object();
};

struct CertificateEntry {
  std::string check;
  // The inequality being certified, in plain notation.
  std::string condition;
  Verdict verdict = Verdict::inconclusive;
  Evidence evidence{};

  nlohmann::json to_json() const;
};

struct CertificateReport {
  std::vector<CertificateEntry> entries;

  void add(CertificateEntry entry) { entries.push_back(std::move(entry)); }
  void append(const CertificateReport& other);
  std::size_t count(Verdict v) const;
  const CertificateEntry* find(const std::string& check) const;
  nlohmann::json to_json() const;
};

// Symbolic summability verdict, with the partial sum over [0, horizon] as
// evidence.
CertificateEntry check_summable(const std::string& check, const std::string& condition,
                                const Sequence& seq, std::size_t horizon);
// Fails on the first nonpositive value in [0, horizon] or a zero limit.
CertificateEntry check_inf_positive(const std::string& check, const std::string& condition,
                                    const Sequence& seq, std::size_t horizon);
// sup seq < bound (strict) or sup seq <= bound.
CertificateEntry check_sup_below(const std::string& check, const std::string& condition,
                                 const Sequence& seq, double bound, bool strict,
                                 std::size_t horizon);
// Relative tolerance 1e-12 between consecutive terms.
CertificateEntry check_nonincreasing(const std::string& check, const std::string& condition,
                                     const std::vector<double>& values);

// p_0..p_horizon for the given u.
std::vector<double> growth_products(const Sequence& u, std::size_t horizon);

// Summability of u, r, t, w, positivity of v and monotonicity of s p / v.
CertificateReport check_convergence_premises(const DescentCoefficients& coeffs, std::size_t horizon);

// Premises under which the SGD coefficients are valid.
CertificateReport sgd_premises(const SgdCoefficientInput& in, const DescentCoefficients& coeffs,
                               std::size_t horizon);

// Premises under which the proximal coefficients are valid.
CertificateReport prox_premises(const ProxCoefficientInput& in, const ProxCoefficients& out,
                                std::size_t horizon);

// Exact E[F(x+) - F*] when it has a closed form: isotropic quadratic, SGD with
// a deterministic scalar preconditioner and additive or multiplicative noise.
std::optional<double> analytic_expected_gap(const Scheme& scheme, const Problem& problem,
                                            const Vector& x, std::size_t k);

// E[F(x+) - F* | x] <= (1 + u)(F(x) - F*) - v ||grad F(x)||^2 + w estimated
// from M one-step continuations.
CertificateEntry mc_certify_descent(const Scheme& scheme, const Problem& problem, const Vector& x,
                                    std::size_t k, const DescentCoefficients& coeffs,
                                    std::size_t samples, std::uint64_t seed);

// E[||x+ - x|| | x] <= r sqrt(F(x) - F*) + s ||grad F(x)|| + t.
CertificateEntry mc_certify_stepbound(const Scheme& scheme, const Problem& problem,
                                      const Vector& x, std::size_t k, const DescentCoefficients& coeffs,
                                      std::size_t samples, std::uint64_t seed);

// E[P(y) - prox(y)] = 0 coordinate-wise, within 4 standard errors.
CertificateEntry mc_certify_prox_unbiased(const ProxGradientScheme& scheme, const Vector& y,
                                          std::size_t k, std::size_t samples, std::uint64_t seed);

}  // namespace klsgd
