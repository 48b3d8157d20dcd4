#include "klsgd/certify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace klsgd {

namespace {

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json limit_json(const Sequence& s) {
  return s.limit() ? number_or_null(*s.limit()) : nlohmann::json(nullptr);
}

double tolerance_for(double scale) { return 1e-12 * std::max(1.0, std::abs(scale)); }

}  // namespace

nlohmann::json CertificateEntry::to_json() const {
  nlohmann::json ev = {{"mean", number_or_null(evidence.mean)},
                       {"se", number_or_null(evidence.se)},
                       {"bound", number_or_null(evidence.bound)},
                       {"margin", number_or_null(evidence.margin)}};
  ev["first_violation_k"] = evidence.first_violation_k
                                ? nlohmann::json(*evidence.first_violation_k)
                                : nlohmann::json(nullptr);
  for (const auto& [key, value] : evidence.extras.items()) ev[key] = value;
  return {{"check", check},
          {"paper_condition", condition},
          {"verdict", to_string(verdict)},
          {"evidence", ev}};
}

void CertificateReport::append(const CertificateReport& other) {
  entries.insert(entries.end(), other.entries.begin(), other.entries.end());
}

std::size_t CertificateReport::count(Verdict v) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [v](const auto& e) { return e.verdict == v; }));
}

const CertificateEntry* CertificateReport::find(const std::string& check) const {
  for (const auto& e : entries) {
    if (e.check == check) return &e;
  }
  return nullptr;
}

nlohmann::json CertificateReport::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : entries) list.push_back(e.to_json());
  return {{"entries", list},
          {"summary",
           {{"pass", count(Verdict::pass)},
            {"fail", count(Verdict::fail)},
            {"inconclusive", count(Verdict::inconclusive)}}}};
}

CertificateEntry check_summable(const std::string& check, const std::string& condition,
                                const Sequence& seq, std::size_t horizon) {
  CertificateEntry entry{check, condition};
  double partial = 0.0;
  for (std::size_t k = 0; k <= horizon; ++k) partial += seq(k);
  entry.evidence.mean = partial;
  entry.evidence.extras = {{"horizon", horizon},
                           {"symbolic", to_string(seq.summability())},
                           {"sequence", seq.description()}};
  switch (seq.summability()) {
    case Summability::yes:
      entry.verdict = Verdict::pass;
      break;
    case Summability::no:
      entry.verdict = Verdict::fail;
      break;
    case Summability::unknown:
      entry.verdict = Verdict::inconclusive;
      break;
  }
  return entry;
}

CertificateEntry check_inf_positive(const std::string& check, const std::string& condition,
                                    const Sequence& seq, std::size_t horizon) {
  CertificateEntry entry{check, condition};
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= horizon; ++k) {
    const double value = seq(k);
    if (!(value > 0.0) && !entry.evidence.first_violation_k) entry.evidence.first_violation_k = k;
    smallest = std::min(smallest, value);
  }
  entry.evidence.mean = smallest;
  entry.evidence.bound = 0.0;
  entry.evidence.margin = smallest;
  entry.evidence.extras = {{"horizon", horizon}, {"limit", limit_json(seq)}};
  if (entry.evidence.first_violation_k) {
    entry.verdict = Verdict::fail;
  } else if (!seq.limit()) {
    entry.verdict = Verdict::inconclusive;
  } else {
    entry.verdict = *seq.limit() > 0.0 ? Verdict::pass : Verdict::fail;
  }
  return entry;
}

CertificateEntry check_sup_below(const std::string& check, const std::string& condition,
                                 const Sequence& seq, double bound, bool strict,
                                 std::size_t horizon) {
  CertificateEntry entry{check, condition};
  const auto violates = [&](double value) {
    return std::isnan(value) || (strict ? value >= bound : value > bound);
  };
  double largest = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= horizon; ++k) {
    const double value = seq(k);
    if (violates(value) && !entry.evidence.first_violation_k) entry.evidence.first_violation_k = k;
    largest = std::max(largest, value);
  }
  entry.evidence.mean = largest;
  entry.evidence.bound = bound;
  entry.evidence.margin = bound - largest;
  entry.evidence.extras = {{"horizon", horizon}, {"limit", limit_json(seq)}, {"strict", strict}};
  if (entry.evidence.first_violation_k) {
    entry.verdict = Verdict::fail;
  } else if (!seq.limit()) {
    entry.verdict = Verdict::inconclusive;
  } else {
    entry.verdict = violates(*seq.limit()) ? Verdict::fail : Verdict::pass;
  }
  return entry;
}

CertificateEntry check_nonincreasing(const std::string& check, const std::string& condition,
                                     const std::vector<double>& values) {
  CertificateEntry entry{check, condition};
  double worst = 0.0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    const double rise = values[k] - values[k - 1];
    if (!(rise <= tolerance_for(values[k - 1])) && !entry.evidence.first_violation_k) {
      entry.evidence.first_violation_k = k;
    }
    worst = std::max(worst, rise);
  }
  entry.evidence.mean = values.empty() ? 0.0 : values.back();
  entry.evidence.margin = -worst;
  entry.evidence.extras = {{"horizon", values.empty() ? 0 : values.size() - 1}};
  entry.verdict = entry.evidence.first_violation_k ? Verdict::fail : Verdict::pass;
  return entry;
}

std::vector<double> growth_products(const Sequence& u, std::size_t horizon) {
  std::vector<double> p(horizon + 1);
  double running = 1.0;
  for (std::size_t k = 0; k <= horizon; ++k) {
    running *= 1.0 + u(k);
    p[k] = running;
  }
  return p;
}

CertificateReport check_convergence_premises(const DescentCoefficients& c, std::size_t horizon) {
  if (horizon < 10) throw std::invalid_argument("premise horizon must be at least 10");
  CertificateReport report;
  report.add(check_summable("sum_u", "sum_k u_k < +inf", c.u, horizon));
  report.add(check_inf_positive("inf_v", "inf_k v_k > 0", c.v, horizon));
  report.add(check_summable("sum_w", "sum_k w_k < +inf", c.w, horizon));
  report.add(check_summable("sum_r", "sum_k r_k < +inf", c.r, horizon));
  report.add(check_summable("sum_t", "sum_k t_k < +inf", c.t, horizon));
  const auto p = growth_products(c.u, horizon);
  std::vector<double> ratio(horizon + 1);
  for (std::size_t k = 0; k <= horizon; ++k) ratio[k] = c.s(k) * p[k] / c.v(k);
  report.add(check_nonincreasing("s_p_over_v_nonincreasing", "(s_k p_k / v_k) non-increasing",
                                 ratio));
  return report;
}

CertificateReport sgd_premises(const SgdCoefficientInput& in, const DescentCoefficients& coeffs,
                               std::size_t horizon) {
  CertificateReport report;
  report.add(check_inf_positive("inf_mu", "inf_k mu_k > 0", in.mu, horizon));
  report.add(check_summable("sum_alpha_nu_sqrt_a", "sum_k alpha_k nu_k a_k^(1/2) < +inf", coeffs.r,
                            horizon));
  report.add(check_summable("sum_alpha_nu_sqrt_c", "sum_k alpha_k nu_k c_k^(1/2) < +inf", coeffs.t,
                            horizon));
  if (in.biased) {
    const Sequence majorant = in.alpha * (in.nu * in.nu) * reciprocal(in.mu) * (in.bias * in.bias);
    report.add(check_summable("sum_bias", "sum_k alpha_k nu_k^2 / mu_k ||E[f_k] - grad F||^2 < +inf",
                              majorant, horizon));
    report.add(check_inf_positive("inf_v",
                                  "inf_k alpha_k (rho mu_k - alpha_k beta nu_k^2 b_k / 2) > 0",
                                  coeffs.v, horizon));
  } else {
    report.add(check_inf_positive("inf_v", "inf_k alpha_k (mu_k - alpha_k beta nu_k^2 b_k / 2) > 0",
                                  coeffs.v, horizon));
  }
  return report;
}

CertificateReport prox_premises(const ProxCoefficientInput& in, const ProxCoefficients& out,
                                std::size_t horizon) {
  CertificateReport report;
  report.add(check_inf_positive("inf_lambda_gamma", "inf_k lambda_k gamma_k > 0",
                                in.lambda * in.gamma, horizon));
  report.add(check_sup_below("sup_lambda", "sup_k lambda_k <= 1", in.lambda, 1.0, false, horizon));
  report.add(check_sup_below("sup_gamma", "sup_k gamma_k < 1 / beta_H", in.gamma,
                             1.0 / in.beta_convex, true, horizon));
  report.add(check_summable("sum_sqrt_e", "sum_k e_k^(1/2) < +inf", sqrt(in.e), horizon));
  auto contraction = check_sup_below(
      "contraction", "sup_k sigma_k + d_k (sigma_k + lambda_k beta / gamma_k) < 1",
      out.contraction, 1.0, true, horizon);
  contraction.evidence.extras["rho_0"] = out.rho(0);
  contraction.evidence.extras["sigma_0"] = out.sigma(0);
  contraction.evidence.extras["beta"] = out.beta;
  report.add(std::move(contraction));
  return report;
}

std::optional<double> analytic_expected_gap(const Scheme& scheme, const Problem& problem,
                                            const Vector& x, std::size_t k) {
  const auto* sgd = std::get_if<SgdScheme>(&scheme);
  if (!sgd || !problem.isotropic_curvature()) return std::nullopt;
  const auto scale = sgd->preconditioner.deterministic_scale(k);
  if (!scale) return std::nullopt;
  const double beta = *problem.isotropic_curvature();
  const double step = sgd->step(k) * *scale;
  const double squared = x.squaredNorm();
  switch (sgd->oracle.kind()) {
    case GradientOracle::Kind::additive_gaussian: {
      const double contraction = 1.0 - step * beta;
      const double sigma = sgd->oracle.sigma()(k);
      return 0.5 * beta *
             (contraction * contraction * squared +
              step * step * static_cast<double>(problem.dimension()) * sigma * sigma);
    }
    case GradientOracle::Kind::multiplicative: {
      const double c = step * beta;
      return 0.5 * beta * squared * (1.0 - 2.0 * c + c * c * sgd->oracle.strong_growth());
    }
    default:
      return std::nullopt;
  }
}

namespace {

// Shared three-valued rule for an estimated expectation against a bound.
Verdict mc_verdict(double mean, double se, double bound) {
  const double tol = tolerance_for(bound);
  if (mean + kStandardErrors * se <= bound + tol) return Verdict::pass;
  if (mean - kStandardErrors * se > bound + tol) return Verdict::fail;
  return Verdict::inconclusive;
}

}  // namespace

CertificateEntry mc_certify_descent(const Scheme& scheme, const Problem& problem, const Vector& x,
                                    std::size_t k, const DescentCoefficients& coeffs,
                                    std::size_t samples, std::uint64_t seed) {
  if (samples < 1000) throw std::invalid_argument("certification needs at least 1000 samples");
  CertificateEntry entry{"descent",
                         "E[F(x_{k+1}) - F* | F_k] <= (1 + u_k)(F(x_k) - F*) - v_k "
                         "||grad F(x_k)||^2 + w_k"};
  const double gap = problem.evaluate(x) - problem.f_star();
  const double bound =
      (1.0 + coeffs.u(k)) * gap - coeffs.v(k) * problem.gradient(x).squaredNorm() + coeffs.w(k);
  RunningStats stats;
  for (std::size_t j = 0; j < samples; ++j) {
    const auto next = step(scheme, problem, x, k, {seed, j});
    stats.add(problem.evaluate(next.next) - problem.f_star());
  }
  entry.evidence.mean = stats.mean();
  entry.evidence.se = stats.se();
  entry.evidence.bound = bound;
  entry.evidence.margin = bound - stats.mean();
  entry.evidence.extras = {{"k", k}, {"samples", samples}};
  const auto analytic = analytic_expected_gap(scheme, problem, x, k);
  if (analytic) {
    entry.evidence.extras["analytic"] = *analytic;
    const double scale = std::max(1.0, std::abs(bound));
    const bool consistent =
        std::abs(stats.mean() - *analytic) <= kStandardErrors * stats.se() + tolerance_for(*analytic);
    entry.evidence.extras["analytic_consistent"] = consistent;
    if (*analytic > bound + 1e-10 * scale) {
      entry.verdict = Verdict::fail;
    } else if (consistent) {
      entry.verdict = Verdict::pass;
    } else {
      entry.verdict = Verdict::inconclusive;
    }
    return entry;
  }
  entry.verdict = mc_verdict(stats.mean(), stats.se(), bound);
  return entry;
}

CertificateEntry mc_certify_stepbound(const Scheme& scheme, const Problem& problem,
                                      const Vector& x, std::size_t k, const DescentCoefficients& coeffs,
                                      std::size_t samples, std::uint64_t seed) {
  if (samples < 1000) throw std::invalid_argument("certification needs at least 1000 samples");
  CertificateEntry entry{"step_bound",
                         "E[||x_{k+1} - x_k|| | F_k] <= r_k sqrt(F(x_k) - F*) + s_k "
                         "||grad F(x_k)|| + t_k"};
  const double gap = std::max(0.0, problem.evaluate(x) - problem.f_star());
  const double bound =
      coeffs.r(k) * std::sqrt(gap) + coeffs.s(k) * problem.gradient(x).norm() + coeffs.t(k);
  RunningStats stats;
  for (std::size_t j = 0; j < samples; ++j) {
    const auto next = step(scheme, problem, x, k, {seed, j});
    stats.add((next.next - x).norm());
  }
  entry.evidence.mean = stats.mean();
  entry.evidence.se = stats.se();
  entry.evidence.bound = bound;
  entry.evidence.margin = bound - stats.mean();
  entry.evidence.extras = {{"k", k}, {"samples", samples}};
  entry.verdict = mc_verdict(stats.mean(), stats.se(), bound);
  return entry;
}

CertificateEntry mc_certify_prox_unbiased(const ProxGradientScheme& scheme, const Vector& y,
                                          std::size_t k, std::size_t samples, std::uint64_t seed) {
  if (samples < 1000) throw std::invalid_argument("certification needs at least 1000 samples");
  CertificateEntry entry{"prox_unbiased", "E[P_k(y) - prox_{gamma_k H}(y) | F_k] = 0"};
  const double gamma = scheme.gamma(k);
  const Vector target = scheme.prox.exact_prox(y, gamma);
  std::vector<RunningStats> stats(y.size());
  for (std::size_t j = 0; j < samples; ++j) {
    Stream rng({seed, j}, k, StreamRole::prox);
    const Vector deviation = scheme.prox.sample(y, gamma, k, rng) - target;
    for (Eigen::Index i = 0; i < y.size(); ++i) stats[i].add(deviation[i]);
  }
  double worst_z = 0.0;
  double worst_mean = 0.0;
  double worst_se = 0.0;
  bool biased = false;
  for (const auto& s : stats) {
    const double magnitude = std::abs(s.mean());
    if (s.se() > 0.0) {
      const double z = magnitude / s.se();
      if (z > worst_z) {
        worst_z = z;
        worst_mean = s.mean();
        worst_se = s.se();
      }
      biased = biased || z > kStandardErrors;
    } else if (magnitude > tolerance_for(target.norm())) {
      biased = true;
      worst_z = std::numeric_limits<double>::infinity();
      worst_mean = s.mean();
    }
  }
  entry.evidence.mean = worst_mean;
  entry.evidence.se = worst_se;
  entry.evidence.bound = 0.0;
  entry.evidence.margin = kStandardErrors - worst_z;
  entry.evidence.extras = {{"k", k},
                           {"samples", samples},
                           {"max_z", number_or_null(worst_z)},
                           {"declared_unbiased", scheme.prox.unbiased(gamma)}};
  entry.verdict = biased ? Verdict::fail : Verdict::pass;
  return entry;
}

}  // namespace klsgd
