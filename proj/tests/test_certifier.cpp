#include <catch_amalgamated.hpp>

#include <cmath>

#include "klsgd/certify.hpp"
#include "klsgd/coefficients.hpp"
#include "klsgd/diagnostics.hpp"
#include "klsgd/lyapunov.hpp"

using namespace klsgd;

namespace {

Vector point(double a, double b) {
  Vector x(2);
  x << a, b;
  return x;
}

SgdCoefficientInput plain_input(double alpha, const GradientOracle& oracle, double beta) {
  SgdCoefficientInput in;
  in.alpha = Sequence(Schedule::constant(alpha));
  in.mu = Sequence(Schedule::constant(1.0));
  in.nu = Sequence(Schedule::constant(1.0));
  in.a = oracle.a_sequence();
  in.b = oracle.b_sequence();
  in.c = oracle.c_sequence();
  in.bias = oracle.bias_sequence();
  in.beta = beta;
  in.biased = !oracle.unbiased();
  return in;
}

DescentCoefficients constant_coeffs(double u, double v, double w, double r, double s, double t) {
  const auto c = [](double x) { return Sequence(x == 0.0 ? Schedule::zero() : Schedule::constant(x)); };
  return {c(u), c(v), c(w), c(r), c(s), c(t)};
}

}  // namespace

TEST_CASE("descent bound is tight for plain SGD on a quadratic") {
  const auto problem = quadratic(2, 1.0);
  const auto oracle = GradientOracle::additive_gaussian(2, Schedule::constant(0.5));
  const Scheme scheme = SgdScheme{oracle, Preconditioner::identity(), Schedule::constant(0.1)};
  const auto coeffs = sgd_coefficients(plain_input(0.1, oracle, 1.0));
  for (const auto& x : {point(1.0, 0.0), point(-0.3, 2.0), point(0.0, 0.0)}) {
    const double f = 0.5 * x.squaredNorm();
    const double bound = (1 + coeffs.u(0)) * f - coeffs.v(0) * x.squaredNorm() + coeffs.w(0);
    const double closed = 0.81 * f + 0.01 * 2 * 0.25 / 2.0;
    CHECK(bound == Catch::Approx(closed).epsilon(1e-12).margin(1e-15));
    const auto entry = mc_certify_descent(scheme, problem, x, 0, coeffs, 20000, 7);
    CHECK(entry.verdict == Verdict::pass);
    CHECK(std::abs(entry.evidence.mean - bound) < 4 * entry.evidence.se);
    CHECK(entry.evidence.extras["analytic"].get<double>() == Catch::Approx(closed).epsilon(1e-12));
  }
}

TEST_CASE("an overstated descent bound fails") {
  const auto problem = quadratic(2, 1.0);
  const auto oracle = GradientOracle::additive_gaussian(2, Schedule::constant(0.5));
  const Scheme scheme = SgdScheme{oracle, Preconditioner::identity(), Schedule::constant(0.1)};
  const auto wrong = constant_coeffs(0, 0.5, 0, 0, 0.1, 0);
  CHECK(mc_certify_descent(scheme, problem, point(1, 1), 0, wrong, 5000, 1).verdict == Verdict::fail);
  // Without a closed form the rule is the plain confidence interval.
  const Scheme bfgs = SgdScheme{oracle, Preconditioner::capped_bfgs(Schedule::constant(0.5), Schedule::constant(1.0)),
                                Schedule::constant(0.1)};
  CHECK(mc_certify_descent(bfgs, problem, point(1, 1), 0, wrong, 5000, 1).verdict == Verdict::fail);
  const auto loose = constant_coeffs(0, 0.0, 1.0, 0, 0.1, 0);
  CHECK(mc_certify_descent(bfgs, problem, point(1, 1), 0, loose, 5000, 1).verdict == Verdict::pass);
}

TEST_CASE("step bound holds for SGD with declared moments") {
  const auto problem = circle_quartic();
  const auto oracle = GradientOracle::additive_gaussian(2, Schedule::constant(0.3));
  const Scheme scheme = SgdScheme{oracle, Preconditioner::identity(), Schedule::constant(0.01)};
  const auto coeffs = sgd_coefficients(plain_input(0.01, oracle, problem.beta()));
  const auto entry = mc_certify_stepbound(scheme, problem, point(1.2, 0.4), 0, coeffs, 10000, 2);
  CHECK(entry.verdict == Verdict::pass);
  CHECK(entry.evidence.margin > 0.0);
}

TEST_CASE("inf v > 0 exactly below the strong-growth threshold") {
  const auto oracle = GradientOracle::multiplicative(2, 2.0);
  for (double alpha : {0.1, 0.5, 0.99}) {
    const auto in = plain_input(alpha, oracle, 1.0);
    const auto coeffs = sgd_coefficients(in);
    CHECK(coeffs.v(0) == Catch::Approx(alpha * (1 - alpha)));
    CHECK(sgd_premises(in, coeffs, 100).find("inf_v")->verdict == Verdict::pass);
  }
  for (double alpha : {1.0, 1.5}) {
    const auto in = plain_input(alpha, oracle, 1.0);
    const auto coeffs = sgd_coefficients(in);
    const auto* entry = sgd_premises(in, coeffs, 100).find("inf_v");
    CHECK(entry->verdict == Verdict::fail);
    CHECK(entry->evidence.first_violation_k == 0u);
  }
}

TEST_CASE("premise summability follows the power family") {
  for (auto [p, expected] : {std::pair{0.5, Verdict::fail}, std::pair{1.0, Verdict::fail},
                             std::pair{1.01, Verdict::pass}, std::pair{2.0, Verdict::pass}}) {
    auto coeffs = constant_coeffs(0, 1, 0, 0, 1, 0);
    coeffs.w = Sequence(Schedule::power(1.0, p));
    CHECK(check_convergence_premises(coeffs, 100).find("sum_w")->verdict == expected);
  }
  for (auto [q, expected] : {std::pair{0.5, Verdict::pass}, std::pair{1.0, Verdict::fail}}) {
    auto coeffs = constant_coeffs(0, 1, 0, 0, 1, 0);
    coeffs.u = Sequence(Schedule::geometric(1.0, q));
    CHECK(check_convergence_premises(coeffs, 100).find("sum_u")->verdict == expected);
  }
}

TEST_CASE("monotonicity premise catches an increasing ratio") {
  auto coeffs = constant_coeffs(0, 1, 0, 0, 1, 0);
  CHECK(check_convergence_premises(coeffs, 50).find("s_p_over_v_nonincreasing")->verdict == Verdict::pass);
  coeffs.s = Sequence([](std::size_t k) { return 1.0 + 0.01 * k; }, Summability::no, std::nullopt, "rising");
  const auto report = check_convergence_premises(coeffs, 50);
  const auto* entry = report.find("s_p_over_v_nonincreasing");
  CHECK(entry->verdict == Verdict::fail);
  CHECK(entry->evidence.first_violation_k == 1u);
  CHECK_THROWS_AS(check_convergence_premises(coeffs, 5), std::invalid_argument);
}

TEST_CASE("unknown summability is inconclusive") {
  auto coeffs = constant_coeffs(0, 1, 0, 0, 1, 0);
  coeffs.t = Sequence([](std::size_t k) { return 1.0 / ((k + 1.0) * (k + 1.0)); }, Summability::unknown,
                      0.0, "opaque");
  CHECK(check_convergence_premises(coeffs, 50).find("sum_t")->verdict == Verdict::inconclusive);
}

TEST_CASE("noise scaling propagates to c and t") {
  for (double lambda : {0.5, 2.0, 3.0}) {
    const auto base = GradientOracle::additive_gaussian(2, Schedule::constant(0.4));
    const auto scaled = GradientOracle::additive_gaussian(2, Schedule::constant(0.4 * lambda));
    const auto a = sgd_coefficients(plain_input(0.1, base, 1.0));
    const auto b = sgd_coefficients(plain_input(0.1, scaled, 1.0));
    CHECK(scaled.c_sequence()(3) == Catch::Approx(lambda * lambda * base.c_sequence()(3)));
    CHECK(b.t(3) == Catch::Approx(lambda * a.t(3)));
    CHECK(b.w(3) == Catch::Approx(lambda * lambda * a.w(3)));
  }
}

TEST_CASE("biased oracle premises use the bias majorant") {
  const auto decaying =
      GradientOracle::biased_decaying(2, Schedule::power(0.1, 1.0), Schedule::power(0.2, 1.0));
  auto in = plain_input(0.05, decaying, 1.0);
  in.alpha = Sequence(Schedule::power(0.05, 0.6));
  auto coeffs = sgd_coefficients(in);
  const auto report = sgd_premises(in, coeffs, 100);
  CHECK(report.find("sum_bias")->verdict == Verdict::pass);
  const auto constant =
      GradientOracle::biased_decaying(2, Schedule::power(0.1, 1.0), Schedule::constant(0.2));
  auto in2 = plain_input(0.05, constant, 1.0);
  CHECK(sgd_premises(in2, sgd_coefficients(in2), 100).find("sum_bias")->verdict == Verdict::fail);
  in.rho = 1.0;
  CHECK_THROWS_AS(sgd_coefficients(in), std::invalid_argument);
}

TEST_CASE("proximal coefficients match their formulas") {
  ProxCoefficientInput in;
  in.gamma = Sequence(Schedule::constant(0.1));
  in.lambda = Sequence(Schedule::constant(1.0));
  in.d = Sequence(Schedule::zero());
  in.e = Sequence(Schedule::zero());
  in.beta_smooth = 1.0;
  in.beta_convex = 1.0;
  const auto out = prox_coefficients(in);
  const double rho = 1.0 / 0.9;
  const double sigma = 0.1 * rho / 2.0 * ((std::sqrt(2.0) + 1.0) + 4.0 * 2.0 * rho);
  CHECK(out.beta == 2.0);
  CHECK(out.rho(0) == Catch::Approx(rho));
  CHECK(out.sigma(0) == Catch::Approx(sigma));
  CHECK(sigma == Catch::Approx(0.628).margin(1e-3));
  CHECK(out.contraction(0) == Catch::Approx(sigma));
  CHECK(out.coeffs.v(0) == Catch::Approx(0.1 * (1 - sigma)));
  CHECK(out.coeffs.s(0) == Catch::Approx(0.1 * rho));
  CHECK(out.coeffs.t(0) == 0.0);
  const auto report = prox_premises(in, out, 100);
  CHECK(report.find("contraction")->verdict == Verdict::pass);
  CHECK(report.count(Verdict::fail) == 0);
}

TEST_CASE("proximal contraction fails for large steps") {
  ProxCoefficientInput in;
  in.gamma = Sequence(Schedule::constant(0.2));
  in.lambda = Sequence(Schedule::constant(1.0));
  in.d = Sequence(Schedule::zero());
  in.e = Sequence(Schedule::zero());
  in.beta_smooth = 44.0;
  in.beta_convex = 2.0;
  const auto out = prox_coefficients(in);
  const auto report = prox_premises(in, out, 100);
  CHECK(report.find("contraction")->verdict == Verdict::fail);
  CHECK(report.find("sup_gamma")->verdict == Verdict::pass);
  in.gamma = Sequence(Schedule::constant(0.5));
  CHECK(prox_premises(in, prox_coefficients(in), 100).find("sup_gamma")->verdict == Verdict::fail);
}

TEST_CASE("prox unbiasedness is tested, not assumed") {
  const auto problem = composite_quartic_quadratic(2, 2.0, point(1.0, 1.0));
  const auto& h = problem.split()->convex;
  const auto oracle = GradientOracle::additive_gaussian(2, Schedule::zero());
  const ProxGradientScheme exact{oracle, ProxOracle::exact(h), Schedule::constant(0.2),
                                 Schedule::constant(1.0)};
  CHECK(mc_certify_prox_unbiased(exact, point(2.0, 0.0), 0, 2000, 1).verdict == Verdict::pass);
  const auto fed = ProxOracle::federated(h, {{1.0, h.center}, {3.0, h.center}}, {0.5, 0.5}, 1, 3.0);
  const ProxGradientScheme federated{oracle, fed, Schedule::constant(0.2), Schedule::constant(1.0)};
  const auto off = mc_certify_prox_unbiased(federated, point(2.0, 0.0), 0, 5000, 1);
  CHECK(off.verdict == Verdict::fail);
  CHECK(off.evidence.extras["declared_unbiased"] == false);
  CHECK(mc_certify_prox_unbiased(federated, h.center, 0, 2000, 1).verdict == Verdict::pass);
}

TEST_CASE("certificate entries serialize the report schema") {
  const auto coeffs = constant_coeffs(0, 1, 0, 0, 1, 0);
  const auto json = check_convergence_premises(coeffs, 20).to_json();
  REQUIRE(json["entries"].size() == 6);
  for (const auto& e : json["entries"]) {
    CHECK(e.contains("check"));
    CHECK(e.contains("paper_condition"));
    CHECK(e.contains("verdict"));
    for (const char* key : {"mean", "se", "bound", "margin", "first_violation_k"}) {
      CHECK(e["evidence"].contains(key));
    }
  }
  CHECK(json["summary"]["pass"] == 6);
}

TEST_CASE("deterministic descent diagnostics match the geometric series") {
  const auto problem = quadratic(2, 1.0);
  const Scheme scheme = SgdScheme{GradientOracle::additive_gaussian(2, Schedule::zero()),
                                  Preconditioner::identity(), Schedule::constant(0.1)};
  const Vector x0 = point(3.0, -4.0);
  const auto traj = run_trajectory(scheme, problem, 400, 0, x0);
  DiagnosticsOptions options;
  options.tail_window = 100;
  const auto d = convergence_diagnostics(traj, options);
  CHECK(d.path_length == Catch::Approx(0.1 * 5.0 / 0.1).epsilon(1e-8));
  for (std::size_t k = 1; k < d.cauchy_tail.size(); ++k) CHECK(d.cauchy_tail[k] <= d.cauchy_tail[k - 1]);
  CHECK(d.cauchy_tail.back() == 0.0);
  CHECK(d.success);
  CHECK(d.level.verdict == Verdict::pass);
  CHECK(d.accumulation_diameter < 1e-12);
}

TEST_CASE("double well descends to the right minimum") {
  const auto problem = double_well_1d();
  const Scheme scheme = SgdScheme{GradientOracle::additive_gaussian(1, Schedule::zero()),
                                  Preconditioner::identity(), Schedule::constant(0.01)};
  const auto traj = run_trajectory(scheme, problem, 3000, 0, Vector::Constant(1, 2.0));
  CHECK(traj.rows.back().x[0] == Catch::Approx(1.0).margin(1e-9));
  const auto d = convergence_diagnostics(traj);
  REQUIRE(d.level.level);
  CHECK(*d.level.level == 0.0);
  CHECK(d.level.verdict == Verdict::pass);
  REQUIRE(d.kl_entry);
}

TEST_CASE("equidistant critical levels are a tie") {
  const auto m = match_critical_level(0.5, 0.0, {0.0, 1.0});
  CHECK(m.verdict == Verdict::inconclusive);
  CHECK(m.tied.size() == 2);
  CHECK_FALSE(m.level);
  const auto far = match_critical_level(0.2, 0.0, {0.0, 1.0});
  CHECK(far.verdict == Verdict::fail);
  CHECK(match_critical_level(0.2, 0.1, {0.0, 1.0}).verdict == Verdict::pass);
}

TEST_CASE("multi-seed summary uses medians") {
  std::vector<DiagnosticsReport> reports(3);
  reports[0].final_dist = 1.0;
  reports[1].final_dist = 3.0;
  reports[2].final_dist = 2.0;
  reports[1].success = true;
  const auto s = summarize(reports);
  CHECK(s.runs == 3);
  CHECK(s.successes == 1);
  CHECK(s.median_final_dist == 2.0);
  CHECK(s.success_fraction == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("limit-event proxy on a deterministic contraction") {
  const auto problem = quadratic(2, 1.0);
  const auto oracle = GradientOracle::additive_gaussian(2, Schedule::zero());
  const Scheme scheme = SgdScheme{oracle, Preconditioner::identity(), Schedule::constant(0.1)};
  const auto coeffs = sgd_coefficients(plain_input(0.1, oracle, 1.0));
  const auto traj = run_trajectory(scheme, problem, 100, 0, point(1.0, 1.0), &coeffs);
  const auto xi = xi_gamma_monitor(traj, coeffs, 0.5, 0.0);
  CHECK(xi.fraction_above == 1.0);
  CHECK(xi.fraction_drift == 1.0);
  CHECK_FALSE(xi.first_below);
  const auto crossed = xi_gamma_monitor(traj, coeffs, 0.5, traj.rows[40].f);
  REQUIRE(crossed.first_below);
  CHECK(*crossed.first_below == 40);
}

TEST_CASE("partial sums telescope on a deterministic run") {
  const auto problem = quadratic(2, 1.0);
  const auto oracle = GradientOracle::additive_gaussian(2, Schedule::zero());
  const Scheme scheme = SgdScheme{oracle, Preconditioner::identity(), Schedule::constant(0.1)};
  const auto coeffs = sgd_coefficients(plain_input(0.1, oracle, 1.0));
  const auto traj = run_trajectory(scheme, problem, 200, 0, point(1.0, 1.0), &coeffs);
  const ExtendedDesingularizer phi(Desingularizer(1.0, 0.5, 2.0));
  const auto report = gamma_phi_partial_sums(traj, scheme, problem, phi, coeffs, 3, 0, 0.0);
  CHECK(report.flagged.empty());
  for (double s : report.summands) CHECK(s >= 0.0);
  const double weight = coeffs.s(1) / coeffs.v(1);
  const double telescoped = weight * (phi.value(traj.rows[1].f) - phi.value(traj.rows[200].f));
  CHECK(report.partial_sums.back() == Catch::Approx(telescoped).epsilon(1e-10));
  CHECK(report.partial_sums.back() <= weight * phi.value(traj.rows[1].f));
  CHECK(report.plateau);
}
