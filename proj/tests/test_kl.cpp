#include <catch_amalgamated.hpp>

#include <cmath>

#include "klsgd/kl.hpp"
#include "klsgd/random.hpp"

using namespace klsgd;

TEST_CASE("desingularizer values and derivatives") {
  const Desingularizer d(2.0, 0.5, 1.0);
  CHECK(d.value(0.0) == 0.0);
  CHECK(d.value(0.25) == Catch::Approx(2.0));
  CHECK(d.derivative(0.25) == Catch::Approx(4.0));
  CHECK_THROWS_AS(d.value(1.0), std::domain_error);
  CHECK_THROWS_AS(d.value(-0.1), std::domain_error);
  CHECK_THROWS_AS(d.derivative(0.0), std::domain_error);
  CHECK_THROWS_AS(Desingularizer(0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(Desingularizer(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Desingularizer(1.0, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("bounded extension is continuous, increasing, concave and bounded") {
  Stream rng({31, 0}, 0, StreamRole::sampling);
  for (int trial = 0; trial < 50; ++trial) {
    const double c = rng.uniform(0.1, 5.0);
    const double theta = rng.uniform(0.05, 0.95);
    const double zeta = rng.uniform(0.01, 3.0);
    const ExtendedDesingularizer phi(Desingularizer(c, theta, zeta));
    INFO("c " << c << " theta " << theta << " zeta " << zeta);
    const double h = 1e-9;
    CHECK(std::abs(phi.value(zeta) - phi.value(zeta - h)) < 1e-9 * std::max(1.0, phi.l2()) + 1e-12);
    CHECK(phi.derivative(zeta) == Catch::Approx(phi.base().derivative(zeta * (1 - 1e-12))).epsilon(1e-9));
    double prev = phi.value(0.0);
    const double top = 20.0 * zeta;
    const int n = 4000;
    for (int i = 1; i <= n; ++i) {
      const double s = top * i / n;
      const double v = phi.value(s);
      CHECK(v > prev);
      CHECK(v <= phi.supremum());
      if (i < n) {
        const double left = phi.value(top * (i - 1) / n);
        const double right = phi.value(top * (i + 1) / n);
        CHECK(left + right - 2.0 * v <= 1e-12 * std::max(1.0, phi.supremum()));
      }
      prev = v;
    }
    CHECK(phi.supremum() == Catch::Approx(phi.l1() + phi.l2() * zeta));
    CHECK(phi.value(1e12 * zeta) == Catch::Approx(phi.supremum()).epsilon(1e-9));
  }
}

TEST_CASE("unbounded desingularizer is not extended") {
  const auto phi = extend_to_infinity(Desingularizer(1.0, 0.5));
  CHECK_FALSE(phi.bounded());
  CHECK(std::isinf(phi.supremum()));
  CHECK(phi.value(100.0) == Catch::Approx(20.0));
}

TEST_CASE("sum of desingularizers adds termwise") {
  DesingularizerSum sum{{Desingularizer(1.0, 0.5, 2.0), Desingularizer(3.0, 0.25, 2.0)}, 2.0};
  CHECK(sum.value(1.0) == Catch::Approx(2.0 + 4.0));
  CHECK(sum.derivative(1.0) == Catch::Approx(4.0));
  CHECK_THROWS_AS(sum.value(2.0), std::domain_error);
}

TEST_CASE("pointwise KL margin on a quadratic equals c sqrt(2 beta) - 1") {
  Stream rng({32, 0}, 0, StreamRole::sampling);
  for (double beta : {0.5, 1.0, 4.0}) {
    const auto p = quadratic(3, beta);
    for (double c : {0.3, 1.7}) {
      const Desingularizer d(c, 0.5);
      for (int i = 0; i < 20; ++i) {
        Vector x(3);
        for (int j = 0; j < 3; ++j) x[j] = rng.uniform(-1.0, 1.0);
        const auto r = kl_check_pointwise(p, 0, d, x);
        CHECK(r.margin == Catch::Approx(c * std::sqrt(2.0 * beta) - 1.0).epsilon(1e-10).margin(1e-12));
        CHECK((r.verdict == KLPointVerdict::holds) == (c * std::sqrt(2.0 * beta) >= 1.0));
      }
    }
  }
}

TEST_CASE("points outside the window are not checked") {
  const auto p = circle_quartic();
  const Desingularizer d(2.0, 0.5, 0.1);
  Vector x(2);
  x << 1.0, 0.0;
  CHECK(kl_check_pointwise(p, 0, d, x).verdict == KLPointVerdict::not_in_window);
  x << 1.5, 0.0;
  CHECK(kl_check_pointwise(p, 0, d, x).verdict == KLPointVerdict::not_in_window);
  x << 1.1, 0.0;
  CHECK(kl_check_pointwise(p, 0, d, x).verdict == KLPointVerdict::holds);
  CHECK(kl_check_pointwise(p, 0, d, x, 0.01).verdict == KLPointVerdict::not_in_window);
}

TEST_CASE("circle tube check: margin 8r - 1 holds for c = 2, fails for c = 0.1") {
  const auto p = circle_quartic();
  const auto good = kl_check_uniform(p, Desingularizer(2.0, 0.5, 0.1), 0.2, 0.1, 2000, 1);
  CHECK(good.total_violated() == 0);
  CHECK(good.min_margin() >= 8.0 * 0.8 - 1.0 - 0.05);
  CHECK(good.verdict() == KLVerdict::holds);
  const auto bad = kl_check_uniform(p, Desingularizer(0.1, 0.5, 0.1), 0.2, 0.1, 2000, 1);
  CHECK(bad.total_violated() > 0);
  CHECK(bad.min_margin() < 0.0);
  CHECK(bad.verdict() == KLVerdict::violated);
}

TEST_CASE("uniform check is reproducible") {
  const auto p = circle_quartic();
  const Desingularizer d(2.0, 0.5, 0.1);
  const auto a = kl_check_uniform(p, d, 0.2, 0.1, 500, 9).to_json();
  const auto b = kl_check_uniform(p, d, 0.2, 0.1, 500, 9).to_json();
  CHECK(a == b);
}

TEST_CASE("merged KL data on a two-level problem") {
  const auto p = circle_quartic();
  const Desingularizer d(2.0, 0.5, 0.5);
  const std::vector<ComponentKL> per(2, ComponentKL{d, 0.2, 0.5});
  const auto merged = build_extended_uniform(p, per, 0.25, 0.5, 500, 3);
  CHECK_FALSE(merged.single_component);
  CHECK(merged.level_gap_bound == Catch::Approx(0.25));
  CHECK(merged.zeta == Catch::Approx(0.25));
  CHECK(merged.phi.terms.size() == 2);
  REQUIRE(merged.achieved_radii.size() == 2);
  CHECK(merged.epsilon > 0.0);
  CHECK(merged.epsilon <= 0.5 * merged.achieved_radii[0]);
  // Inside each achieved tube F stays within the level-gap bound.
  Stream rng({33, 0}, 0, StreamRole::sampling);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& comp = p.components()[i];
    const double r = merged.achieved_radii[i];
    for (int s = 0; s < 2000; ++s) {
      Vector x = comp.sample(rng);
      Vector dir(2);
      dir << rng.normal(), rng.normal();
      x += dir.normalized() * rng.uniform(0.0, merged.epsilon);
      CHECK(std::abs(p.evaluate(x) - comp.level) < merged.level_gap_bound);
    }
  }
}

TEST_CASE("merged KL data on a single-component problem passes through") {
  const auto p = quadratic(2, 1.0);
  const Desingularizer d(1.0, 0.5, 0.3);
  const auto merged = build_extended_uniform(p, {ComponentKL{d, 0.4, 0.3}}, 0.25, 0.5, 100, 0);
  CHECK(merged.single_component);
  CHECK(merged.epsilon == 0.4);
  CHECK(merged.zeta == 0.3);
  CHECK(merged.to_json()["single_component"] == true);
}

TEST_CASE("merged KL arguments are validated") {
  const auto p = circle_quartic();
  const Desingularizer d(1.0, 0.5, 0.3);
  const std::vector<ComponentKL> per(2, ComponentKL{d, 0.2, 0.3});
  CHECK_THROWS_AS(build_extended_uniform(p, per, 0.5, 0.5, 10, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_extended_uniform(p, per, 0.25, 1.0, 10, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_extended_uniform(p, {per[0]}, 0.25, 0.5, 10, 0), std::invalid_argument);
}
