#include <catch_amalgamated.hpp>

#include <cmath>

#include "klsgd/random.hpp"
#include "klsgd/sequence.hpp"

using namespace klsgd;

TEST_CASE("power schedules are summable exactly when the exponent exceeds one") {
  CHECK(Schedule::power(1.0, 0.5).summability() == Summability::no);
  CHECK(Schedule::power(1.0, 1.0).summability() == Summability::no);
  CHECK(Schedule::power(1.0, 1.01).summability() == Summability::yes);
  CHECK(Schedule::power(1.0, 2.0).summability() == Summability::yes);
  CHECK(Schedule::constant(0.3).summability() == Summability::no);
  CHECK(Schedule::geometric(2.0, 0.9).summability() == Summability::yes);
  CHECK(Schedule::geometric(2.0, 1.1).summability() == Summability::no);
  CHECK(Schedule::zero().summability() == Summability::yes);
}

TEST_CASE("schedules evaluate their closed forms") {
  CHECK(Schedule::constant(0.25)(17) == 0.25);
  CHECK(Schedule::power(0.5, 1.0)(0) == 0.5);
  CHECK(Schedule::power(0.5, 1.0)(9) == Catch::Approx(0.05).epsilon(1e-15));
  CHECK(Schedule::geometric(3.0, 0.5)(3) == Catch::Approx(0.375).epsilon(1e-15));
  CHECK(Schedule::zero()(5) == 0.0);
}

TEST_CASE("schedule text round-trips through parse") {
  for (const auto& s : {Schedule::constant(0.05), Schedule::power(0.5, 1.0),
                        Schedule::geometric(1.5, 0.25), Schedule::zero()}) {
    const auto back = Schedule::parse(s.to_string());
    CHECK(back.form == s.form);
    CHECK(back.law.c == s.law.c);
    CHECK(back.law.p == s.law.p);
    CHECK(back.law.q == s.law.q);
  }
  CHECK(Schedule::parse(" 0.1 ").form == Schedule::Form::constant);
  CHECK(Schedule::parse("power( 2 , 1.5 )")(0) == 2.0);
}

TEST_CASE("malformed schedules are rejected") {
  CHECK_THROWS_AS(Schedule::parse("power(1)"), std::invalid_argument);
  CHECK_THROWS_AS(Schedule::parse("cubic(1,2)"), std::invalid_argument);
  CHECK_THROWS_AS(Schedule::parse("constant(x)"), std::invalid_argument);
  CHECK_THROWS_AS(Schedule::parse("power(1,2"), std::invalid_argument);
  CHECK_THROWS_AS(Schedule::parse(""), std::invalid_argument);
}

TEST_CASE("limits of closed forms") {
  CHECK(Sequence(Schedule::constant(0.7)).limit() == 0.7);
  CHECK(Sequence(Schedule::power(5.0, 0.5)).limit() == 0.0);
  CHECK(Sequence(Schedule::geometric(5.0, 0.5)).limit() == 0.0);
  CHECK_FALSE(Sequence(Schedule::geometric(5.0, 2.0)).limit().has_value());
  CHECK_FALSE(Sequence(Schedule::power(1.0, -1.0)).limit().has_value());
}

TEST_CASE("products of power laws stay closed") {
  const Sequence a(Schedule::power(0.5, 0.5));
  const Sequence b(Schedule::power(2.0, 0.6));
  const auto ab = a * b;
  REQUIRE(ab.closed_form());
  CHECK(ab.closed_form()->p == Catch::Approx(1.1));
  CHECK(ab.summability() == Summability::yes);
  CHECK(sqrt(Sequence(Schedule::power(4.0, 3.0))).closed_form()->p == 1.5);
  CHECK(reciprocal(Sequence(Schedule::power(4.0, 1.0))).closed_form()->p == -1.0);
}

TEST_CASE("operators agree pointwise with their definitions") {
  Stream rng({2024, 0}, 0, StreamRole::sampling);
  for (int trial = 0; trial < 200; ++trial) {
    const Sequence a(PowerLaw{rng.uniform(0.1, 3.0), rng.uniform(0.0, 2.5), 1.0});
    const Sequence b(PowerLaw{rng.uniform(0.1, 3.0), 0.0, rng.uniform(0.5, 1.0)});
    const double s = rng.uniform(0.1, 4.0);
    for (std::size_t k : {0u, 1u, 7u, 100u, 5000u}) {
      CHECK((a * b)(k) == Catch::Approx(a(k) * b(k)).epsilon(1e-12));
      CHECK((a + b)(k) == Catch::Approx(a(k) + b(k)).epsilon(1e-12));
      CHECK((a - b)(k) == Catch::Approx(a(k) - b(k)).epsilon(1e-12).margin(1e-12));
      CHECK((s * a)(k) == Catch::Approx(s * a(k)).epsilon(1e-12));
      CHECK(sqrt(a)(k) == Catch::Approx(std::sqrt(a(k))).epsilon(1e-12));
      CHECK(reciprocal(a)(k) == Catch::Approx(1.0 / a(k)).epsilon(1e-12));
      CHECK(max(a, b)(k) == Catch::Approx(std::max(a(k), b(k))).epsilon(1e-12));
    }
  }
}

TEST_CASE("summability propagates conservatively") {
  const Sequence summable(Schedule::power(1.0, 2.0));
  const Sequence divergent(Schedule::power(1.0, 0.5));
  const Sequence bounded(Schedule::constant(3.0));
  const Sequence opaque([](std::size_t k) { return 1.0 / (1.0 + k); }, Summability::unknown,
                        0.0, "harmonic");
  CHECK((summable + opaque).summability() == Summability::unknown);
  CHECK((divergent + opaque).summability() == Summability::no);
  CHECK((opaque * bounded).summability() == Summability::unknown);
  CHECK((summable * opaque).summability() == Summability::yes);
  CHECK(max(summable, Sequence(Schedule::geometric(1.0, 0.5))).summability() == Summability::yes);
  CHECK((bounded - Sequence(Schedule::constant(1.0))).summability() == Summability::no);
  CHECK((Sequence() * opaque).summability() == Summability::yes);
}

TEST_CASE("a declared-summable power law has bounded partial sums") {
  for (double p : {1.01, 1.5, 2.0, 3.0}) {
    const Sequence s(Schedule::power(1.0, p));
    REQUIRE(s.summability() == Summability::yes);
    double partial = 0.0;
    for (std::size_t k = 0; k < 1000000; ++k) partial += s(k);
    // Integral bound 1 + 1/(p-1).
    CHECK(partial <= 1.0 + 1.0 / (p - 1.0));
  }
}
