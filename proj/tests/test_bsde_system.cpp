#include <doctest.h>

#include <cmath>
#include <random>

#include "lpeq/bsde_system.hpp"
#include "lpeq/error.hpp"
#include "support.hpp"

using namespace lpeq;
using lpeq::testing::pstar;

namespace {

BsdeState random_state(std::mt19937_64& rng, double spread) {
  std::uniform_real_distribution<double> u(-spread, spread);
  return {u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
}

MarketModel lopsided() {
  MarketModel m = pstar();
  m.agent1 = {1.5, 0.3, 0.4};
  m.agent2 = {3.0, 0.1, 0.6};
  m.dividend = DividendCoefficients::tanh_bounded(0.2, 0.3, 1.0, 0.4);
  return m;
}

}  // namespace

TEST_CASE("clamp") {
  CHECK(clamp(2.0, 5.0) == 2.0);
  CHECK(clamp(2.0, -5.0) == -2.0);
  CHECK(clamp(2.0, 0.3) == 0.3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    REQUIRE(clamp(3.0, clamp(3.0, x)) == clamp(3.0, x));
  }
}

TEST_CASE("drivers at hand-substituted states") {
  const MarketModel m = pstar();
  BsdeState s;
  CHECK(driver_a(m, 0.0, 0.0, s) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(driver_y1(m, 0.0, 0.0, s) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(driver_y2(m, 0.0, 0.0, s) == doctest::Approx(0.5).epsilon(1e-15));

  BsdeState z2{0.0, 0.0, 0.0, 0.0, 0.0, 1.0};
  CHECK(driver_a(m, 0.0, 0.0, z2) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(driver_y2(m, 0.0, 0.0, z2) == doctest::Approx(1.5).epsilon(1e-15));

  BsdeState z1{0.0, 0.0, 0.0, 0.0, 1.0, 0.0};
  CHECK(driver_y1(m, 0.0, 0.0, z1) == doctest::Approx(1.5).epsilon(1e-15));

  BsdeState big{60.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  CHECK(driver_a(m, 0.0, 0.0, big) == doctest::Approx(-1.0).epsilon(1e-12));

  BsdeState am1{-1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  CHECK(std::abs(driver_y2(m, 0.0, 0.0, am1)) < 1e-15);

  BsdeState shifted{0.0, 0.25, 0.0, 0.0, 0.0, 0.0};
  CHECK(driver_y1(m, 0.0, 0.0, shifted) - driver_y1(m, 0.0, 0.0, s) ==
        doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("untruncated driver refuses overflow") {
  const MarketModel m = pstar();
  BsdeState s{-800.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(driver_a(m, 0.0, 0.0, s), RangeError);
  CHECK(std::isfinite(driver_a_trunc(m, 4.0, 0.0, 0.0, s)));
}

TEST_CASE("truncated drivers") {
  const MarketModel m = pstar();
  BsdeState low{-5.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  CHECK(std::abs(driver_y2_trunc(m, 1.0, 0.0, 0.0, low)) < 1e-15);
  BsdeState high_y2{0.0, 0.0, 5.0, 0.0, 0.0, 0.0};
  CHECK(driver_y2_trunc(m, 1.0, 0.0, 0.0, high_y2) == doctest::Approx(1.5).epsilon(1e-15));

  // Inside the band the truncation is invisible, bit for bit.
  const MarketModel l = lopsided();
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    BsdeState s = random_state(rng, 3.0);
    const double n = 4.0;
    REQUIRE(driver_a_trunc(l, n, 0.3, 0.1, s) == driver_a(l, 0.3, 0.1, s));
    REQUIRE(driver_y2_trunc(l, n, 0.3, 0.1, s) == driver_y2(l, 0.3, 0.1, s));
  }
}

TEST_CASE("diagonal transform") {
  BsdeState s{1.0, 0.0, 2.0, 0.0, 0.0, 0.0};
  CHECK(to_diagonal(1.0, s).y_sigma == 3.0);
  BsdeState q{-1.0, 0.0, 4.0, 0.0, 0.0, 0.0};
  CHECK(to_diagonal(0.75, q).y_sigma == 2.0);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    // Dyadic values keep the linear map exact, so the round trip is bit exact.
    std::uniform_int_distribution<int> k(-4096, 4096);
    BsdeState r{k(rng) / 256.0, 0.0, k(rng) / 256.0, k(rng) / 256.0, 0.0, k(rng) / 256.0};
    const TransformedPair back = from_diagonal(0.75, to_diagonal(0.75, r));
    REQUIRE(back == TransformedPair{r.a, r.z_a, r.y2, r.z2});
  }
}

TEST_CASE("diagonal drivers at zero and the consistency identity") {
  const MarketModel m = pstar();
  DiagonalState zero;
  CHECK(driver_g_sigma(m, 10.0, 0.0, 0.0, zero) == doctest::Approx(-1.5).epsilon(1e-15));
  CHECK(driver_g2_diag(m, 10.0, 0.0, 0.0, zero) == doctest::Approx(0.5).epsilon(1e-15));

  const MarketModel l = lopsided();
  const double as = l.alpha_sigma();
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const BsdeState s = random_state(rng, 6.0);
    const double n = 4.0;
    const DiagonalState d = to_diagonal(as, s);
    const double lhs = driver_g_sigma(l, n, 0.2, 0.4, d);
    const double rhs = driver_a_trunc(l, n, 0.2, 0.4, s) + as * driver_y2_trunc(l, n, 0.2, 0.4, s);
    worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
    const double g2 = driver_g2_diag(l, n, 0.2, 0.4, d);
    REQUIRE(std::abs(g2 - driver_y2_trunc(l, n, 0.2, 0.4, s)) <= 1e-12 * (1.0 + std::abs(g2)));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("drivers are linear in y with the displayed slopes") {
  const MarketModel l = lopsided();
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    BsdeState s = random_state(rng, 1.5);
    const double h = 1e-3;
    BsdeState up = s;
    up.y1 += h;
    const double slope1 = (driver_y1(l, 0.0, 0.0, up) - driver_y1(l, 0.0, 0.0, s)) / h;
    REQUIRE(std::abs(slope1 - std::exp(-s.a)) <= 1e-8 * (1.0 + std::exp(-s.a)));
    up = s;
    up.y2 += h;
    const double slope2 = (driver_y2(l, 0.0, 0.0, up) - driver_y2(l, 0.0, 0.0, s)) / h;
    REQUIRE(std::abs(slope2 - std::exp(-s.a)) <= 1e-8 * (1.0 + std::exp(-s.a)));
    REQUIRE(driver_a(l, 0.0, 0.0, up) == driver_a(l, 0.0, 0.0, s));
  }
}

TEST_CASE("quadratic growth on the band") {
  const MarketModel l = lopsided();
  const double n = 6.0;
  const auto g = truncated_growth_constants(l, n);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ua(-n, 3.0 * n), uy(-n, n), uz(-20.0, 20.0),
      ud(-30.0, 30.0), ut(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    BsdeState s{ua(rng), uy(rng), uy(rng), uz(rng), uz(rng), uz(rng)};
    const double t = ut(rng), d = ud(rng);
    const double bound = g.c0 + g.c1 * (s.z_a * s.z_a + s.z1 * s.z1 + s.z2 * s.z2);
    REQUIRE(std::abs(driver_a_trunc(l, n, t, d, s)) <= bound);
    REQUIRE(std::abs(driver_y2_trunc(l, n, t, d, s)) <= bound);
  }
}
