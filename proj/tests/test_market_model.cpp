#include <doctest.h>

#include <cmath>

#include "lpeq/dividend_paths.hpp"
#include "lpeq/error.hpp"
#include "lpeq/market_model.hpp"
#include "support.hpp"

using namespace lpeq;
using lpeq::testing::pstar;

TEST_CASE("aggregate preferences") {
  const auto p = aggregate_preferences(2.0, 0.0, 2.0, 0.0);
  CHECK(p.alpha_sigma == 1.0);
  CHECK(p.rho_sigma == 0.0);
  const auto q = aggregate_preferences(1.5, 0.2, 3.0, 0.4);
  CHECK(std::abs(1.0 / q.alpha_sigma - (1.0 / 1.5 + 1.0 / 3.0)) < 1e-15);
  CHECK(std::abs(q.rho_sigma - q.alpha_sigma * (0.2 / 1.5 + 0.4 / 3.0)) < 1e-15);
  CHECK_THROWS_AS(aggregate_preferences(0.0, 0.0, 1.0, 0.0), InvalidParameter);
  CHECK_THROWS_AS(aggregate_preferences(1.0, -0.1, 1.0, 0.0), InvalidParameter);
}

TEST_CASE("model validation on a probe mesh") {
  const auto mesh = make_probe_mesh(1.0, -10.0, 10.0, 5, 41);
  CHECK_NOTHROW(validate_model(pstar(), mesh));

  MarketModel bad = pstar();
  bad.dividend = DividendCoefficients::constant(3.0, 1.0);
  CHECK_THROWS_AS(validate_model(bad, mesh), AssumptionViolation);
  try {
    validate_model(bad, mesh);
  } catch (const AssumptionViolation& e) {
    CHECK(e.value() == 3.0);
    CHECK(std::string(e.what()).find("mu_D") != std::string::npos);
  }

  MarketModel tanh = pstar();
  tanh.dividend = DividendCoefficients::tanh_bounded(0.0, 0.0, 1.0, 0.4);
  CHECK_NOTHROW(validate_model(tanh, mesh));
  CHECK(tanh.sigma(0.0, 100.0) <= 1.4);
  CHECK(tanh.sigma(0.0, -100.0) >= 0.6);

  MarketModel skew = pstar();
  skew.agent1.theta0 = 0.7;
  CHECK_THROWS_AS(skew.check_parameters(), InvalidParameter);
}

TEST_CASE("affine clamped preset stays inside its caps") {
  const auto c = DividendCoefficients::affine_clamped(0.1, 1.0, 0.5, 1.0, 0.5, 0.5, 1.5);
  CHECK(c.mu(0.0, 100.0) == 0.5);
  CHECK(c.mu(0.0, -100.0) == -0.5);
  CHECK(c.mu(0.0, 0.2) == doctest::Approx(0.3));
  CHECK(c.sigma(0.0, 100.0) == 1.5);
  CHECK(c.sigma(0.0, -100.0) == 0.5);
}

TEST_CASE("single Euler step reproduces the recorded increment") {
  MarketModel m = pstar();
  m.dividend = DividendCoefficients::constant(0.3, 0.7);
  m.d0 = 1.25;
  const auto paths = simulate_dividend_paths(m, 1, 1, 5);
  const double w = paths.increment(0)[0];
  CHECK(paths.level(0)[0] == 1.25);
  CHECK(paths.level(0)[1] == 1.25 + 0.3 * 1.0 + 0.7 * w);
}

TEST_CASE("dividend paths are deterministic and schedule independent") {
  const MarketModel m = lpeq::testing::tanh_model();
  const auto a = simulate_dividend_paths(m, 64, 500, 3, Execution::parallel);
  const auto b = simulate_dividend_paths(m, 64, 500, 3, Execution::serial);
  const auto c = simulate_dividend_paths(m, 64, 500, 3, Execution::parallel);
  bool same = true;
  for (std::size_t p = 0; p < 500; ++p) {
    for (std::size_t n = 0; n <= 64; ++n) {
      same = same && a.level(p)[n] == b.level(p)[n] && a.level(p)[n] == c.level(p)[n];
    }
  }
  CHECK(same);
  const auto d = simulate_dividend_paths(m, 64, 500, 4);
  CHECK(d.level(0)[64] != a.level(0)[64]);
}

TEST_CASE("Euler recursion holds exactly on every row") {
  const MarketModel m = lpeq::testing::tanh_model();
  const auto paths = simulate_dividend_paths(m, 50, 20, 1);
  std::vector<double> rebuilt(51);
  for (std::size_t p = 0; p < 20; ++p) {
    rebuilt[0] = m.d0;
    euler_dividend_path(m, paths.times(), paths.increment(p), rebuilt);
    for (std::size_t n = 0; n <= 50; ++n) REQUIRE(rebuilt[n] == paths.level(p)[n]);
  }
}

TEST_CASE("terminal moments of the constant model") {
  MarketModel m = pstar();
  m.dividend = DividendCoefficients::constant(0.2, 1.0);
  const std::size_t n = 10000;
  const auto paths = simulate_dividend_paths(m, 20, n, 11);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const double x = paths.level(p)[20] - m.d0;
    s1 += x;
    s2 += x * x;
  }
  const double mean = s1 / static_cast<double>(n);
  const double var = s2 / static_cast<double>(n) - mean * mean;
  CHECK(std::abs(mean - 0.2) <= 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) <= 3.0 * std::sqrt(2.0 / static_cast<double>(n)));
}
