#include <doctest.h>

#include <cmath>

#include "lpeq/bsde_system.hpp"
#include "lpeq/error.hpp"
#include "lpeq/ode_solver.hpp"
#include "support.hpp"

using namespace lpeq;
using lpeq::testing::pstar;

TEST_CASE("terminal values and bracketing of a(0)") {
  const auto s = solve_constant(pstar(), 400);
  CHECK(s.a.back() == 0.0);
  CHECK(s.y1.back() == 0.0);
  CHECK(s.y2.back() == 0.0);
  CHECK(s.a.front() >= 1.0);
  CHECK(s.a.front() <= 2.0);
  CHECK(s.r == -1.0);
  CHECK(s.kappa == 2.0);
  for (std::size_t n = 0; n + 1 < s.a.size(); ++n) REQUIRE(s.a[n + 1] < s.a[n]);
}

TEST_CASE("closed form constants") {
  const auto k = closed_form_constants(pstar());
  CHECK(k.r == -1.0);
  CHECK(k.kappa == 2.0);
  CHECK(k.r_pe == -0.5);
  CHECK(k.kappa_pe == 1.0);

  MarketModel m = pstar();
  m.dividend = DividendCoefficients::constant(0.0, 0.37);
  const auto q = closed_form_constants(m);
  CHECK(q.kappa == doctest::Approx(2.0 * q.kappa_pe).epsilon(1e-15));
  CHECK(q.kappa > q.kappa_pe);
  CHECK(q.r < q.r_pe);

  MarketModel t = lpeq::testing::tanh_model();
  CHECK_THROWS_AS(closed_form_constants(t), WrongBackend);
}

TEST_CASE("fourth order convergence against a fine oracle") {
  MarketModel m = pstar();
  m.agent1.rho = 0.2;
  m.agent2 = {3.0, 0.1, 0.5};
  m.dividend = DividendCoefficients::constant(0.1, 0.8);
  const auto oracle = solve_constant(m, 100000);
  auto err = [&](std::size_t n) {
    const auto s = solve_constant(m, n);
    const std::size_t stride = 100000 / n;
    double e = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      e = std::max({e, std::abs(s.a[i] - oracle.a[i * stride]),
                    std::abs(s.y1[i] - oracle.y1[i * stride]),
                    std::abs(s.y2[i] - oracle.y2[i * stride])});
    }
    return e;
  };
  const double e1 = err(25), e2 = err(50), e3 = err(100);
  CHECK(e1 / e2 > 12.0);
  CHECK(e2 / e3 > 12.0);
}

TEST_CASE("ODE solution satisfies the drivers with vanishing loadings") {
  const MarketModel m = pstar();
  const std::size_t n = 400;
  const auto s = solve_constant(m, n);
  const double h = m.horizon / static_cast<double>(n);
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 <= n; ++i) {
    const BsdeState st = s.state(i);
    const double da = (-s.a[i + 2] + 8 * s.a[i + 1] - 8 * s.a[i - 1] + s.a[i - 2]) / (12 * h);
    const double d2 = (-s.y2[i + 2] + 8 * s.y2[i + 1] - 8 * s.y2[i - 1] + s.y2[i - 2]) / (12 * h);
    const double d1 = (-s.y1[i + 2] + 8 * s.y1[i + 1] - 8 * s.y1[i - 1] + s.y1[i - 2]) / (12 * h);
    // dY = f dt in the forward direction.
    worst = std::max({worst, std::abs(da - driver_a(m, 0, 0, st)),
                      std::abs(d2 - driver_y2(m, 0, 0, st)),
                      std::abs(d1 - driver_y1(m, 0, 0, st))});
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("step size guard") {
  MarketModel m = pstar();
  m.agent1.rho = 2.0;
  m.agent2.rho = 2.0;
  m.horizon = 2.0;
  const std::size_t need = min_stable_steps(m);
  CHECK(need > 2);
  CHECK_THROWS_AS(solve_constant(m, 2), StepSizeError);
  try {
    solve_constant(m, 2);
  } catch (const StepSizeError& e) {
    CHECK(e.suggested_min_steps() == need);
  }
}
