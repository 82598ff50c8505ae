#include "lpeq/ode_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "lpeq/bsde_system.hpp"
#include "lpeq/dividend_paths.hpp"
#include "lpeq/error.hpp"

namespace lpeq {

namespace {

// Real-axis stability limit of classical RK4 is ~2.785; keep a margin.
constexpr double kRk4StableReach = 2.5;

void require_constant(const MarketModel& model) {
  if (!model.is_constant()) {
    throw WrongBackend("constant-coefficient backend needs the 'constant' dividend preset");
  }
}

using Vec3 = std::array<double, 3>;  // (a, y2, y1)

// d/ds of (a, y2, y1) in reversed time s = T - t.
Vec3 reversed_rhs(const MarketModel& model, double t, const Vec3& u) {
  const BsdeState s{u[0], u[2], u[1], 0.0, 0.0, 0.0};
  const double d = model.d0;  // coefficients do not depend on d
  return {-driver_a(model, t, d, s), -driver_y2(model, t, d, s), -driver_y1(model, t, d, s)};
}

}  // namespace

std::size_t min_stable_steps(const MarketModel& model) {
  const double a_floor =
      -(model.alpha_sigma() * std::abs(model.dividend.mu0) + model.rho_sigma()) * model.horizon;
  const double stiffness = std::max(1.0, std::exp(-a_floor));
  return std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(model.horizon * stiffness / kRk4StableReach)));
}

ConstantSolution solve_constant(const MarketModel& model, std::size_t n_steps) {
  require_constant(model);
  model.check_parameters();
  const std::size_t needed = min_stable_steps(model);
  if (n_steps < needed) {
    std::ostringstream os;
    os << "n_steps = " << n_steps << " is below the RK4 stability minimum " << needed;
    throw StepSizeError(os.str(), needed);
  }

  ConstantSolution sol;
  sol.times = uniform_times(model.horizon, n_steps);
  sol.a.assign(n_steps + 1, 0.0);
  sol.y1.assign(n_steps + 1, 0.0);
  sol.y2.assign(n_steps + 1, 0.0);

  const double h = model.horizon / static_cast<double>(n_steps);
  Vec3 u{0.0, 0.0, 0.0};
  for (std::size_t k = n_steps; k-- > 0;) {
    const double t1 = sol.times[k + 1];
    const double tm = t1 - 0.5 * h;
    const double t0 = sol.times[k];
    const Vec3 k1 = reversed_rhs(model, t1, u);
    Vec3 tmp;
    for (int i = 0; i < 3; ++i) tmp[i] = u[i] + 0.5 * h * k1[i];
    const Vec3 k2 = reversed_rhs(model, tm, tmp);
    for (int i = 0; i < 3; ++i) tmp[i] = u[i] + 0.5 * h * k2[i];
    const Vec3 k3 = reversed_rhs(model, tm, tmp);
    for (int i = 0; i < 3; ++i) tmp[i] = u[i] + h * k3[i];
    const Vec3 k4 = reversed_rhs(model, t0, tmp);
    for (int i = 0; i < 3; ++i) u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    sol.a[k] = u[0];
    sol.y2[k] = u[1];
    sol.y1[k] = u[2];
  }

  const auto c = closed_form_constants(model);
  sol.r = c.r;
  sol.kappa = c.kappa;
  return sol;
}

MarketConstants closed_form_constants(const MarketModel& model) {
  require_constant(model);
  const double as = model.alpha_sigma();
  const double rs = model.rho_sigma();
  const double a1 = model.agent1.alpha;
  const double mu = model.dividend.mu0;
  const double sigma = model.dividend.sigma0;
  MarketConstants c;
  c.r = rs + as * mu - 0.5 * as * a1 * sigma * sigma;
  c.kappa = a1 * sigma;
  c.r_pe = rs + as * mu - 0.5 * as * as * sigma * sigma;
  c.kappa_pe = as * sigma;
  return c;
}

}  // namespace lpeq
