#pragma once

#include <cstddef>
#include <vector>

#include "lpeq/market_model.hpp"
#include "lpeq/state_sampler.hpp"

namespace lpeq {

/// Solution of the system when mu_D, sigma_D are constant. All loadings vanish
/// and the BSDE collapses to a backward ODE for (a, y1, y2).
struct ConstantSolution {
  std::vector<double> times;
  std::vector<double> a;
  std::vector<double> y1;
  std::vector<double> y2;
  double r = 0.0;      // short rate  rho_S + alpha_S mu_D - alpha_S alpha_1 sigma_D^2 / 2
  double kappa = 0.0;  // market price of risk  alpha_1 sigma_D

  std::size_t n_steps() const { return times.size() - 1; }
  BsdeState state(std::size_t n) const { return {a[n], y1[n], y2[n], 0.0, 0.0, 0.0}; }
};

/// Smallest step count for which classical RK4 stays inside its stability
/// interval given the a-lower-bound.
std::size_t min_stable_steps(const MarketModel& model);

/// Classical RK4 integration of (a, y2, y1) backward from the zero terminal value.
ConstantSolution solve_constant(const MarketModel& model, std::size_t n_steps);

struct MarketConstants {
  double r;
  double kappa;
  double r_pe;
  double kappa_pe;
};

MarketConstants closed_form_constants(const MarketModel& model);

class ConstantSampler final : public StateSampler {
 public:
  ConstantSampler(const ConstantSolution& solution, double horizon)
      : solution_(solution), horizon_(horizon) {}

  std::size_t n_steps() const override { return solution_.n_steps(); }
  double horizon() const override { return horizon_; }
  bool contains(double) const override { return true; }
  BsdeState at_node(std::size_t n, double) const override { return solution_.state(n); }
  std::array<double, 3> z_slope(std::size_t, double) const override { return {0.0, 0.0, 0.0}; }

 private:
  const ConstantSolution& solution_;
  double horizon_;
};

}  // namespace lpeq
