#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lpeq/bsde_system.hpp"
#include "lpeq/dividend_paths.hpp"
#include "lpeq/execution.hpp"
#include "lpeq/market_model.hpp"
#include "lpeq/state_sampler.hpp"

namespace lpeq {

struct Prices {
  double annuity;  // A = exp(a)
  double stock;    // S = A (d - a / alpha_sigma - y1 - y2)
};

Prices prices_at(double alpha_sigma, const BsdeState& s, double d);

struct MarketCoefficients {
  double kappa;    // market price of risk
  double sigma_a;  // annuity volatility (relative)
  double mu_a;     // annuity drift (relative)
  double sigma_s;
  double mu_s;
  double r;  // short rate mu_a - kappa sigma_a
};

MarketCoefficients coefficients_at(const MarketModel& model, const BsdeState& s, double t,
                                   double d);

/// One simulated equilibrium trajectory; every vector has n_steps + 1 entries.
/// The stock holding of agent 1 is identically one and is not stored.
struct EquilibriumPath {
  std::vector<double> t, d, annuity, stock, kappa, sigma_a, mu_a, sigma_s, mu_s, r;
  std::vector<double> x1, x2, c1, c2, theta1, theta2, xi;
  std::vector<double> a, y1, y2;  // field values along the path

  std::size_t n_steps() const { return t.size() - 1; }
};

struct SimulationOptions {
  /// Sabotage knob: scales kappa and rebuilds the deflator from its SDE.
  double kappa_scale = 1.0;
  /// Milstein correction for the stochastic integral in agent 1's wealth.
  bool milstein = true;
  /// Allowed fraction of dividend paths leaving the spatial grid.
  double max_excluded_fraction = 0.01;
};

/// Equilibrium trajectories over a set of dividend paths. Paths are rebuilt on
/// demand from the solved field, so memory stays at the size of the dividend
/// paths regardless of how many checks consume them.
class EquilibriumPathSet {
 public:
  EquilibriumPathSet(const StateSampler& sampler, const MarketModel& model,
                     const DividendPaths& dividends, SimulationOptions options);

  std::size_t size() const { return included_.size(); }
  std::size_t excluded_count() const { return dividends_.n_paths() - included_.size(); }
  std::size_t n_steps() const { return dividends_.n_steps(); }
  double dt() const { return dividends_.dt(); }
  const MarketModel& model() const { return model_; }
  const StateSampler& sampler() const { return sampler_; }
  const DividendPaths& dividends() const { return dividends_; }
  const SimulationOptions& options() const { return options_; }

  /// Index into the dividend path set of the k-th included path.
  std::size_t source_index(std::size_t k) const { return included_[k]; }
  std::span<const double> increments(std::size_t k) const {
    return dividends_.increment(included_[k]);
  }

  EquilibriumPath path(std::size_t k) const;

  /// Runs body(k, path) for every included path, in parallel when asked.
  template <typename Body>
  void for_each(Body&& body, Execution exec = Execution::parallel) const {
    const auto count = static_cast<std::ptrdiff_t>(size());
    if (exec == Execution::serial) {
      for (std::ptrdiff_t k = 0; k < count; ++k) body(static_cast<std::size_t>(k), path(k));
    } else {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t k = 0; k < count; ++k) body(static_cast<std::size_t>(k), path(k));
    }
  }

 private:
  const StateSampler& sampler_;
  MarketModel model_;
  const DividendPaths& dividends_;
  SimulationOptions options_;
  std::vector<std::size_t> included_;
};

/// Throws GridCoverageError when more than options.max_excluded_fraction of the
/// paths leave the solver grid, and InvalidParameter on a time-grid mismatch.
EquilibriumPathSet simulate_equilibrium(const StateSampler& sampler, const MarketModel& model,
                                        const DividendPaths& dividends,
                                        SimulationOptions options = {});

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

McEstimate mc_estimate(std::span<const double> samples);

/// Representative-agent benchmark with the constraint on agent 2 removed.
struct ParetoBenchmark {
  double gamma = 1.0;  // recorded only; the aggregate utility carries no gamma term
  double r_pe0 = 0.0;
  double kappa_pe0 = 0.0;
  McEstimate annuity0;
  McEstimate stock0;
};

/// xi^PE = alpha_S exp(-rho_S t - alpha_S (1 + d)).
double pareto_deflator(const MarketModel& model, double t, double d);
double pareto_rate(const MarketModel& model, double t, double d);
double pareto_kappa(const MarketModel& model, double t, double d);

ParetoBenchmark pareto_benchmark(const MarketModel& model, const DividendPaths& dividends,
                                 double gamma = 1.0, Execution exec = Execution::parallel);

/// Trapezoid rule on a uniform grid.
double trapezoid(std::span<const double> values, double dt);

}  // namespace lpeq
