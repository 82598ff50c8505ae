#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lpeq/equilibrium.hpp"
#include "lpeq/field_solver.hpp"
#include "lpeq/market_model.hpp"
#include "lpeq/ode_solver.hpp"

namespace lpeq {

enum class Comparison { at_most, at_least, greater_than };

struct CheckResult {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  Comparison comparison = Comparison::at_most;
  bool passed = false;
  std::size_t n_samples = 0;
  std::string details;
  bool mandatory = true;
};

/// Sets passed from statistic, threshold and comparison. NaN never passes.
CheckResult make_check(std::string name, double statistic, double threshold,
                       std::size_t n_samples, std::string details = {},
                       Comparison cmp = Comparison::at_most);

struct VerificationReport {
  std::vector<CheckResult> checks;
  std::string model_fingerprint;
  std::size_t n_time = 0;
  std::size_t n_space = 0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::string backend;
  double kappa_scale = 1.0;  // sabotage factor used for the paths

  void add(std::vector<CheckResult> more);
  void add(CheckResult one) { checks.push_back(std::move(one)); }
  bool overall_pass() const;
  const CheckResult* find(const std::string& name) const;
};

struct VerifyOptions {
  std::vector<double> checkpoints{0.25, 0.5, 0.75, 1.0};  // fractions of the horizon
  double se_multiplier = 3.0;
  std::size_t min_paths = 1000;
  double clearing_c = 10.0;      // clearing residuals <= clearing_c * dt
  double bsde_residual_c = 10.0;  // local truncation error <= c * dt
  double z_rel_tol = 1e-2;
  double identity_tol = 1e-12;
  std::size_t identity_samples = 1000;
  double dynamics_c = 10.0;  // price-increment residual <= c (dt + dB^2)
  double wealth_c = 20.0;    // X1 forms agree to wealth_c * dt
  /// Added to the statistical threshold of checks whose estimator has no
  /// sampling noise in degenerate models: threshold = k SE + c * dt.
  double discretization_c = 1.0;
  /// Martingale tests: |mean| <= k SE + c dt sd(sample), control-variate estimator.
  double martingale_bias_c = 4.0;
  double bound_tol = 1e-6;
  double doubling_tol = 1e-10;
  std::size_t fk_paths = 10000;
  double perturb_delta = 0.1;
  double perturb_eps = 0.1;
  std::uint64_t seed = 0;
};

/// |c1 + c2 - (1 + D)|, |theta1 + theta2 - 1|, |X1 + X2 - (S + A)| maxima.
std::vector<CheckResult> check_clearing(const EquilibriumPathSet& paths,
                                        const VerifyOptions& opt = {});

/// Four deflated gains processes at the checkpoints plus S0 and A0 replication.
/// Throws InvalidParameter below opt.min_paths.
std::vector<CheckResult> check_martingales(const EquilibriumPathSet& paths,
                                           const VerifyOptions& opt = {});

/// (i) local truncation error and (ii) loading consistency on the solved field.
std::vector<CheckResult> check_field_residuals(const SolutionField& field,
                                               const MarketModel& model,
                                               const VerifyOptions& opt = {});

/// ODE backend analogue of (i): the discrete derivative against the drivers.
std::vector<CheckResult> check_ode_residuals(const ConstantSolution& solution,
                                             const MarketModel& model,
                                             const VerifyOptions& opt = {});

/// (iii) mu_S = kappa sigma_S and r = mu_A - kappa sigma_A at random states.
CheckResult check_identities(const MarketModel& model, const VerifyOptions& opt = {});

/// (iii) along paths, (iv) price increments, (v) X1 integral form against the
/// self-financing recursion.
std::vector<CheckResult> check_path_residuals(const EquilibriumPathSet& paths,
                                              const VerifyOptions& opt = {});

/// Closed-form convex conjugate (y / alpha)(log(y / alpha) + rho t - 1) of
/// c -> -exp(-rho t - alpha c).
double conjugate_utility(double alpha, double rho, double t, double y);

double utility(double alpha, double rho, double t, double c);

enum class PerturbationKind {
  consumption_shift,  // c += size on [t0, t1)
  holding_bump,       // agent 1: psi = 1 + size b(t); agent 2: X / A shifted by size b(t)
};

struct Perturbation {
  std::string name;
  int agent = 2;
  PerturbationKind kind = PerturbationKind::consumption_shift;
  double size = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
};

/// Default menu for both agents.
std::vector<Perturbation> perturbation_menu(double horizon, double delta, double eps);

/// Throws InvalidParameter naming the reason when a recipe is not admissible.
void check_admissible(const Perturbation& p, double horizon);

struct UtilityComparison {
  McEstimate difference;  // perturbed minus candidate, paired per path
  McEstimate candidate;
};

/// Runs the self-financing recursion for the candidate rule and the perturbed
/// rule on every path and compares expected utilities.
UtilityComparison compare_utility(const EquilibriumPathSet& paths, const Perturbation& p,
                                  Execution exec = Execution::parallel);

/// y1(0, D0) through its discounted-integral representation under the
/// drift-shifted dividend dynamics.
McEstimate feynman_kac_y1(const StateSampler& sampler, const MarketModel& model,
                          std::size_t n_paths, std::uint64_t seed,
                          std::size_t* excluded = nullptr,
                          Execution exec = Execution::parallel);

/// Duality gap, perturbation menu, V2 martingale and the y1 Feynman-Kac check.
std::vector<CheckResult> check_optimality(const EquilibriumPathSet& paths,
                                          const VerifyOptions& opt = {});

/// kappa > kappa^PE and r < r^PE. Throws WrongBackend for non-constant models.
std::vector<CheckResult> check_pe_inequalities(const MarketModel& model);

std::vector<CheckResult> check_benchmarks(const MarketModel& model,
                                          const TruncatedSolution& solution,
                                          const VerifyOptions& opt = {});
std::vector<CheckResult> check_benchmarks(const MarketModel& model,
                                          const ConstantSolution& solution,
                                          const VerifyOptions& opt = {});

/// Field against ODE at (0, D0). Constant models only.
CheckResult check_backend_agreement(const SolutionField& field, const ConstantSolution& ode,
                                    const MarketModel& model, double tol = 5e-3);

/// Tail statistics of max_t |xi S| per path. Not mandatory.
CheckResult check_ui_surrogate(const EquilibriumPathSet& paths);

}  // namespace lpeq
