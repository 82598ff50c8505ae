#pragma once

#include <optional>
#include <string>
#include <vector>

namespace lpeq {

/// Exponential-utility agent: U(t, c) = -exp(-rho t - alpha c).
struct AgentParams {
  double alpha = 1.0;   // risk aversion, > 0
  double rho = 0.0;     // time preference, >= 0
  double theta0 = 0.0;  // initial annuity endowment
};

struct AggregatePreferences {
  double alpha_sigma;
  double rho_sigma;
};

/// alpha_sigma = (1/alpha1 + 1/alpha2)^-1, rho_sigma = alpha_sigma (rho1/alpha1 + rho2/alpha2).
AggregatePreferences aggregate_preferences(double alpha1, double rho1, double alpha2, double rho2);

enum class DividendPreset { constant, affine_clamped, tanh_bounded };

std::string to_string(DividendPreset preset);
DividendPreset dividend_preset_from_string(const std::string& name);

/// Markovian dividend coefficients mu_D(t, d), sigma_D(t, d) chosen from a
/// fixed family of presets so that the bounds stay decidable.
///
///   constant:        mu = mu0, sigma = sigma0
///   affine_clamped:  mu = clamp(mu0 + mu1 d, -mu_cap, mu_cap)
///                    sigma = clamp(sigma0 + sigma1 d, sigma_lo, sigma_hi)
///   tanh_bounded:    mu = mu0 + mu1 tanh(d), sigma = sigma0 + sigma1 tanh(d)
struct DividendCoefficients {
  DividendPreset preset = DividendPreset::constant;
  double mu0 = 0.0;
  double mu1 = 0.0;
  double mu_cap = 0.0;
  double sigma0 = 1.0;
  double sigma1 = 0.0;
  double sigma_lo = 0.0;
  double sigma_hi = 0.0;

  double mu(double t, double d) const;
  double sigma(double t, double d) const;

  /// Analytic suprema over all (t, d); used for grid sizing, not for validation.
  double mu_sup() const;
  double sigma_sup() const;

  bool is_constant() const { return preset == DividendPreset::constant; }

  static DividendCoefficients constant(double mu, double sigma);
  static DividendCoefficients tanh_bounded(double mu0, double mu1, double sigma0, double sigma1);
  static DividendCoefficients affine_clamped(double mu0, double mu1, double mu_cap, double sigma0,
                                             double sigma1, double sigma_lo, double sigma_hi);
};

struct MarketModel {
  AgentParams agent1;  // unconstrained, holds the stock
  AgentParams agent2;  // annuity only
  double horizon = 1.0;
  double d0 = 0.0;
  DividendCoefficients dividend;
  double bound_m = 1.0;

  double alpha_sigma() const;
  double rho_sigma() const;
  double mu(double t, double d) const { return dividend.mu(t, d); }
  double sigma(double t, double d) const { return dividend.sigma(t, d); }
  bool is_constant() const { return dividend.is_constant(); }

  /// Throws InvalidParameter unless alpha_i > 0, rho_i >= 0, T > 0, M > 0
  /// and theta0_1 + theta0_2 = 1.
  void check_parameters() const;
};

struct ProbePoint {
  double t;
  double d;
};

using ProbeMesh = std::vector<ProbePoint>;

/// Tensor mesh with n_t x n_d points spanning [0, T] x [d_min, d_max].
ProbeMesh make_probe_mesh(double horizon, double d_min, double d_max, std::size_t n_t,
                          std::size_t n_d);

struct BoundViolation {
  ProbePoint point;
  std::string quantity;  // "mu_D" or "sigma_D"
  double value;
};

std::optional<BoundViolation> find_bound_violation(const MarketModel& model,
                                                   const ProbeMesh& mesh);

/// Throws AssumptionViolation naming the first offending probe point.
void validate_model(const MarketModel& model, const ProbeMesh& mesh);

/// max |mu_D| over the mesh.
double sup_abs_mu(const MarketModel& model, const ProbeMesh& mesh);

}  // namespace lpeq
