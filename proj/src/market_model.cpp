#include "lpeq/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lpeq/error.hpp"

namespace lpeq {

AggregatePreferences aggregate_preferences(double alpha1, double rho1, double alpha2, double rho2) {
  if (!(alpha1 > 0.0) || !(alpha2 > 0.0)) {
    throw InvalidParameter("risk aversion must be strictly positive");
  }
  if (!(rho1 >= 0.0) || !(rho2 >= 0.0)) {
    throw InvalidParameter("time preference must be nonnegative");
  }
  const double alpha_sigma = 1.0 / (1.0 / alpha1 + 1.0 / alpha2);
  const double rho_sigma = alpha_sigma * (rho1 / alpha1 + rho2 / alpha2);
  return {alpha_sigma, rho_sigma};
}

std::string to_string(DividendPreset preset) {
  switch (preset) {
    case DividendPreset::constant:
      return "constant";
    case DividendPreset::affine_clamped:
      return "affine_clamped";
    case DividendPreset::tanh_bounded:
      return "tanh_bounded";
  }
  return "unknown";
}

DividendPreset dividend_preset_from_string(const std::string& name) {
  if (name == "constant") return DividendPreset::constant;
  if (name == "affine_clamped") return DividendPreset::affine_clamped;
  if (name == "tanh_bounded") return DividendPreset::tanh_bounded;
  throw InvalidParameter("unknown dividend preset '" + name + "'");
}

double DividendCoefficients::mu(double /*t*/, double d) const {
  switch (preset) {
    case DividendPreset::constant:
      return mu0;
    case DividendPreset::affine_clamped:
      return std::clamp(mu0 + mu1 * d, -mu_cap, mu_cap);
    case DividendPreset::tanh_bounded:
      return mu0 + mu1 * std::tanh(d);
  }
  return mu0;
}

double DividendCoefficients::sigma(double /*t*/, double d) const {
  switch (preset) {
    case DividendPreset::constant:
      return sigma0;
    case DividendPreset::affine_clamped:
      return std::clamp(sigma0 + sigma1 * d, sigma_lo, sigma_hi);
    case DividendPreset::tanh_bounded:
      return sigma0 + sigma1 * std::tanh(d);
  }
  return sigma0;
}

double DividendCoefficients::mu_sup() const {
  switch (preset) {
    case DividendPreset::constant:
      return std::abs(mu0);
    case DividendPreset::affine_clamped:
      return mu1 == 0.0 ? std::min(std::abs(mu0), mu_cap) : mu_cap;
    case DividendPreset::tanh_bounded:
      return std::abs(mu0) + std::abs(mu1);
  }
  return std::abs(mu0);
}

double DividendCoefficients::sigma_sup() const {
  switch (preset) {
    case DividendPreset::constant:
      return sigma0;
    case DividendPreset::affine_clamped:
      return sigma1 == 0.0 ? std::clamp(sigma0, sigma_lo, sigma_hi) : sigma_hi;
    case DividendPreset::tanh_bounded:
      return sigma0 + std::abs(sigma1);
  }
  return sigma0;
}

DividendCoefficients DividendCoefficients::constant(double mu, double sigma) {
  DividendCoefficients c;
  c.preset = DividendPreset::constant;
  c.mu0 = mu;
  c.sigma0 = sigma;
  return c;
}

DividendCoefficients DividendCoefficients::tanh_bounded(double mu0, double mu1, double sigma0,
                                                        double sigma1) {
  DividendCoefficients c;
  c.preset = DividendPreset::tanh_bounded;
  c.mu0 = mu0;
  c.mu1 = mu1;
  c.sigma0 = sigma0;
  c.sigma1 = sigma1;
  return c;
}

DividendCoefficients DividendCoefficients::affine_clamped(double mu0, double mu1, double mu_cap,
                                                          double sigma0, double sigma1,
                                                          double sigma_lo, double sigma_hi) {
  if (!(mu_cap >= 0.0) || !(sigma_lo <= sigma_hi)) {
    throw InvalidParameter("affine_clamped preset needs mu_cap >= 0 and sigma_lo <= sigma_hi");
  }
  DividendCoefficients c;
  c.preset = DividendPreset::affine_clamped;
  c.mu0 = mu0;
  c.mu1 = mu1;
  c.mu_cap = mu_cap;
  c.sigma0 = sigma0;
  c.sigma1 = sigma1;
  c.sigma_lo = sigma_lo;
  c.sigma_hi = sigma_hi;
  return c;
}

double MarketModel::alpha_sigma() const {
  return aggregate_preferences(agent1.alpha, agent1.rho, agent2.alpha, agent2.rho).alpha_sigma;
}

double MarketModel::rho_sigma() const {
  return aggregate_preferences(agent1.alpha, agent1.rho, agent2.alpha, agent2.rho).rho_sigma;
}

void MarketModel::check_parameters() const {
  aggregate_preferences(agent1.alpha, agent1.rho, agent2.alpha, agent2.rho);
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidParameter("horizon must be positive and finite");
  }
  if (!(bound_m > 0.0)) throw InvalidParameter("bound M must be positive");
  if (!std::isfinite(d0)) throw InvalidParameter("D0 must be finite");
  if (std::abs(agent1.theta0 + agent2.theta0 - 1.0) > 1e-12) {
    throw InvalidParameter("annuity endowments must sum to one (one-net supply)");
  }
}

ProbeMesh make_probe_mesh(double horizon, double d_min, double d_max, std::size_t n_t,
                          std::size_t n_d) {
  ProbeMesh mesh;
  mesh.reserve(n_t * n_d);
  for (std::size_t i = 0; i < n_t; ++i) {
    const double t = n_t == 1 ? 0.0 : horizon * static_cast<double>(i) / static_cast<double>(n_t - 1);
    for (std::size_t j = 0; j < n_d; ++j) {
      const double d = n_d == 1 ? d_min
                                : d_min + (d_max - d_min) * static_cast<double>(j) /
                                              static_cast<double>(n_d - 1);
      mesh.push_back({t, d});
    }
  }
  return mesh;
}

std::optional<BoundViolation> find_bound_violation(const MarketModel& model,
                                                   const ProbeMesh& mesh) {
  const double m = model.bound_m;
  for (const auto& p : mesh) {
    const double mu = model.mu(p.t, p.d);
    if (!(std::abs(mu) <= m)) return BoundViolation{p, "mu_D", mu};
    const double sigma = model.sigma(p.t, p.d);
    if (!(sigma >= 1.0 / m && sigma <= m)) return BoundViolation{p, "sigma_D", sigma};
  }
  return std::nullopt;
}

void validate_model(const MarketModel& model, const ProbeMesh& mesh) {
  model.check_parameters();
  if (auto v = find_bound_violation(model, mesh)) {
    std::ostringstream os;
    os << "dividend bound violated: " << v->quantity << "(t=" << v->point.t << ", d=" << v->point.d
       << ") = " << v->value << " with M = " << model.bound_m;
    throw AssumptionViolation(os.str(), v->point.t, v->point.d, v->value);
  }
}

double sup_abs_mu(const MarketModel& model, const ProbeMesh& mesh) {
  double s = 0.0;
  for (const auto& p : mesh) s = std::max(s, std::abs(model.mu(p.t, p.d)));
  return s;
}

}  // namespace lpeq
