#include "lpeq/bsde_system.hpp"

#include <algorithm>
#include <cmath>

#include "lpeq/error.hpp"

namespace lpeq {

double clamp(double n, double x) { return std::min(n, std::max(-n, x)); }

double risk_loading(double alpha_sigma, const BsdeState& s) {
  return 1.0 - s.z2 - s.z_a / alpha_sigma;
}

namespace {

double checked_exp(double x) {
  const double v = std::exp(x);
  if (!std::isfinite(v)) throw RangeError("exp overflow in untruncated driver");
  return v;
}

}  // namespace

double driver_a(const MarketModel& model, double t, double d, const BsdeState& s) {
  const double as = model.alpha_sigma();
  const double a1 = model.agent1.alpha;
  const double a2 = model.agent2.alpha;
  const double sig2 = model.sigma(t, d) * model.sigma(t, d);
  const double load = risk_loading(as, s);
  return -checked_exp(-s.a) + as * model.mu(t, d) + model.rho_sigma() -
         0.5 * as * a2 * sig2 * s.z2 * s.z2 - 0.5 * as * a1 * sig2 * load * load;
}

double driver_y1(const MarketModel& model, double t, double d, const BsdeState& s) {
  const double as = model.alpha_sigma();
  const double a1 = model.agent1.alpha;
  const double sig2 = model.sigma(t, d) * model.sigma(t, d);
  const double load = risk_loading(as, s);
  return -model.agent1.rho / a1 + (1.0 + s.a + a1 * s.y1) / (a1 * checked_exp(s.a)) -
         0.5 * a1 * sig2 * load * load + a1 * sig2 * s.z1 * load;
}

double driver_y2(const MarketModel& model, double t, double d, const BsdeState& s) {
  const double a2 = model.agent2.alpha;
  const double sig2 = model.sigma(t, d) * model.sigma(t, d);
  return -model.agent2.rho / a2 + checked_exp(-s.a) * (1.0 + a2 * s.y2 + s.a) / a2 +
         0.5 * a2 * sig2 * s.z2 * s.z2;
}

double driver_a_trunc(const MarketModel& model, double n, double t, double d, const BsdeState& s) {
  const double as = model.alpha_sigma();
  const double a1 = model.agent1.alpha;
  const double a2 = model.agent2.alpha;
  const double sig2 = model.sigma(t, d) * model.sigma(t, d);
  const double load = risk_loading(as, s);
  return -std::exp(-std::max(s.a, -n)) + as * model.mu(t, d) + model.rho_sigma() -
         0.5 * as * a2 * sig2 * s.z2 * s.z2 - 0.5 * as * a1 * sig2 * load * load;
}

double driver_y2_trunc(const MarketModel& model, double n, double t, double d, const BsdeState& s) {
  const double a2 = model.agent2.alpha;
  const double sig2 = model.sigma(t, d) * model.sigma(t, d);
  const double a_cut = std::max(s.a, -n);
  return -model.agent2.rho / a2 +
         std::exp(-a_cut) * (1.0 + a2 * clamp(n, s.y2) + a_cut) / a2 +
         0.5 * a2 * sig2 * s.z2 * s.z2;
}

double driver_g_sigma(const MarketModel& model, double n, double t, double d,
                      const DiagonalState& s) {
  const double as = model.alpha_sigma();
  const double a1 = model.agent1.alpha;
  const double a2 = model.agent2.alpha;
  const double sig2 = model.sigma(t, d) * model.sigma(t, d);
  const double a_cut = std::max(s.y_sigma - as * s.y2, -n);
  const double q = 1.0 - s.z_sigma / as;
  return as * (model.mu(t, d) + model.agent1.rho / a1 - 0.5 * a1 * sig2 * q * q +
               std::exp(-a_cut) * (-1.0 / as + (1.0 + a2 * clamp(n, s.y2) + a_cut) / a2));
}

double driver_g2_diag(const MarketModel& model, double n, double t, double d,
                      const DiagonalState& s) {
  const double as = model.alpha_sigma();
  const double a2 = model.agent2.alpha;
  const double sig2 = model.sigma(t, d) * model.sigma(t, d);
  const double a_cut = std::max(s.y_sigma - as * s.y2, -n);
  return -model.agent2.rho / a2 + 0.5 * a2 * sig2 * s.z2 * s.z2 +
         std::exp(-a_cut) * (1.0 + a2 * clamp(n, s.y2) + a_cut) / a2;
}

DiagonalState to_diagonal(double alpha_sigma, const BsdeState& s) {
  return {s.a + alpha_sigma * s.y2, s.z_a + alpha_sigma * s.z2, s.y2, s.z2};
}

TransformedPair from_diagonal(double alpha_sigma, const DiagonalState& s) {
  return {s.y_sigma - alpha_sigma * s.y2, s.z_sigma - alpha_sigma * s.z2, s.y2, s.z2};
}

GrowthConstants truncated_growth_constants(const MarketModel& model, double n) {
  // Sum of the constant parts of both drivers, so it bounds each one. On a >= -N,
  // exp(-a) <= e^N and exp(-a) |1 + a + alpha2 m_N(y2)| <= e^N (1 + N + alpha2 N).
  const double m = model.bound_m;
  const double as = model.alpha_sigma();
  const double a1 = model.agent1.alpha;
  const double a2 = model.agent2.alpha;
  const double en = std::exp(n);
  const double c0 = en * (1.0 + (1.0 + n + a2 * n) / a2) + as * m + model.rho_sigma() +
                    model.agent2.rho / a2;
  // (1 - z2 - z_a/as)^2 <= 3 (1 + z2^2 + z_a^2/as^2)
  const double c1 = 0.5 * as * a2 * m * m + 1.5 * as * a1 * m * m * std::max(1.0, 1.0 / (as * as)) +
                    0.5 * a2 * m * m;
  return {c0 + 1.5 * as * a1 * m * m, c1};
}

}  // namespace lpeq
