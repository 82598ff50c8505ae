#pragma once

#include "lpeq/market_model.hpp"

namespace lpeq {

/// Unknowns of the coupled system. Each z multiplies sigma_D dB.
struct BsdeState {
  double a = 0.0;   // log annuity price
  double y1 = 0.0;  // agent-1 certainty equivalent
  double y2 = 0.0;  // agent-2 certainty equivalent
  double z_a = 0.0;
  double z1 = 0.0;
  double z2 = 0.0;

  friend bool operator==(const BsdeState&, const BsdeState&) = default;
};

/// (Y_sigma, Y_2) coordinates in which the (a, Y_2) subsystem is diagonally quadratic.
struct DiagonalState {
  double y_sigma = 0.0;
  double z_sigma = 0.0;
  double y2 = 0.0;
  double z2 = 0.0;

  friend bool operator==(const DiagonalState&, const DiagonalState&) = default;
};

struct TransformedPair {
  double a;
  double z_a;
  double y2;
  double z2;

  friend bool operator==(const TransformedPair&, const TransformedPair&) = default;
};

/// m_N(x) = min(N, max(-N, x)).
double clamp(double n, double x);

/// The recurring factor 1 - z2 - z_a / alpha_sigma.
double risk_loading(double alpha_sigma, const BsdeState& s);

// Untruncated drivers. These throw RangeError when exp(-a) overflows and are
// meant for residual checks on bounded solutions.
double driver_a(const MarketModel& model, double t, double d, const BsdeState& s);
double driver_y1(const MarketModel& model, double t, double d, const BsdeState& s);
double driver_y2(const MarketModel& model, double t, double d, const BsdeState& s);

// Truncated drivers: exp(-a) -> exp(-max(a, -N)), a -> max(a, -N), y2 -> m_N(y2).
double driver_a_trunc(const MarketModel& model, double n, double t, double d, const BsdeState& s);
double driver_y2_trunc(const MarketModel& model, double n, double t, double d, const BsdeState& s);

// Drivers of the transformed system, with a recovered as y_sigma - alpha_sigma y2.
double driver_g_sigma(const MarketModel& model, double n, double t, double d,
                      const DiagonalState& s);
double driver_g2_diag(const MarketModel& model, double n, double t, double d,
                      const DiagonalState& s);

DiagonalState to_diagonal(double alpha_sigma, const BsdeState& s);
TransformedPair from_diagonal(double alpha_sigma, const DiagonalState& s);

/// Quadratic-growth constants: |driver| <= c0 + c1 (z_a^2 + z1^2 + z2^2) for the
/// truncated (a, y2) drivers on a >= -N, |y2| <= N with |mu| <= M, sigma <= M.
struct GrowthConstants {
  double c0;
  double c1;
};
GrowthConstants truncated_growth_constants(const MarketModel& model, double n);

}  // namespace lpeq
