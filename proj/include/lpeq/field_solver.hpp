#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "lpeq/bsde_system.hpp"
#include "lpeq/execution.hpp"
#include "lpeq/market_model.hpp"
#include "lpeq/state_sampler.hpp"

namespace lpeq {

struct GridSpec {
  std::size_t n_time = 400;
  std::size_t n_space = 200;
  double coverage_k = 5.0;
  double cfl_safety = 0.9;
};

/// Uniform (time, dividend) grid. Space nodes are d_min + j dx, j = 0..n_space.
struct Grid {
  double horizon = 1.0;
  std::size_t n_time = 1;
  double d_min = 0.0;
  double d_max = 1.0;
  std::size_t n_space = 1;
  double cfl_safety = 0.9;
  bool n_time_raised = false;  // set when covering() lifted n_time to meet the CFL bound

  double dt() const { return horizon / static_cast<double>(n_time); }
  double dx() const { return (d_max - d_min) / static_cast<double>(n_space); }
  std::size_t n_nodes() const { return n_space + 1; }
  double time(std::size_t n) const { return dt() * static_cast<double>(n); }
  double node(std::size_t j) const { return d_min + dx() * static_cast<double>(j); }

  /// Grid centred on D0 covering D0 +- (k sigma_sup sqrt(T) + mu_sup T). n_time
  /// is raised if needed so that dt <= safety dx^2 / sigma_sup^2.
  static Grid covering(const MarketModel& model, const GridSpec& spec);
};

/// Throws StepSizeError (with the smallest admissible n_time) if dt exceeds
/// safety * dx^2 / max sigma_D^2 over the grid nodes.
void check_cfl(const MarketModel& model, const Grid& grid);

/// Probe mesh made of every grid node.
ProbeMesh grid_probe_mesh(const Grid& grid);

/// Six unknowns stored as (time step, space node) row-major arrays.
struct SolutionField {
  Grid grid;
  double truncation = 0.0;
  std::vector<double> a, y1, y2, z_a, z1, z2;

  std::vector<double> max_update;  // per backward step, max |a_n - a_{n+1}|, |y2_n - y2_{n+1}|
  bool lifted = false;             // a >= -N + 1 and |y2| <= N - 1 everywhere

  explicit SolutionField(const Grid& g);

  std::size_t index(std::size_t n, std::size_t j) const { return n * grid.n_nodes() + j; }
  BsdeState node_state(std::size_t n, std::size_t j) const;
};

/// Backward induction for (Y_sigma, Y2) with the truncated transformed drivers,
/// mapped back to (a, Y2), followed by the Y1 sweep.
SolutionField solve_fields(const MarketModel& model, const Grid& grid, double truncation,
                           Execution exec = Execution::parallel);

/// Y1 sweep on its own, reading the already solved (a, z_a, y2, z2) fields.
void solve_y1_field(const MarketModel& model, SolutionField& field,
                    Execution exec = Execution::parallel);

enum class TruncationMode { fixed, automatic };

struct TruncationConfig {
  TruncationMode mode = TruncationMode::automatic;
  double n = 16.0;      // level for fixed mode
  double n_max = 64.0;  // ladder cap for automatic mode
  double n0 = 0.0;      // level actually used
};

struct TruncatedSolution {
  TruncationConfig config;
  SolutionField field;
  double doubling_change = 0.0;  // max |field(N0) - field(2 N0)| over a, y1, y2
};

/// Ladder N = 4, 8, 16, ... until the solved field sits strictly inside the
/// band (a >= -N + 1, |y2| <= N - 1); then re-solves at 2 N to confirm.
TruncatedSolution auto_truncation(const MarketModel& model, const Grid& grid, double n_max = 64.0,
                                  Execution exec = Execution::parallel);

TruncatedSolution solve_with_truncation(const MarketModel& model, const Grid& grid,
                                        TruncationConfig config,
                                        Execution exec = Execution::parallel);

/// Bilinear interpolation; exact at nodes. Throws ExtrapolationError outside
/// [d_min, d_max] or [0, T].
BsdeState sample_field(const SolutionField& field, double t, double d);

class FieldSampler final : public StateSampler {
 public:
  explicit FieldSampler(const SolutionField& field) : field_(field) {}

  std::size_t n_steps() const override { return field_.grid.n_time; }
  double horizon() const override { return field_.grid.horizon; }
  bool contains(double d) const override;
  BsdeState at_node(std::size_t n, double d) const override;
  std::array<double, 3> z_slope(std::size_t n, double d) const override;

 private:
  const SolutionField& field_;
};

/// Lower bound a >= -(alpha_S sup|mu_D| + rho_S) T.
double a_lower_bound(const MarketModel& model, double sup_mu);

/// |y2| <= c1 T exp(c2 T) with c1 = (rho2 + K) / alpha2, c2 = exp(-a_lb) and
/// K = sup_{x >= a_lb} exp(-x) |1 + x|.
struct GronwallBound {
  double a_floor;
  double k;
  double c1;
  double c2;
  double bound;
};
GronwallBound y2_gronwall_bound(const MarketModel& model, double sup_mu);

}  // namespace lpeq
