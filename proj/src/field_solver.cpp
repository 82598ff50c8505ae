#include "lpeq/field_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lpeq/error.hpp"

namespace lpeq {

Grid Grid::covering(const MarketModel& model, const GridSpec& spec) {
  if (spec.n_time < 1 || spec.n_space < 2) {
    throw InvalidParameter("grid needs n_time >= 1 and n_space >= 2");
  }
  if (!(spec.coverage_k > 0.0) || !(spec.cfl_safety > 0.0) || spec.cfl_safety > 1.0) {
    throw InvalidParameter("grid needs coverage_k > 0 and cfl_safety in (0, 1]");
  }
  const double sigma_sup = model.dividend.sigma_sup();
  const double half = spec.coverage_k * sigma_sup * std::sqrt(model.horizon) +
                      model.dividend.mu_sup() * model.horizon;
  Grid g;
  g.horizon = model.horizon;
  g.d_min = model.d0 - half;
  g.d_max = model.d0 + half;
  g.n_space = spec.n_space;
  g.cfl_safety = spec.cfl_safety;
  const double dt_max = spec.cfl_safety * g.dx() * g.dx() / (sigma_sup * sigma_sup);
  const auto needed = static_cast<std::size_t>(std::ceil(model.horizon / dt_max));
  g.n_time = std::max(spec.n_time, needed);
  g.n_time_raised = g.n_time > spec.n_time;
  return g;
}

ProbeMesh grid_probe_mesh(const Grid& grid) {
  ProbeMesh mesh;
  mesh.reserve((grid.n_time + 1) * grid.n_nodes());
  for (std::size_t n = 0; n <= grid.n_time; ++n) {
    for (std::size_t j = 0; j < grid.n_nodes(); ++j) mesh.push_back({grid.time(n), grid.node(j)});
  }
  return mesh;
}

void check_cfl(const MarketModel& model, const Grid& grid) {
  double sigma_max = 0.0;
  for (std::size_t n = 0; n <= grid.n_time; ++n) {
    for (std::size_t j = 0; j < grid.n_nodes(); ++j) {
      sigma_max = std::max(sigma_max, model.sigma(grid.time(n), grid.node(j)));
    }
  }
  const double dt_max = grid.cfl_safety * grid.dx() * grid.dx() / (sigma_max * sigma_max);
  if (grid.dt() > dt_max) {
    const auto needed = static_cast<std::size_t>(std::ceil(grid.horizon / dt_max));
    std::ostringstream os;
    os << "CFL violated: dt = " << grid.dt() << " > " << dt_max << "; use n_time >= " << needed;
    throw StepSizeError(os.str(), needed);
  }
}

SolutionField::SolutionField(const Grid& g) : grid(g) {
  const std::size_t size = (g.n_time + 1) * g.n_nodes();
  for (auto* v : {&a, &y1, &y2, &z_a, &z1, &z2}) v->assign(size, 0.0);
  max_update.assign(g.n_time, 0.0);
}

BsdeState SolutionField::node_state(std::size_t n, std::size_t j) const {
  const std::size_t i = index(n, j);
  return {a[i], y1[i], y2[i], z_a[i], z1[i], z2[i]};
}

namespace {

struct Derivatives {
  double dx1;  // first derivative
  double dx2;  // second derivative
};

// Central differences inside, one-sided first difference and zero curvature
// at the two boundary nodes.
inline Derivatives stencil(const double* u, std::size_t j, std::size_t last, double dx) {
  if (j == 0) return {(u[1] - u[0]) / dx, 0.0};
  if (j == last) return {(u[last] - u[last - 1]) / dx, 0.0};
  return {(u[j + 1] - u[j - 1]) / (2.0 * dx), (u[j + 1] - 2.0 * u[j] + u[j - 1]) / (dx * dx)};
}

inline double first_difference(const double* u, std::size_t j, std::size_t last, double dx) {
  return stencil(u, j, last, dx).dx1;
}

// One explicit step of the transformed pair at node j. next_* hold level n+1.
struct PairStep {
  const MarketModel& model;
  double truncation;
  double alpha_sigma;
  double t_next;
  double dt;
  double dx;
  std::size_t last;
  double d_min;

  void operator()(const double* next_ys, const double* next_y2, double* ys, double* y2,
                  std::size_t j) const {
    const double d = d_min + dx * static_cast<double>(j);
    const double mu = model.mu(t_next, d);
    const double sigma = model.sigma(t_next, d);
    const Derivatives ds = stencil(next_ys, j, last, dx);
    const Derivatives d2 = stencil(next_y2, j, last, dx);
    const DiagonalState s{next_ys[j], ds.dx1, next_y2[j], d2.dx1};
    const double g_sigma = driver_g_sigma(model, truncation, t_next, d, s);
    const double g2 = driver_g2_diag(model, truncation, t_next, d, s);
    // u_t + mu u_d + sigma^2 u_dd / 2 = g  =>  u_n = u_{n+1} + dt (L u - g)
    ys[j] = next_ys[j] + dt * (mu * ds.dx1 + 0.5 * sigma * sigma * ds.dx2 - g_sigma);
    y2[j] = next_y2[j] + dt * (mu * d2.dx1 + 0.5 * sigma * sigma * d2.dx2 - g2);
  }
};

struct Y1Step {
  const MarketModel& model;
  double t_next;
  double dt;
  double dx;
  std::size_t last;
  double d_min;

  void operator()(const SolutionField& f, std::size_t n_next, double* y1, std::size_t j) const {
    const double d = d_min + dx * static_cast<double>(j);
    const double mu = model.mu(t_next, d);
    const double sigma = model.sigma(t_next, d);
    const double* next_y1 = f.y1.data() + f.index(n_next, 0);
    const Derivatives dy = stencil(next_y1, j, last, dx);
    const std::size_t i = f.index(n_next, j);
    const BsdeState s{f.a[i], next_y1[j], f.y2[i], f.z_a[i], dy.dx1, f.z2[i]};
    const double g1 = driver_y1(model, t_next, d, s);
    y1[j] = next_y1[j] + dt * (mu * dy.dx1 + 0.5 * sigma * sigma * dy.dx2 - g1);
  }
};

template <typename Body>
void for_nodes(std::size_t count, Execution exec, Body&& body) {
  const auto n = static_cast<std::ptrdiff_t>(count);
  if (exec == Execution::serial) {
    for (std::ptrdiff_t j = 0; j < n; ++j) body(static_cast<std::size_t>(j));
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < n; ++j) body(static_cast<std::size_t>(j));
  }
}

void fill_loadings(const std::vector<double>& value, std::vector<double>& loading,
                   const SolutionField& f, std::size_t n) {
  const std::size_t last = f.grid.n_space;
  const double dx = f.grid.dx();
  const double* u = value.data() + f.index(n, 0);
  double* z = loading.data() + f.index(n, 0);
  for (std::size_t j = 0; j <= last; ++j) z[j] = first_difference(u, j, last, dx);
}

}  // namespace

void solve_y1_field(const MarketModel& model, SolutionField& field, Execution exec) {
  const Grid& g = field.grid;
  const std::size_t last = g.n_space;
  for (std::size_t k = g.n_time; k-- > 0;) {
    const Y1Step step{model, g.time(k + 1), g.dt(), g.dx(), last, g.d_min};
    double* y1 = field.y1.data() + field.index(k, 0);
    for_nodes(g.n_nodes(), exec, [&](std::size_t j) { step(field, k + 1, y1, j); });
    for (std::size_t j = 0; j <= last; ++j) {
      if (!std::isfinite(y1[j])) {
        std::ostringstream os;
        os << "y1 field became non-finite at step " << k;
        throw DivergenceError(os.str(), k);
      }
    }
    fill_loadings(field.y1, field.z1, field, k);
  }
}

SolutionField solve_fields(const MarketModel& model, const Grid& grid, double truncation,
                           Execution exec) {
  if (!(truncation >= 1.0)) throw InvalidParameter("truncation level N must be >= 1");
  validate_model(model, grid_probe_mesh(grid));
  check_cfl(model, grid);

  SolutionField field(grid);
  field.truncation = truncation;
  const double as = model.alpha_sigma();
  const std::size_t nodes = grid.n_nodes();
  const std::size_t last = grid.n_space;
  const double limit = 10.0 * truncation;

  // Transformed pair for the current and the next level.
  std::vector<double> ys_next(nodes, 0.0), y2_next(nodes, 0.0), ys(nodes), y2(nodes);

  for (std::size_t k = grid.n_time; k-- > 0;) {
    const PairStep step{model, truncation, as, grid.time(k + 1), grid.dt(), grid.dx(), last,
                        grid.d_min};
    for_nodes(nodes, exec, [&](std::size_t j) {
      step(ys_next.data(), y2_next.data(), ys.data(), y2.data(), j);
    });

    double update = 0.0;
    for (std::size_t j = 0; j < nodes; ++j) {
      const double a = ys[j] - as * y2[j];
      const std::size_t i = field.index(k, j);
      if (!(std::abs(a) <= limit) || !(std::abs(y2[j]) <= limit)) {
        std::ostringstream os;
        os << "field left [-" << limit << ", " << limit << "] at step " << k << " (t = "
           << grid.time(k) << ", d = " << grid.node(j) << ")";
        throw DivergenceError(os.str(), k);
      }
      update = std::max({update, std::abs(a - field.a[field.index(k + 1, j)]),
                         std::abs(y2[j] - y2_next[j])});
      field.a[i] = a;
      field.y2[i] = y2[j];
    }
    field.max_update[k] = update;
    fill_loadings(field.a, field.z_a, field, k);
    fill_loadings(field.y2, field.z2, field, k);
    std::swap(ys, ys_next);
    std::swap(y2, y2_next);
  }

  bool inside = true;
  for (std::size_t i = 0; i < field.a.size() && inside; ++i) {
    inside = field.a[i] >= -truncation + 1.0 && std::abs(field.y2[i]) <= truncation - 1.0;
  }
  field.lifted = inside;

  solve_y1_field(model, field, exec);
  return field;
}

namespace {

double max_field_difference(const SolutionField& x, const SolutionField& y) {
  double diff = 0.0;
  for (std::size_t i = 0; i < x.a.size(); ++i) {
    diff = std::max({diff, std::abs(x.a[i] - y.a[i]), std::abs(x.y1[i] - y.y1[i]),
                     std::abs(x.y2[i] - y.y2[i])});
  }
  return diff;
}

}  // namespace

TruncatedSolution auto_truncation(const MarketModel& model, const Grid& grid, double n_max,
                                  Execution exec) {
  for (double n = 4.0; n <= n_max; n *= 2.0) {
    SolutionField field = [&]() -> SolutionField {
      try {
        return solve_fields(model, grid, n, exec);
      } catch (const DivergenceError&) {
        SolutionField failed(grid);
        failed.lifted = false;
        return failed;
      }
    }();
    if (!field.lifted) continue;
    const SolutionField doubled = solve_fields(model, grid, 2.0 * n, exec);
    TruncationConfig config;
    config.mode = TruncationMode::automatic;
    config.n_max = n_max;
    config.n = n;
    config.n0 = n;
    const double change = max_field_difference(field, doubled);
    return {config, std::move(field), change};
  }
  std::ostringstream os;
  os << "no truncation level N <= " << n_max << " keeps the solution inside the band";
  throw TruncationFailure(os.str());
}

TruncatedSolution solve_with_truncation(const MarketModel& model, const Grid& grid,
                                        TruncationConfig config, Execution exec) {
  if (config.mode == TruncationMode::automatic) {
    return auto_truncation(model, grid, config.n_max, exec);
  }
  SolutionField field = solve_fields(model, grid, config.n, exec);
  config.n0 = config.n;
  return {config, std::move(field), 0.0};
}

namespace {

struct Cell {
  std::size_t j;
  double w;
};

Cell locate(const Grid& g, double d) {
  if (!(d >= g.d_min && d <= g.d_max)) {
    std::ostringstream os;
    os << "d = " << d << " outside the grid [" << g.d_min << ", " << g.d_max << "]";
    throw ExtrapolationError(os.str());
  }
  double x = (d - g.d_min) / g.dx();
  // Snap queries that land on a node up to rounding, so node values come back exactly.
  const double nearest = std::nearbyint(x);
  if (std::abs(x - nearest) <= 1e-9) x = nearest;
  auto j = static_cast<std::size_t>(x);
  if (j >= g.n_space) j = g.n_space - 1;
  return {j, x - static_cast<double>(j)};
}

inline double lerp_exact(double lo, double hi, double w) {
  return w == 1.0 ? hi : lo + w * (hi - lo);
}

BsdeState interpolate_row(const SolutionField& f, std::size_t n, Cell c) {
  const std::size_t i = f.index(n, c.j);
  return {lerp_exact(f.a[i], f.a[i + 1], c.w),     lerp_exact(f.y1[i], f.y1[i + 1], c.w),
          lerp_exact(f.y2[i], f.y2[i + 1], c.w),   lerp_exact(f.z_a[i], f.z_a[i + 1], c.w),
          lerp_exact(f.z1[i], f.z1[i + 1], c.w),   lerp_exact(f.z2[i], f.z2[i + 1], c.w)};
}

}  // namespace

BsdeState sample_field(const SolutionField& field, double t, double d) {
  const Grid& g = field.grid;
  if (!(t >= 0.0 && t <= g.horizon)) throw ExtrapolationError("t outside [0, T]");
  const Cell c = locate(g, d);
  double x = t / g.dt();
  const double nearest = std::nearbyint(x);
  if (std::abs(x - nearest) <= 1e-9) x = nearest;
  auto n = static_cast<std::size_t>(x);
  if (n >= g.n_time) n = g.n_time - 1;
  const double w = x - static_cast<double>(n);
  const BsdeState lo = interpolate_row(field, n, c);
  if (w == 0.0) return lo;
  const BsdeState hi = interpolate_row(field, n + 1, c);
  if (w == 1.0) return hi;
  return {lerp_exact(lo.a, hi.a, w),     lerp_exact(lo.y1, hi.y1, w),
          lerp_exact(lo.y2, hi.y2, w),   lerp_exact(lo.z_a, hi.z_a, w),
          lerp_exact(lo.z1, hi.z1, w),   lerp_exact(lo.z2, hi.z2, w)};
}

bool FieldSampler::contains(double d) const {
  return d >= field_.grid.d_min && d <= field_.grid.d_max;
}

BsdeState FieldSampler::at_node(std::size_t n, double d) const {
  return interpolate_row(field_, n, locate(field_.grid, d));
}

std::array<double, 3> FieldSampler::z_slope(std::size_t n, double d) const {
  const Cell c = locate(field_.grid, d);
  const std::size_t i = field_.index(n, c.j);
  const double dx = field_.grid.dx();
  return {(field_.z_a[i + 1] - field_.z_a[i]) / dx, (field_.z1[i + 1] - field_.z1[i]) / dx,
          (field_.z2[i + 1] - field_.z2[i]) / dx};
}

double a_lower_bound(const MarketModel& model, double sup_mu) {
  return -(model.alpha_sigma() * sup_mu + model.rho_sigma()) * model.horizon;
}

GronwallBound y2_gronwall_bound(const MarketModel& model, double sup_mu) {
  GronwallBound b;
  b.a_floor = a_lower_bound(model, sup_mu);
  // exp(-x)|1 + x| on [a_floor, inf): peak 1 at x = 0, or the left end when a_floor < -1.
  b.k = std::max(1.0, b.a_floor < -1.0 ? std::exp(-b.a_floor) * (-1.0 - b.a_floor) : 0.0);
  b.c1 = (model.agent2.rho + b.k) / model.agent2.alpha;
  b.c2 = std::exp(-b.a_floor);
  b.bound = b.c1 * model.horizon * std::exp(b.c2 * model.horizon);
  return b;
}

}  // namespace lpeq
