#include "lpeq/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "lpeq/bsde_system.hpp"
#include "lpeq/error.hpp"
#include "lpeq/rng.hpp"

namespace lpeq {

CheckResult make_check(std::string name, double statistic, double threshold,
                       std::size_t n_samples, std::string details, Comparison cmp) {
  CheckResult r;
  r.name = std::move(name);
  r.statistic = statistic;
  r.threshold = threshold;
  r.comparison = cmp;
  r.n_samples = n_samples;
  r.details = std::move(details);
  switch (cmp) {
    case Comparison::at_most:
      r.passed = statistic <= threshold;
      break;
    case Comparison::at_least:
      r.passed = statistic >= threshold;
      break;
    case Comparison::greater_than:
      r.passed = statistic > threshold;
      break;
  }
  return r;
}

void VerificationReport::add(std::vector<CheckResult> more) {
  for (auto& c : more) checks.push_back(std::move(c));
}

bool VerificationReport::overall_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return !c.mandatory || c.passed; });
}

const CheckResult* VerificationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

std::size_t checkpoint_index(double fraction, std::size_t n_steps) {
  const double x = std::clamp(fraction, 0.0, 1.0) * static_cast<double>(n_steps);
  return static_cast<std::size_t>(std::llround(x));
}

// Number of standard errors separating mean from zero; 0/0 counts as 0.
double z_score(double mean, double se) {
  if (se > 0.0) return std::abs(mean) / se;
  return mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

// Running trapezoid integral, out[n] = int_0^{t_n}.
void cumulative_trapezoid(const std::vector<double>& f, double dt, std::vector<double>& out) {
  out.resize(f.size());
  out[0] = 0.0;
  for (std::size_t n = 1; n < f.size(); ++n) out[n] = out[n - 1] + 0.5 * dt * (f[n - 1] + f[n]);
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

std::vector<CheckResult> check_clearing(const EquilibriumPathSet& paths, const VerifyOptions& opt) {
  if (paths.size() == 0) throw InvalidParameter("clearing check needs at least one path");
  const std::size_t np = paths.size();
  std::vector<double> rc(np), rt(np), rw(np);
  paths.for_each([&](std::size_t k, const EquilibriumPath& p) {
    double c = 0.0, th = 0.0, w = 0.0;
    for (std::size_t n = 0; n < p.t.size(); ++n) {
      c = std::max(c, std::abs(p.c1[n] + p.c2[n] - (1.0 + p.d[n])));
      th = std::max(th, std::abs(p.theta1[n] + p.theta2[n] - 1.0));
      w = std::max(w, std::abs(p.x1[n] + p.x2[n] - (p.stock[n] + p.annuity[n])));
    }
    rc[k] = c;
    rt[k] = th;
    rw[k] = w;
  });
  const double thr = opt.clearing_c * paths.dt();
  const std::string det = "threshold " + fmt(opt.clearing_c) + " * dt, dt = " + fmt(paths.dt());
  return {make_check("clearing_consumption", max_of(rc), thr, np, det),
          make_check("clearing_holdings", max_of(rt), thr, np, det),
          make_check("clearing_wealth", max_of(rw), thr, np, det)};
}

namespace {

struct CvEstimate {
  double mean = 0.0;     // control-variate adjusted
  double se = 0.0;
  double plain_mean = 0.0;
  double plain_se = 0.0;
  double sd = 0.0;  // sample sd of y
};

// y - beta (x - 0), x has exact mean zero.
CvEstimate cv_estimate(const std::vector<double>& y, const std::vector<double>& x) {
  const std::size_t n = y.size();
  const McEstimate py = mc_estimate(y);
  double mx = 0.0;
  for (double v : x) mx += v;
  mx /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxy += (x[k] - mx) * (y[k] - py.mean);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  const double beta = sxx > 0.0 ? sxy / sxx : 0.0;
  std::vector<double> r(n);
  for (std::size_t k = 0; k < n; ++k) r[k] = y[k] - beta * x[k];
  const McEstimate pr = mc_estimate(r);
  CvEstimate e;
  e.mean = pr.mean;
  e.se = pr.se;
  e.plain_mean = py.mean;
  e.plain_se = py.se;
  e.sd = py.se * std::sqrt(static_cast<double>(n));
  return e;
}

}  // namespace

std::vector<CheckResult> check_martingales(const EquilibriumPathSet& paths,
                                           const VerifyOptions& opt) {
  const std::size_t np = paths.size();
  if (np < opt.min_paths) {
    throw InvalidParameter("martingale tests need at least " + std::to_string(opt.min_paths) +
                           " paths, got " + std::to_string(np));
  }
  const std::size_t n_steps = paths.n_steps();
  const double dt = paths.dt();
  std::vector<std::size_t> cps;
  for (double f : opt.checkpoints) cps.push_back(checkpoint_index(f, n_steps));
  const std::size_t nc = cps.size();

  // diffs[proc][cp][path]; ctrl[cp][path] = xi_t exp(int r) / xi_0 - 1, mean zero
  std::vector<std::vector<std::vector<double>>> diffs(
      4, std::vector<std::vector<double>>(nc, std::vector<double>(np)));
  std::vector<std::vector<double>> ctrl(nc, std::vector<double>(np));
  std::vector<double> repl_s(np), repl_a(np), ctrl_t(np);
  double s0 = 0.0, a0 = 0.0;

  paths.for_each([&](std::size_t k, const EquilibriumPath& p) {
    const std::size_t len = p.t.size();
    const auto db = paths.increments(k);
    std::vector<double> f_a(len), f_s(len), f_x2(len), f_x1(len), lc(len, 0.0);
    for (std::size_t n = 0; n < len; ++n) {
      f_a[n] = p.xi[n];
      f_s[n] = p.xi[n] * p.d[n];
      f_x2[n] = p.xi[n] * p.c2[n];
      f_x1[n] = p.xi[n] * p.c1[n];
      if (n > 0) {
        const double kk = p.kappa[n - 1];
        lc[n] = lc[n - 1] - kk * db[n - 1] - 0.5 * kk * kk * dt;
      }
    }
    std::vector<double> i_a, i_s, i_x2, i_x1;
    cumulative_trapezoid(f_a, dt, i_a);
    cumulative_trapezoid(f_s, dt, i_s);
    cumulative_trapezoid(f_x2, dt, i_x2);
    cumulative_trapezoid(f_x1, dt, i_x1);
    auto gains = [&](std::size_t n, int proc) {
      switch (proc) {
        case 0:
          return p.xi[n] * p.annuity[n] + i_a[n];
        case 1:
          return p.xi[n] * p.stock[n] + i_s[n];
        case 2:
          return p.xi[n] * p.x2[n] + i_x2[n];
        default:
          return p.xi[n] * p.x1[n] + i_x1[n];
      }
    };
    for (int proc = 0; proc < 4; ++proc) {
      const double g0 = gains(0, proc);
      for (std::size_t c = 0; c < nc; ++c) diffs[proc][c][k] = gains(cps[c], proc) - g0;
    }
    for (std::size_t c = 0; c < nc; ++c) ctrl[c][k] = std::expm1(lc[cps[c]]);
    const std::size_t last = len - 1;
    ctrl_t[k] = std::expm1(lc[last]);
    repl_s[k] = (i_s[last] + p.xi[last] * p.d[last]) / p.xi[0] - p.stock[0];
    repl_a[k] = (i_a[last] + p.xi[last]) / p.xi[0] - p.annuity[0];
    if (k == 0) {
      s0 = p.stock[0];
      a0 = p.annuity[0];
    }
  });

  // |cv mean| against k SE_cv plus a weak-error allowance c dt sd.
  auto ratio = [&](const CvEstimate& e) {
    const double allow = opt.se_multiplier * e.se + opt.martingale_bias_c * dt * e.sd;
    return allow > 0.0 ? std::abs(e.mean) / allow : (e.mean == 0.0 ? 0.0 : HUGE_VAL);
  };

  static const char* names[4] = {"martingale_annuity", "martingale_stock", "martingale_wealth2",
                                 "martingale_wealth1"};
  std::vector<CheckResult> out;
  for (int proc = 0; proc < 4; ++proc) {
    double worst = 0.0, worst_plain = 0.0;
    std::ostringstream det;
    for (std::size_t c = 0; c < nc; ++c) {
      const CvEstimate e = cv_estimate(diffs[proc][c], ctrl[c]);
      worst = std::max(worst, ratio(e));
      worst_plain = std::max(worst_plain, z_score(e.plain_mean, e.plain_se));
      det << "; t=" << fmt(dt * static_cast<double>(cps[c])) << " mean=" << fmt(e.mean)
          << " se=" << fmt(e.se) << " plain_mean=" << fmt(e.plain_mean)
          << " plain_se=" << fmt(e.plain_se);
    }
    out.push_back(make_check(names[proc], worst, 1.0, np,
                             "max |mean| / (k se + c dt sd) over checkpoints, control variate; "
                             "plain max |mean|/se=" +
                                 fmt(worst_plain) + det.str()));
  }
  const CvEstimate es = cv_estimate(repl_s, ctrl_t);
  const CvEstimate ea = cv_estimate(repl_a, ctrl_t);
  out.push_back(make_check("no_bubble_stock", ratio(es), 1.0, np,
                           "S0=" + fmt(s0) + " replication=" + fmt(s0 + es.mean) + " se=" +
                               fmt(es.se) + " plain_replication=" + fmt(s0 + es.plain_mean) +
                               " plain_se=" + fmt(es.plain_se)));
  out.push_back(make_check("no_bubble_annuity", ratio(ea), 1.0, np,
                           "A0=" + fmt(a0) + " replication=" + fmt(a0 + ea.mean) + " se=" +
                               fmt(ea.se) + " plain_replication=" + fmt(a0 + ea.plain_mean) +
                               " plain_se=" + fmt(ea.plain_se)));
  return out;
}

std::vector<CheckResult> check_field_residuals(const SolutionField& field,
                                               const MarketModel& model,
                                               const VerifyOptions& opt) {
  const Grid& g = field.grid;
  const double dt = g.dt();
  const double dx = g.dx();
  const std::size_t nn = g.n_nodes();

  // (i) the scheme re-evaluated with level-n operators and drivers.
  double worst_res[3] = {0.0, 0.0, 0.0};
  for (std::size_t n = 0; n < g.n_time; ++n) {
    const double t = g.time(n);
    for (std::size_t j = 1; j + 1 < nn; ++j) {
      const double d = g.node(j);
      const double mu = model.mu(t, d);
      const double sd = model.sigma(t, d);
      const BsdeState s = field.node_state(n, j);
      const double f[3] = {driver_a(model, t, d, s), driver_y2(model, t, d, s),
                           driver_y1(model, t, d, s)};
      const std::vector<double>* u[3] = {&field.a, &field.y2, &field.y1};
      for (int q = 0; q < 3; ++q) {
        const auto& v = *u[q];
        const std::size_t i = field.index(n, j);
        const std::size_t i1 = field.index(n + 1, j);
        const double ud = (v[i + 1] - v[i - 1]) / (2.0 * dx);
        const double udd = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (dx * dx);
        const double res = v[i1] - v[i] + dt * (mu * ud + 0.5 * sd * sd * udd - f[q]);
        worst_res[q] = std::max(worst_res[q], std::abs(res) / dt);
      }
    }
  }
  const double res_stat = std::max({worst_res[0], worst_res[1], worst_res[2]});

  // (ii) loadings against a fourth-order derivative of the value fields.
  const std::vector<double>* zs[3] = {&field.z_a, &field.z1, &field.z2};
  const std::vector<double>* us[3] = {&field.a, &field.y1, &field.y2};
  double rel[3] = {0.0, 0.0, 0.0};
  for (int q = 0; q < 3; ++q) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t n = 0; n < g.n_time; ++n) {
      for (std::size_t j = 2; j + 2 < nn; ++j) {
        const std::size_t i = field.index(n, j);
        const auto& v = *us[q];
        const double d4 = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * dx);
        diff = std::max(diff, std::abs((*zs[q])[i] - d4));
        scale = std::max(scale, std::abs(d4));
      }
    }
    rel[q] = diff / std::max(scale, 1e-6);
  }
  const double z_stat = std::max({rel[0], rel[1], rel[2]});

  const std::size_t n_nodes = g.n_time * (nn - 2);
  return {make_check("bsde_residual", res_stat, opt.bsde_residual_c * dt, n_nodes,
                     "max |local error| / dt for a, y2, y1: " + fmt(worst_res[0]) + ", " +
                         fmt(worst_res[1]) + ", " + fmt(worst_res[2]) + "; threshold " +
                         fmt(opt.bsde_residual_c) + " * dt"),
          make_check("z_consistency", z_stat, opt.z_rel_tol, n_nodes,
                     "relative sup error of z_a, z1, z2: " + fmt(rel[0]) + ", " + fmt(rel[1]) +
                         ", " + fmt(rel[2]))};
}

std::vector<CheckResult> check_ode_residuals(const ConstantSolution& solution,
                                             const MarketModel& model, const VerifyOptions& opt) {
  const std::size_t n = solution.n_steps();
  const double h = model.horizon / static_cast<double>(n);
  double worst = 0.0;
  const std::vector<double>* u[3] = {&solution.a, &solution.y2, &solution.y1};
  for (std::size_t k = 2; k + 2 <= n; ++k) {
    const BsdeState s = solution.state(k);
    const double t = solution.times[k];
    const double f[3] = {driver_a(model, t, model.d0, s), driver_y2(model, t, model.d0, s),
                         driver_y1(model, t, model.d0, s)};
    for (int q = 0; q < 3; ++q) {
      const auto& v = *u[q];
      const double deriv = (-v[k + 2] + 8.0 * v[k + 1] - 8.0 * v[k - 1] + v[k - 2]) / (12.0 * h);
      worst = std::max(worst, std::abs(deriv - f[q]));
    }
  }
  return {make_check("bsde_residual", worst, opt.bsde_residual_c * h, n > 4 ? n - 3 : 0,
                     "max |u' - driver| with a five-point derivative; threshold " +
                         fmt(opt.bsde_residual_c) + " * dt")};
}

CheckResult check_identities(const MarketModel& model, const VerifyOptions& opt) {
  std::mt19937_64 rng(opt.seed ^ 0x5DEECE66Dull);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < opt.identity_samples; ++i) {
    BsdeState s;
    s.a = 2.0 * unit(rng);
    s.y1 = 2.0 * unit(rng);
    s.y2 = 2.0 * unit(rng);
    s.z_a = unit(rng);
    s.z1 = unit(rng);
    s.z2 = unit(rng);
    const double t = 0.5 * model.horizon * (1.0 + unit(rng));
    const double d = model.d0 + 3.0 * unit(rng);
    const auto c = coefficients_at(model, s, t, d);
    worst = std::max(worst, std::abs(c.mu_s - c.kappa * c.sigma_s) / (1.0 + std::abs(c.mu_s)));
    worst = std::max(worst, std::abs(c.r - (c.mu_a - c.kappa * c.sigma_a)) / (1.0 + std::abs(c.r)));
  }
  return make_check("identities_random", worst, opt.identity_tol, opt.identity_samples,
                    "mu_S = kappa sigma_S and r = mu_A - kappa sigma_A, relative");
}

std::vector<CheckResult> check_path_residuals(const EquilibriumPathSet& paths,
                                              const VerifyOptions& opt) {
  const std::size_t np = paths.size();
  if (np == 0) throw InvalidParameter("residual checks need at least one path");
  const double dt = paths.dt();
  std::vector<double> id(np), ra(np), rs(np), rx(np);
  paths.for_each([&](std::size_t k, const EquilibriumPath& p) {
    const auto db = paths.increments(k);
    double w_id = 0.0, w_a = 0.0, w_s = 0.0, w_x = 0.0;
    double x_sf = p.x1[0];
    for (std::size_t n = 0; n < p.t.size(); ++n) {
      w_id = std::max(w_id, std::abs(p.mu_s[n] - p.kappa[n] * p.sigma_s[n]) /
                                (1.0 + std::abs(p.mu_s[n])));
      w_id = std::max(w_id, std::abs(p.r[n] - (p.mu_a[n] - p.kappa[n] * p.sigma_a[n])) /
                                (1.0 + std::abs(p.r[n])));
      w_x = std::max(w_x, std::abs(p.x1[n] - x_sf));
      if (n + 1 == p.t.size()) break;
      const double w = db[n];
      const double da = p.annuity[n + 1] - p.annuity[n];
      const double ds = p.stock[n + 1] - p.stock[n];
      const double pa = (-1.0 + p.annuity[n] * p.mu_a[n]) * dt + p.annuity[n] * p.sigma_a[n] * w;
      const double ps = (-p.d[n] + p.mu_s[n] + p.stock[n] * p.mu_a[n]) * dt +
                        (p.sigma_s[n] + p.stock[n] * p.sigma_a[n]) * w;
      const double norm = dt + w * w;
      w_a = std::max(w_a, std::abs(da - pa) / norm);
      w_s = std::max(w_s, std::abs(ds - ps) / norm);
      x_sf += p.theta1[n] * (da + dt) + (ds + p.d[n] * dt) - p.c1[n] * dt;
    }
    id[k] = w_id;
    ra[k] = w_a;
    rs[k] = w_s;
    rx[k] = w_x;
  });
  return {make_check("identities_paths", max_of(id), opt.identity_tol, np),
          make_check("dynamics_annuity", max_of(ra), opt.dynamics_c, np,
                     "max |dA - Euler prediction| / (dt + dB^2)"),
          make_check("dynamics_stock", max_of(rs), opt.dynamics_c, np,
                     "max |dS - Euler prediction| / (dt + dB^2)"),
          make_check("wealth1_self_financing", max_of(rx), opt.wealth_c * dt, np,
                     "max |X1 integral form - self-financing recursion|; threshold " +
                         fmt(opt.wealth_c) + " * dt")};
}

double utility(double alpha, double rho, double t, double c) {
  return -std::exp(-rho * t - alpha * c);
}

double conjugate_utility(double alpha, double rho, double t, double y) {
  const double q = y / alpha;
  return q * (std::log(q) + rho * t - 1.0);
}

std::vector<Perturbation> perturbation_menu(double horizon, double delta, double eps) {
  std::vector<Perturbation> menu;
  for (int agent : {1, 2}) {
    const std::string tag = "agent" + std::to_string(agent);
    menu.push_back({tag + "_consumption_up", agent, PerturbationKind::consumption_shift, delta,
                    0.0, 0.5 * horizon});
    menu.push_back({tag + "_consumption_down", agent, PerturbationKind::consumption_shift, -delta,
                    0.0, 0.5 * horizon});
    menu.push_back(
        {tag + "_holding_bump", agent, PerturbationKind::holding_bump, eps, 0.0, horizon});
  }
  return menu;
}

void check_admissible(const Perturbation& p, double horizon) {
  std::string reason;
  if (p.agent != 1 && p.agent != 2) {
    reason = "agent must be 1 or 2";
  } else if (!std::isfinite(p.size)) {
    reason = "size is not finite";
  } else if (p.kind == PerturbationKind::holding_bump && std::abs(p.size) > 10.0) {
    reason = "holding bump exceeds the bounded-holdings limit 10";
  } else if (!(p.t0 >= 0.0 && p.t0 < p.t1 && p.t1 <= horizon)) {
    reason = "window must satisfy 0 <= t0 < t1 <= T";
  }
  if (!reason.empty()) throw InvalidParameter("rejected perturbation '" + p.name + "': " + reason);
}

namespace {

double bump(double t, double horizon) {
  const double s = std::sin(std::numbers::pi * t / horizon);
  return s * s;
}

// Expected-utility functional of one path under the feedback rule of the
// candidate optimum, optionally perturbed. Consumption is held over each step
// and terminal wealth is consumed at T.
double path_utility(const EquilibriumPath& p, const MarketModel& m, const Perturbation* pert) {
  const int agent = pert ? pert->agent : 0;
  const std::size_t n_steps = p.n_steps();
  const double dt = p.t[1] - p.t[0];
  const double horizon = p.t.back();
  const bool one = agent == 1;
  const double alpha = one ? m.agent1.alpha : m.agent2.alpha;
  const double rho = one ? m.agent1.rho : m.agent2.rho;

  double x = one ? p.x1[0] : p.x2[0];
  double total = 0.0;
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double t = p.t[n];
    const double q = x / p.annuity[n];
    double psi = one ? 1.0 : 0.0;
    double c = p.a[n] / alpha + q + (one ? p.y1[n] : p.y2[n]);
    if (pert && pert->size != 0.0) {
      if (pert->kind == PerturbationKind::consumption_shift) {
        if (t >= pert->t0 && t < pert->t1) c += pert->size;
      } else if (one) {
        psi += pert->size * bump(t, horizon);
      } else {
        c -= pert->size * p.annuity[n] * (bump(p.t[n + 1], horizon) - bump(t, horizon)) / dt;
      }
    }
    const double theta = (x - psi * p.stock[n]) / p.annuity[n];
    total += utility(alpha, rho, t, c) * dt;
    x += theta * (p.annuity[n + 1] - p.annuity[n] + dt) +
         psi * (p.stock[n + 1] - p.stock[n] + p.d[n] * dt) - c * dt;
  }
  return total + utility(alpha, rho, horizon, x);
}

}  // namespace

UtilityComparison compare_utility(const EquilibriumPathSet& paths, const Perturbation& p,
                                  Execution exec) {
  check_admissible(p, paths.model().horizon);
  const std::size_t np = paths.size();
  std::vector<double> diff(np), cand(np);
  Perturbation zero = p;
  zero.size = 0.0;
  paths.for_each(
      [&](std::size_t k, const EquilibriumPath& path) {
        const double c = path_utility(path, paths.model(), &zero);
        cand[k] = c;
        diff[k] = path_utility(path, paths.model(), &p) - c;
      },
      exec);
  return {mc_estimate(diff), mc_estimate(cand)};
}

McEstimate feynman_kac_y1(const StateSampler& sampler, const MarketModel& model,
                          std::size_t n_paths, std::uint64_t seed, std::size_t* excluded,
                          Execution exec) {
  const std::size_t n_steps = sampler.n_steps();
  const double dt = sampler.dt();
  const double sqrt_dt = std::sqrt(dt);
  const double a1 = model.agent1.alpha;
  const double rho1 = model.agent1.rho;
  const double as = model.alpha_sigma();
  const Philox4x32 gen(seed);
  std::vector<double> value(n_paths, 0.0);
  std::vector<char> inside(n_paths, 1);

  auto one = [&](std::size_t p) {
    double d = model.d0;
    double disc_int = 0.0;  // int_0^t 1 / A
    double prev_inv_a = 0.0, prev_g = 0.0, acc = 0.0;
    for (std::size_t n = 0; n <= n_steps; ++n) {
      if (!sampler.contains(d)) {
        inside[p] = 0;
        return;
      }
      const double t = dt * static_cast<double>(n);
      const BsdeState s = sampler.at_node(n, d);
      const double annuity = std::exp(s.a);
      const double sd = model.sigma(t, d);
      const double load = 1.0 - s.z2 - s.z_a / as;
      const double h = -rho1 / a1 + (1.0 + s.a) / (a1 * annuity) -
                       0.5 * a1 * sd * sd * load * load;
      const double inv_a = 1.0 / annuity;
      if (n > 0) disc_int += 0.5 * dt * (prev_inv_a + inv_a);
      const double g = std::exp(-disc_int) * h;
      if (n > 0) acc += 0.5 * dt * (prev_g + g);
      prev_inv_a = inv_a;
      prev_g = g;
      if (n == n_steps) break;
      const double drift = model.mu(t, d) - a1 * sd * sd * load;
      d += drift * dt + sd * sqrt_dt * normal_draw(gen, Stream::feynman_kac, p, n);
    }
    value[p] = -acc;
  };
  const auto count = static_cast<std::ptrdiff_t>(n_paths);
  if (exec == Execution::serial) {
    for (std::ptrdiff_t p = 0; p < count; ++p) one(static_cast<std::size_t>(p));
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < count; ++p) one(static_cast<std::size_t>(p));
  }
  std::vector<double> kept;
  kept.reserve(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) {
    if (inside[p]) kept.push_back(value[p]);
  }
  if (excluded) *excluded = n_paths - kept.size();
  return mc_estimate(kept);
}

std::vector<CheckResult> check_optimality(const EquilibriumPathSet& paths,
                                          const VerifyOptions& opt) {
  const std::size_t np = paths.size();
  if (np < opt.min_paths) {
    throw InvalidParameter("optimality checks need at least " + std::to_string(opt.min_paths) +
                           " paths, got " + std::to_string(np));
  }
  const MarketModel& m = paths.model();
  const double dt = paths.dt();
  const double a1 = m.agent1.alpha, r1 = m.agent1.rho;
  const double a2 = m.agent2.alpha, r2 = m.agent2.rho;
  const double allowance = opt.discretization_c * dt;
  const double k = opt.se_multiplier;
  std::vector<CheckResult> out;

  // (a) duality gap and (c) V2 at the checkpoints, one pass over the paths.
  std::vector<std::size_t> cps;
  for (double f : opt.checkpoints) cps.push_back(checkpoint_index(f, paths.n_steps()));
  std::vector<double> gap(np);
  std::vector<std::vector<double>> v2(cps.size(), std::vector<double>(np));
  paths.for_each([&](std::size_t kp, const EquilibriumPath& p) {
    const std::size_t len = p.t.size();
    const std::size_t last = len - 1;
    std::vector<double> u(len), ut(len), e2(len), iv;
    for (std::size_t n = 0; n < len; ++n) {
      u[n] = utility(a1, r1, p.t[n], p.c1[n]);
      ut[n] = conjugate_utility(a1, r1, p.t[n], p.xi[n]);
      e2[n] = std::exp(-a2 * p.c2[n] - r2 * p.t[n]);
    }
    const double primal = trapezoid(u, dt) + utility(a1, r1, p.t[last], p.x1[last]);
    const double dual = trapezoid(ut, dt) + conjugate_utility(a1, r1, p.t[last], p.xi[last]);
    gap[kp] = primal - dual - p.xi[0] * p.x1[0];

    cumulative_trapezoid(e2, dt, iv);
    auto v2_at = [&](std::size_t n) {
      return -std::exp(-a2 * (p.theta2[n] + p.y2[n]) - r2 * p.t[n]) - iv[n];
    };
    const double v0 = v2_at(0);
    for (std::size_t c = 0; c < cps.size(); ++c) v2[c][kp] = v2_at(cps[c]) - v0;
  });
  {
    const McEstimate e = mc_estimate(gap);
    out.push_back(make_check("duality_gap", std::abs(e.mean), k * e.se, np,
                             "gap=" + fmt(e.mean) + " se=" + fmt(e.se)));
  }
  {
    double worst = -std::numeric_limits<double>::infinity();
    std::ostringstream det;
    for (std::size_t c = 0; c < cps.size(); ++c) {
      const McEstimate e = mc_estimate(v2[c]);
      worst = std::max(worst, std::abs(e.mean) - k * e.se);
      det << (c ? "; " : "") << "t=" << fmt(dt * static_cast<double>(cps[c]))
          << " mean=" << fmt(e.mean) << " se=" << fmt(e.se);
    }
    out.push_back(make_check("martingale_value2", worst, allowance, np,
                             "max(|mean| - " + fmt(k) + " se) over checkpoints, threshold " +
                                 fmt(opt.discretization_c) + " * dt; " + det.str()));
  }

  // (b) perturbation menu.
  for (const auto& pert : perturbation_menu(m.horizon, opt.perturb_delta, opt.perturb_eps)) {
    const UtilityComparison cmp = compare_utility(paths, pert);
    const double excess = cmp.difference.mean - k * cmp.difference.se;
    const bool strictly_lower = cmp.difference.mean + k * cmp.difference.se < 0.0;
    out.push_back(make_check("perturbation_" + pert.name, excess, 0.0, np,
                             "perturbed - candidate = " + fmt(cmp.difference.mean) +
                                 " se=" + fmt(cmp.difference.se) +
                                 (strictly_lower ? " (strictly lower)" : "")));
  }

  // (d) y1 Feynman-Kac under the drift-shifted dividend.
  {
    std::size_t excluded = 0;
    const McEstimate e = feynman_kac_y1(paths.sampler(), m, opt.fk_paths, opt.seed, &excluded);
    const double y1_0 = paths.sampler().at_node(0, m.d0).y1;
    out.push_back(make_check("feynman_kac_y1", std::abs(e.mean - y1_0) - k * e.se, allowance, e.n,
                             "y1(0,D0)=" + fmt(y1_0) + " representation=" + fmt(e.mean) +
                                 " se=" + fmt(e.se) + " excluded=" + std::to_string(excluded) +
                                 "; statistic |diff| - " + fmt(k) + " se, threshold " +
                                 fmt(opt.discretization_c) + " * dt"));
  }
  return out;
}

std::vector<CheckResult> check_pe_inequalities(const MarketModel& model) {
  const MarketConstants c = closed_form_constants(model);
  return {make_check("pe_kappa_margin", c.kappa - c.kappa_pe, 0.0, 1,
                     "kappa=" + fmt(c.kappa) + " kappa_pe=" + fmt(c.kappa_pe),
                     Comparison::greater_than),
          make_check("pe_rate_margin", c.r_pe - c.r, 0.0, 1,
                     "r=" + fmt(c.r) + " r_pe=" + fmt(c.r_pe), Comparison::greater_than)};
}

namespace {

std::vector<CheckResult> bound_checks(const MarketModel& model, double sup_mu, double min_a,
                                      double max_y2, std::size_t n, const VerifyOptions& opt) {
  const double lb = a_lower_bound(model, sup_mu);
  const GronwallBound gb = y2_gronwall_bound(model, sup_mu);
  return {make_check("a_lower_bound", min_a, lb - opt.bound_tol, n,
                     "min a=" + fmt(min_a) + " bound=" + fmt(lb) + " (C = alpha_S sup|mu_D| + "
                                                                    "rho_S)",
                     Comparison::at_least),
          make_check("y2_gronwall_bound", max_y2, gb.bound, n,
                     "max |y2|=" + fmt(max_y2) + " c1=" + fmt(gb.c1) + " c2=" + fmt(gb.c2) +
                         " K=" + fmt(gb.k))};
}

}  // namespace

std::vector<CheckResult> check_benchmarks(const MarketModel& model,
                                          const TruncatedSolution& solution,
                                          const VerifyOptions& opt) {
  const SolutionField& f = solution.field;
  std::vector<CheckResult> out;
  if (model.is_constant()) out = check_pe_inequalities(model);
  const double sup_mu = sup_abs_mu(model, grid_probe_mesh(f.grid));
  double min_a = std::numeric_limits<double>::infinity(), max_y2 = 0.0;
  for (double a : f.a) min_a = std::min(min_a, a);
  for (double y : f.y2) max_y2 = std::max(max_y2, std::abs(y));
  for (auto& c : bound_checks(model, sup_mu, min_a, max_y2, f.a.size(), opt)) {
    out.push_back(std::move(c));
  }
  out.push_back(make_check("truncation_level", solution.config.n0, solution.config.n_max, 1,
                           "N0=" + fmt(solution.config.n0)));
  out.push_back(make_check("truncation_doubling", solution.doubling_change, opt.doubling_tol, 1,
                           "max change from N0 to 2 N0"));
  return out;
}

std::vector<CheckResult> check_benchmarks(const MarketModel& model,
                                          const ConstantSolution& solution,
                                          const VerifyOptions& opt) {
  std::vector<CheckResult> out = check_pe_inequalities(model);
  double min_a = std::numeric_limits<double>::infinity(), max_y2 = 0.0;
  for (double a : solution.a) min_a = std::min(min_a, a);
  for (double y : solution.y2) max_y2 = std::max(max_y2, std::abs(y));
  for (auto& c : bound_checks(model, std::abs(model.dividend.mu0), min_a, max_y2,
                              solution.a.size(), opt)) {
    out.push_back(std::move(c));
  }
  return out;
}

CheckResult check_backend_agreement(const SolutionField& field, const ConstantSolution& ode,
                                    const MarketModel& model, double tol) {
  const BsdeState s = sample_field(field, 0.0, model.d0);
  const double da = std::abs(s.a - ode.a[0]);
  const double d1 = std::abs(s.y1 - ode.y1[0]);
  const double d2 = std::abs(s.y2 - ode.y2[0]);
  return make_check("backend_agreement", std::max({da, d1, d2}), tol, 1,
                    "|diff| a, y1, y2 at (0, D0): " + fmt(da) + ", " + fmt(d1) + ", " + fmt(d2));
}

CheckResult check_ui_surrogate(const EquilibriumPathSet& paths) {
  const std::size_t np = paths.size();
  std::vector<double> peak(np);
  paths.for_each([&](std::size_t k, const EquilibriumPath& p) {
    double m = 0.0;
    for (std::size_t n = 0; n < p.t.size(); ++n) m = std::max(m, std::abs(p.xi[n] * p.stock[n]));
    peak[k] = m;
  });
  const McEstimate e = mc_estimate(peak);
  std::vector<double> sorted = peak;
  std::sort(sorted.begin(), sorted.end());
  const double q999 = sorted.empty() ? 0.0 : sorted[(sorted.size() - 1) * 999 / 1000];
  const double ratio = e.mean > 0.0 ? q999 / e.mean : 0.0;
  CheckResult r = make_check("ui_surrogate", ratio, std::numeric_limits<double>::max(), np,
                             "surrogate: q99.9 / mean of max_t |xi S|; mean=" + fmt(e.mean) +
                                 " q99.9=" + fmt(q999) + " max=" +
                                 fmt(sorted.empty() ? 0.0 : sorted.back()));
  r.mandatory = false;
  return r;
}

}  // namespace lpeq
