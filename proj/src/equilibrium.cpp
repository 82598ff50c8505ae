#include "lpeq/equilibrium.hpp"

#include <cmath>
#include <sstream>

#include "lpeq/error.hpp"

namespace lpeq {

Prices prices_at(double alpha_sigma, const BsdeState& s, double d) {
  const double annuity = std::exp(s.a);
  return {annuity, annuity * (d - s.a / alpha_sigma - s.y1 - s.y2)};
}

MarketCoefficients coefficients_at(const MarketModel& model, const BsdeState& s, double t,
                                   double d) {
  const double a1 = model.agent1.alpha;
  const double a2 = model.agent2.alpha;
  const auto agg = aggregate_preferences(a1, model.agent1.rho, a2, model.agent2.rho);
  const double as = agg.alpha_sigma;
  const double sd = model.sigma(t, d);
  const double md = model.mu(t, d);
  const double annuity = std::exp(s.a);

  MarketCoefficients c;
  c.kappa = a1 * sd * (1.0 - s.z_a / a2 - s.z2);
  c.sigma_a = sd * s.z_a;
  const double gap = c.kappa - c.sigma_a;
  c.mu_a = as * md + agg.rho_sigma + 0.5 * c.sigma_a * c.sigma_a -
           0.5 * as * (a2 * sd * sd * s.z2 * s.z2 + gap * gap / a1);
  c.sigma_s = annuity * sd * (1.0 - s.z_a / as - s.z1 - s.z2);
  c.mu_s = c.sigma_s * (c.sigma_a + a1 * sd * s.z1 + a1 * c.sigma_s / annuity);
  c.r = c.mu_a - c.kappa * c.sigma_a;
  return c;
}

EquilibriumPathSet::EquilibriumPathSet(const StateSampler& sampler, const MarketModel& model,
                                       const DividendPaths& dividends, SimulationOptions options)
    : sampler_(sampler), model_(model), dividends_(dividends), options_(options) {
  if (dividends.n_steps() != sampler.n_steps() ||
      std::abs(dividends.times().back() - sampler.horizon()) > 1e-12 * sampler.horizon()) {
    std::ostringstream os;
    os << "dividend paths use " << dividends.n_steps() << " steps on [0, "
       << dividends.times().back() << "] but the solution has " << sampler.n_steps()
       << " steps on [0, " << sampler.horizon() << "]";
    throw InvalidParameter(os.str());
  }
  for (std::size_t p = 0; p < dividends.n_paths(); ++p) {
    bool inside = true;
    for (double d : dividends.level(p)) {
      if (!sampler.contains(d)) {
        inside = false;
        break;
      }
    }
    if (inside) included_.push_back(p);
  }
  const std::size_t excluded = dividends.n_paths() - included_.size();
  if (static_cast<double>(excluded) >
      options.max_excluded_fraction * static_cast<double>(dividends.n_paths())) {
    std::ostringstream os;
    os << excluded << " of " << dividends.n_paths()
       << " dividend paths leave the solver grid; widen the grid (coverage_k)";
    throw GridCoverageError(os.str());
  }
}

EquilibriumPath EquilibriumPathSet::path(std::size_t k) const {
  const std::size_t p = included_[k];
  const auto times = dividends_.times();
  const auto levels = dividends_.level(p);
  const auto db = dividends_.increment(p);
  const std::size_t n_steps = dividends_.n_steps();
  const std::size_t len = n_steps + 1;
  const double dt = dividends_.dt();

  const MarketModel& m = model_;
  const double a1 = m.agent1.alpha;
  const double a2 = m.agent2.alpha;
  const double as = m.alpha_sigma();

  EquilibriumPath out;
  for (auto* v : {&out.t, &out.d, &out.annuity, &out.stock, &out.kappa, &out.sigma_a, &out.mu_a,
                  &out.sigma_s, &out.mu_s, &out.r, &out.x1, &out.x2, &out.c1, &out.c2,
                  &out.theta1, &out.theta2, &out.xi, &out.a, &out.y1, &out.y2}) {
    v->resize(len);
  }

  double q1 = 0.0;  // X1 / A
  double q2 = 0.0;  // X2 / A
  for (std::size_t n = 0; n < len; ++n) {
    const double t = times[n];
    const double d = levels[n];
    const BsdeState s = sampler_.at_node(n, d);
    const Prices pr = prices_at(as, s, d);
    MarketCoefficients co = coefficients_at(m, s, t, d);
    if (options_.kappa_scale != 1.0) {
      co.kappa *= options_.kappa_scale;
      co.r = co.mu_a - co.kappa * co.sigma_a;
    }

    if (n == 0) {
      q1 = m.agent1.theta0 + pr.stock / pr.annuity;
      q2 = m.agent2.theta0;
    }

    out.t[n] = t;
    out.d[n] = d;
    out.a[n] = s.a;
    out.y1[n] = s.y1;
    out.y2[n] = s.y2;
    out.annuity[n] = pr.annuity;
    out.stock[n] = pr.stock;
    out.kappa[n] = co.kappa;
    out.sigma_a[n] = co.sigma_a;
    out.mu_a[n] = co.mu_a;
    out.sigma_s[n] = co.sigma_s;
    out.mu_s[n] = co.mu_s;
    out.r[n] = co.r;
    out.x1[n] = pr.annuity * q1;
    out.x2[n] = pr.annuity * q2;
    out.c1[n] = s.a / a1 + q1 + s.y1;
    out.c2[n] = s.a / a2 + q2 + s.y2;
    out.theta1[n] = q1 - pr.stock / pr.annuity;
    out.theta2[n] = q2;

    if (options_.kappa_scale == 1.0) {
      out.xi[n] = a1 * std::exp(-m.agent1.rho * t - a1 * out.c1[n]);
    } else if (n == 0) {
      out.xi[0] = a1 * std::exp(-a1 * out.c1[0]);
    }

    if (n == n_steps) break;

    const double inv_a = 1.0 / pr.annuity;
    const double w = db[n];
    q1 += dt * inv_a * (-s.a / a1 - s.y1 + co.mu_s - co.sigma_s * co.sigma_a) +
          co.sigma_s * inv_a * w;
    if (options_.milstein) {
      // Along the Euler chain sigma_D is frozen over the step, so only the
      // slope of the load 1 - z_a / alpha_S - z1 - z2 enters.
      const double sd = m.sigma(t, d);
      const auto slope = sampler_.z_slope(n, d);
      const double dload = -(slope[0] / as + slope[1] + slope[2]);
      q1 += 0.5 * sd * dload * sd * (w * w - dt);
    }
    q2 -= dt * inv_a * (s.a / a2 + s.y2);

    if (options_.kappa_scale != 1.0) {
      out.xi[n + 1] =
          out.xi[n] * std::exp(-(co.r + 0.5 * co.kappa * co.kappa) * dt - co.kappa * w);
    }
  }
  return out;
}

EquilibriumPathSet simulate_equilibrium(const StateSampler& sampler, const MarketModel& model,
                                        const DividendPaths& dividends,
                                        SimulationOptions options) {
  return EquilibriumPathSet(sampler, model, dividends, options);
}

McEstimate mc_estimate(std::span<const double> samples) {
  McEstimate e;
  e.n = samples.size();
  if (e.n == 0) return e;
  double sum = 0.0;
  for (double x : samples) sum += x;
  e.mean = sum / static_cast<double>(e.n);
  if (e.n > 1) {
    double ss = 0.0;
    for (double x : samples) ss += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
  }
  return e;
}

double pareto_deflator(const MarketModel& model, double t, double d) {
  const double as = model.alpha_sigma();
  return as * std::exp(-model.rho_sigma() * t - as * (1.0 + d));
}

double pareto_rate(const MarketModel& model, double t, double d) {
  const double as = model.alpha_sigma();
  const double sd = model.sigma(t, d);
  return model.rho_sigma() + as * model.mu(t, d) - 0.5 * as * as * sd * sd;
}

double pareto_kappa(const MarketModel& model, double t, double d) {
  return model.alpha_sigma() * model.sigma(t, d);
}

double trapezoid(std::span<const double> values, double dt) {
  if (values.size() < 2) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return dt * (sum - 0.5 * (values.front() + values.back()));
}

ParetoBenchmark pareto_benchmark(const MarketModel& model, const DividendPaths& dividends,
                                 double gamma, Execution exec) {
  const std::size_t n_paths = dividends.n_paths();
  const std::size_t len = dividends.n_steps() + 1;
  const auto times = dividends.times();
  const double dt = dividends.dt();
  std::vector<double> a_samples(n_paths), s_samples(n_paths);

  auto one = [&](std::size_t p) {
    const auto levels = dividends.level(p);
    const double xi0 = pareto_deflator(model, 0.0, levels[0]);
    std::vector<double> w(len), wd(len);
    for (std::size_t n = 0; n < len; ++n) {
      w[n] = pareto_deflator(model, times[n], levels[n]) / xi0;
      wd[n] = w[n] * levels[n];
    }
    a_samples[p] = trapezoid(w, dt) + w.back();
    s_samples[p] = trapezoid(wd, dt) + wd.back();
  };
  const auto count = static_cast<std::ptrdiff_t>(n_paths);
  if (exec == Execution::serial) {
    for (std::ptrdiff_t p = 0; p < count; ++p) one(static_cast<std::size_t>(p));
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < count; ++p) one(static_cast<std::size_t>(p));
  }

  ParetoBenchmark b;
  b.gamma = gamma;
  b.r_pe0 = pareto_rate(model, 0.0, model.d0);
  b.kappa_pe0 = pareto_kappa(model, 0.0, model.d0);
  b.annuity0 = mc_estimate(a_samples);
  b.stock0 = mc_estimate(s_samples);
  return b;
}

}  // namespace lpeq
