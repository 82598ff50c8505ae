#include "lpeq/dividend_paths.hpp"

#include <cmath>

#include "lpeq/error.hpp"
#include "lpeq/rng.hpp"

namespace lpeq {

DividendPaths::DividendPaths(std::vector<double> times, std::size_t n_paths, std::uint64_t seed)
    : times_(std::move(times)), n_paths_(n_paths), seed_(seed) {
  if (times_.size() < 2 || n_paths_ == 0) {
    throw InvalidParameter("dividend paths need at least one step and one path");
  }
  levels_.assign(n_paths_ * times_.size(), 0.0);
  increments_.assign(n_paths_ * (times_.size() - 1), 0.0);
}

std::vector<double> uniform_times(double horizon, std::size_t n_steps) {
  std::vector<double> times(n_steps + 1);
  const double dt = horizon / static_cast<double>(n_steps);
  for (std::size_t n = 0; n <= n_steps; ++n) times[n] = dt * static_cast<double>(n);
  times[n_steps] = horizon;
  return times;
}

void euler_dividend_path(const MarketModel& model, std::span<const double> times,
                         std::span<const double> increments, std::span<double> levels) {
  levels[0] = model.d0;
  for (std::size_t n = 0; n + 1 < times.size(); ++n) {
    const double dt = times[n + 1] - times[n];
    const double d = levels[n];
    levels[n + 1] = d + model.mu(times[n], d) * dt + model.sigma(times[n], d) * increments[n];
  }
}

namespace {

void fill_path(const MarketModel& model, const Philox4x32& gen, DividendPaths& out,
               std::size_t p) {
  const auto times = out.times();
  auto inc = out.increment(p);
  for (std::size_t n = 0; n < inc.size(); ++n) {
    const double sqrt_dt = std::sqrt(times[n + 1] - times[n]);
    inc[n] = sqrt_dt * normal_draw(gen, Stream::dividend, p, n);
  }
  euler_dividend_path(model, times, inc, out.level(p));
}

}  // namespace

DividendPaths simulate_dividend_paths(const MarketModel& model, std::size_t n_steps,
                                      std::size_t n_paths, std::uint64_t seed, Execution exec) {
  if (n_steps < 1 || n_paths < 1) {
    throw InvalidParameter("n_steps and n_paths must be at least 1");
  }
  DividendPaths out(uniform_times(model.horizon, n_steps), n_paths, seed);
  const Philox4x32 gen(seed);
  const auto count = static_cast<std::ptrdiff_t>(n_paths);
  if (exec == Execution::serial) {
    for (std::ptrdiff_t p = 0; p < count; ++p) fill_path(model, gen, out, p);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < count; ++p) fill_path(model, gen, out, p);
  }
  return out;
}

}  // namespace lpeq
