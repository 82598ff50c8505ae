#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lpeq/execution.hpp"
#include "lpeq/market_model.hpp"

namespace lpeq {

/// Euler-Maruyama dividend paths on a uniform grid. Row-major storage:
/// level(p)[n] = D at t_n on path p, increment(p)[n] = dB over [t_n, t_{n+1}].
class DividendPaths {
 public:
  DividendPaths(std::vector<double> times, std::size_t n_paths, std::uint64_t seed);

  std::size_t n_paths() const { return n_paths_; }
  std::size_t n_steps() const { return times_.size() - 1; }
  double dt() const { return times_[1] - times_[0]; }
  std::uint64_t seed() const { return seed_; }
  std::span<const double> times() const { return times_; }

  std::span<const double> level(std::size_t path) const {
    return {levels_.data() + path * (n_steps() + 1), n_steps() + 1};
  }
  std::span<const double> increment(std::size_t path) const {
    return {increments_.data() + path * n_steps(), n_steps()};
  }
  std::span<double> level(std::size_t path) {
    return {levels_.data() + path * (n_steps() + 1), n_steps() + 1};
  }
  std::span<double> increment(std::size_t path) {
    return {increments_.data() + path * n_steps(), n_steps()};
  }

 private:
  std::vector<double> times_;
  std::size_t n_paths_;
  std::uint64_t seed_;
  std::vector<double> levels_;
  std::vector<double> increments_;
};

std::vector<double> uniform_times(double horizon, std::size_t n_steps);

/// D_{n+1} = D_n + mu_D(t_n, D_n) dt + sigma_D(t_n, D_n) dB_n with
/// dB_n = sqrt(dt) * normal_draw(seed, dividend stream, path, n).
DividendPaths simulate_dividend_paths(const MarketModel& model, std::size_t n_steps,
                                      std::size_t n_paths, std::uint64_t seed,
                                      Execution exec = Execution::parallel);

/// Re-runs the Euler recursion for one path from externally supplied increments.
void euler_dividend_path(const MarketModel& model, std::span<const double> times,
                         std::span<const double> increments, std::span<double> levels);

}  // namespace lpeq
