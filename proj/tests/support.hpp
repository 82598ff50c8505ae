#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "lpeq/market_model.hpp"

namespace lpeq::testing {

// alpha1 = alpha2 = 2, rho = 0, mu_D = 0, sigma_D = 1.
inline MarketModel pstar() {
  MarketModel m;
  m.agent1 = {2.0, 0.0, 0.5};
  m.agent2 = {2.0, 0.0, 0.5};
  m.horizon = 1.0;
  m.d0 = 0.0;
  m.dividend = DividendCoefficients::constant(0.0, 1.0);
  m.bound_m = 2.0;
  return m;
}

inline MarketModel tanh_model() {
  MarketModel m = pstar();
  m.agent1.rho = 0.05;
  m.agent2.rho = 0.1;
  m.dividend = DividendCoefficients::tanh_bounded(0.1, 0.2, 1.0, 0.4);
  return m;
}

inline std::string config_path(const std::string& name) {
  return std::string(LPEQ_CONFIG_DIR) + "/" + name;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("lpeq_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace lpeq::testing
