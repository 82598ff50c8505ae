#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lpeq/field_solver.hpp"
#include "lpeq/market_model.hpp"

namespace lpeq {

struct McConfig {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 0;
  std::vector<double> checkpoints{0.25, 0.5, 0.75, 1.0};  // fractions of the horizon
};

struct OutputConfig {
  std::string directory;  // empty: --out, then LPEQ_OUT_DIR, then "lpeq_out"
  bool csv = true;
  bool json = true;
  std::size_t export_paths = 16;  // paths written to paths.csv
};

struct VerifyConfig {
  std::size_t fk_paths = 10000;
  double perturb_delta = 0.1;
  double perturb_eps = 0.1;
  double se_multiplier = 3.0;
  std::size_t min_paths = 1000;
};

struct RunConfig {
  MarketModel model;
  GridSpec grid;
  McConfig mc;
  TruncationConfig truncation;
  OutputConfig output;
  VerifyConfig verify;
  /// Compact JSON of the effective config (defaults filled in, keys sorted).
  std::string canonical;
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw
/// ConfigError whose message starts with the dotted field path.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& file);

/// Recomputes cfg.canonical after programmatic edits (seed overrides etc).
void refresh_canonical(RunConfig& cfg);

}  // namespace lpeq
