#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lpeq/config.hpp"
#include "lpeq/dividend_paths.hpp"
#include "lpeq/equilibrium.hpp"
#include "lpeq/field_solver.hpp"
#include "lpeq/ode_solver.hpp"
#include "lpeq/verification.hpp"

namespace lpeq {

/// Stable exit-code contract.
enum ExitCode : int {
  exit_ok = 0,
  exit_internal = 1,
  exit_config = 2,
  exit_divergence = 3,
  exit_assumption = 4,
  exit_verify_failed = 5,
};

/// Maps the library error hierarchy onto exit codes.
int exit_code_for(const std::exception& e);

/// Everything one command needs, kept alive together because the path set
/// refers to the sampler and the dividend paths.
struct Pipeline {
  RunConfig config;
  Grid grid;
  std::unique_ptr<ConstantSolution> ode;
  std::unique_ptr<TruncatedSolution> field;
  std::unique_ptr<StateSampler> sampler;
  std::unique_ptr<DividendPaths> dividends;
  std::unique_ptr<EquilibriumPathSet> paths;

  /// "ode" for constant models, "field" otherwise.
  std::string backend() const { return ode ? "ode" : "field"; }
};

/// Validates the model on the grid nodes, solves with the backend matching the
/// model (the field is also solved for constant models when with_field is set),
/// simulates mc.n_paths dividend paths and the equilibrium along them.
std::unique_ptr<Pipeline> build_pipeline(const RunConfig& config, bool with_field,
                                         SimulationOptions sim = {});

/// Writes field dumps, paths.csv, summary.json and manifest.json.
void run_solve(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

/// Runs the full battery, writes report.json, report.txt and manifest.json.
VerificationReport run_verify(const RunConfig& config, const std::filesystem::path& out_dir,
                              double kappa_scale, std::ostream& log);

struct ComparisonRow {
  std::string quantity;
  double value;
  double benchmark;
  double benchmark_se;  // zero when the benchmark is exact
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;  // kappa, r, A0, S0 at (0, D0)
  bool kappa_above_pe = false;
  bool rate_below_pe = false;
};

ComparisonTable run_compare(const RunConfig& config, const std::filesystem::path& out_dir,
                            std::ostream& log);

/// Output directory precedence: --out, config output.directory, LPEQ_OUT_DIR, "lpeq_out".
std::filesystem::path resolve_out_dir(const std::optional<std::string>& flag,
                                      const RunConfig& config);

/// Parses argv, dispatches, and returns the exit code. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lpeq
