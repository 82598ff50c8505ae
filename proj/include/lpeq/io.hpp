#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lpeq/equilibrium.hpp"
#include "lpeq/field_solver.hpp"
#include "lpeq/ode_solver.hpp"
#include "lpeq/verification.hpp"

namespace lpeq {

/// Shortest representation that parses back to the same double.
std::string format_double(double x);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t h);

void write_text_file(const std::filesystem::path& file, std::string_view content);
std::string read_text_file(const std::filesystem::path& file);

/// One value field: header "t" followed by the node levels, one row per time.
std::string field_csv(const SolutionField& field, const std::vector<double>& values);

/// t, a, y1, y2 for the constant backend.
std::string ode_csv(const ConstantSolution& solution);

/// Leading path column then t, D, A, S, kappa, sigma_A, mu_A, sigma_S, mu_S, r,
/// X1, X2, c1, c2, theta1, theta2, xi for the first n_export paths.
std::string paths_csv(const EquilibriumPathSet& paths, std::size_t n_export);

/// Check name, statistic, threshold, comparison, pass, samples, details.
std::string report_json(const VerificationReport& report);
/// Fixed-width table for the terminal.
std::string report_table(const VerificationReport& report);

}  // namespace lpeq
