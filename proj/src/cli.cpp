#include "lpeq/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lpeq/error.hpp"
#include "lpeq/io.hpp"

namespace lpeq {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "lpeq 0.1.0";

json num(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

json estimate(const McEstimate& e) { return {{"mean", num(e.mean)}, {"se", num(e.se)}, {"n", e.n}}; }

struct FileRecord {
  std::string name;
  std::string hash;
};

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {}
  void write(const std::string& name, const std::string& content) {
    write_text_file(dir_ / name, content);
    files_.push_back({name, hex64(fnv1a64(content))});
  }
  void manifest(const std::string& command, const RunConfig& cfg, json extra = json::object()) {
    json files = json::array();
    for (const auto& f : files_) files.push_back({{"name", f.name}, {"fnv1a64", f.hash}});
    json m = {{"command", command},
              {"version", kVersion},
              {"compiler", __VERSION__},
              {"config_hash", hex64(fnv1a64(cfg.canonical))},
              {"seed", cfg.mc.seed},
              {"config", json::parse(cfg.canonical)},
              {"files", files}};
    for (auto& [k, v] : extra.items()) m[k] = v;
    write_text_file(dir_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::vector<FileRecord> files_;
};

VerifyOptions verify_options(const RunConfig& cfg) {
  VerifyOptions o;
  o.checkpoints = cfg.mc.checkpoints;
  o.se_multiplier = cfg.verify.se_multiplier;
  o.min_paths = cfg.verify.min_paths;
  o.fk_paths = cfg.verify.fk_paths;
  o.perturb_delta = cfg.verify.perturb_delta;
  o.perturb_eps = cfg.verify.perturb_eps;
  o.seed = cfg.mc.seed;
  return o;
}

// Values of the solution and the market at (0, D0).
struct Origin {
  BsdeState state;
  Prices prices;
  MarketCoefficients coeffs;
};

Origin origin(const Pipeline& p) {
  const MarketModel& m = p.config.model;
  Origin o;
  o.state = p.sampler->at_node(0, m.d0);
  o.prices = prices_at(m.alpha_sigma(), o.state, m.d0);
  o.coeffs = coefficients_at(m, o.state, 0.0, m.d0);
  return o;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidParameter*>(&e)) {
    return exit_config;
  }
  if (dynamic_cast<const AssumptionViolation*>(&e)) return exit_assumption;
  if (dynamic_cast<const DivergenceError*>(&e) || dynamic_cast<const TruncationFailure*>(&e) ||
      dynamic_cast<const StepSizeError*>(&e) || dynamic_cast<const GridCoverageError*>(&e) ||
      dynamic_cast<const ExtrapolationError*>(&e) || dynamic_cast<const RangeError*>(&e)) {
    return exit_divergence;
  }
  return exit_internal;
}

std::unique_ptr<Pipeline> build_pipeline(const RunConfig& config, bool with_field,
                                         SimulationOptions sim) {
  auto p = std::make_unique<Pipeline>();
  p->config = config;
  const MarketModel& m = p->config.model;
  m.check_parameters();
  p->grid = Grid::covering(m, config.grid);
  validate_model(m, grid_probe_mesh(p->grid));

  if (m.is_constant()) {
    const std::size_t steps = std::max(config.grid.n_time, min_stable_steps(m));
    p->ode = std::make_unique<ConstantSolution>(solve_constant(m, steps));
    p->sampler = std::make_unique<ConstantSampler>(*p->ode, m.horizon);
  }
  if (!m.is_constant() || with_field) {
    p->field = std::make_unique<TruncatedSolution>(
        solve_with_truncation(m, p->grid, config.truncation));
    if (!p->sampler) p->sampler = std::make_unique<FieldSampler>(p->field->field);
  }
  p->dividends = std::make_unique<DividendPaths>(
      simulate_dividend_paths(m, p->sampler->n_steps(), config.mc.n_paths, config.mc.seed));
  p->paths = std::make_unique<EquilibriumPathSet>(*p->sampler, m, *p->dividends, sim);
  return p;
}

void run_solve(const RunConfig& config, const fs::path& out_dir, std::ostream& log) {
  const auto p = build_pipeline(config, false);
  const MarketModel& m = config.model;
  ArtifactWriter w(out_dir);

  if (config.output.csv) {
    if (p->ode) {
      w.write("ode.csv", ode_csv(*p->ode));
    } else {
      const SolutionField& f = p->field->field;
      w.write("field_a.csv", field_csv(f, f.a));
      w.write("field_y1.csv", field_csv(f, f.y1));
      w.write("field_y2.csv", field_csv(f, f.y2));
      w.write("field_z_a.csv", field_csv(f, f.z_a));
      w.write("field_z1.csv", field_csv(f, f.z1));
      w.write("field_z2.csv", field_csv(f, f.z2));
    }
    w.write("paths.csv", paths_csv(*p->paths, config.output.export_paths));
  }

  const Origin o = origin(*p);
  const auto clearing = check_clearing(*p->paths);
  const ParetoBenchmark pe = pareto_benchmark(m, *p->dividends);

  json summary = {
      {"backend", p->backend()},
      {"n_steps", p->sampler->n_steps()},
      {"dt", p->sampler->dt()},
      {"n_paths", p->paths->size()},
      {"excluded_paths", p->paths->excluded_count()},
      {"seed", config.mc.seed},
      {"S0", o.prices.stock},
      {"A0", o.prices.annuity},
      {"kappa0", o.coeffs.kappa},
      {"r0", o.coeffs.r},
      {"sigma_A0", o.coeffs.sigma_a},
      {"a0", o.state.a},
      {"y1_0", o.state.y1},
      {"y2_0", o.state.y2},
      {"benchmark",
       {{"gamma", pe.gamma},
        {"r_pe0", pe.r_pe0},
        {"kappa_pe0", pe.kappa_pe0},
        {"A0_pe", estimate(pe.annuity0)},
        {"S0_pe", estimate(pe.stock0)}}},
  };
  json clear = json::object();
  for (const auto& c : clearing) clear[c.name] = num(c.statistic);
  summary["clearing_max"] = clear;
  if (p->field) {
    summary["grid"] = {{"n_time", p->grid.n_time},
                       {"n_space", p->grid.n_space},
                       {"d_min", p->grid.d_min},
                       {"d_max", p->grid.d_max},
                       {"n_time_raised", p->grid.n_time_raised}};
    summary["truncation"] = {{"N0", p->field->config.n0},
                             {"doubling_change", p->field->doubling_change},
                             {"lifted", p->field->field.lifted}};
  }
  if (p->ode) {
    const MarketConstants k = closed_form_constants(m);
    summary["closed_form"] = {
        {"r", k.r}, {"kappa", k.kappa}, {"r_pe", k.r_pe}, {"kappa_pe", k.kappa_pe}};
  }
  if (config.output.json) w.write("summary.json", summary.dump(2) + "\n");
  w.manifest("solve", config);

  log << "backend " << p->backend() << ": S0=" << format_double(o.prices.stock)
      << " A0=" << format_double(o.prices.annuity) << " kappa0=" << format_double(o.coeffs.kappa)
      << " r0=" << format_double(o.coeffs.r) << "\n"
      << "wrote " << out_dir.string() << "\n";
}

VerificationReport run_verify(const RunConfig& config, const fs::path& out_dir,
                              double kappa_scale, std::ostream& log) {
  if (config.mc.n_paths < config.verify.min_paths) {
    throw ConfigError("mc.n_paths: verification needs at least " +
                      std::to_string(config.verify.min_paths) + " paths, got " +
                      std::to_string(config.mc.n_paths));
  }
  SimulationOptions sim;
  sim.kappa_scale = kappa_scale;
  const auto p = build_pipeline(config, true, sim);
  const MarketModel& m = config.model;
  const VerifyOptions opt = verify_options(config);
  const EquilibriumPathSet& ps = *p->paths;

  VerificationReport r;
  r.model_fingerprint = hex64(fnv1a64(config.canonical));
  r.backend = p->backend();
  r.n_time = p->sampler->n_steps();
  r.n_space = p->grid.n_space;
  r.n_paths = ps.size();
  r.seed = config.mc.seed;
  r.kappa_scale = kappa_scale;

  // ODE-side checks keep a prefix when the field reports the same name.
  auto add_prefixed = [&](std::vector<CheckResult> more) {
    for (auto& c : more) {
      if (r.find(c.name)) c.name = "ode_" + c.name;
      r.add(std::move(c));
    }
  };

  r.add(check_clearing(ps, opt));
  r.add(check_martingales(ps, opt));
  r.add(check_field_residuals(p->field->field, m, opt));
  if (p->ode) add_prefixed(check_ode_residuals(*p->ode, m, opt));
  r.add(check_identities(m, opt));
  r.add(check_path_residuals(ps, opt));
  r.add(check_optimality(ps, opt));
  r.add(check_benchmarks(m, *p->field, opt));
  if (p->ode) {
    add_prefixed(check_benchmarks(m, *p->ode, opt));
    r.add(check_backend_agreement(p->field->field, *p->ode, m));
  }
  r.add(check_ui_surrogate(ps));

  ArtifactWriter w(out_dir);
  const std::string table = report_table(r);
  if (config.output.json) w.write("report.json", report_json(r));
  w.write("report.txt", table);
  w.manifest("verify", config, {{"kappa_scale", kappa_scale}});
  log << table;
  return r;
}

ComparisonTable run_compare(const RunConfig& config, const fs::path& out_dir, std::ostream& log) {
  const auto p = build_pipeline(config, false);
  const MarketModel& m = config.model;
  const Origin o = origin(*p);
  const ParetoBenchmark pe = pareto_benchmark(m, *p->dividends);

  ComparisonTable t;
  t.rows = {{"kappa", o.coeffs.kappa, pe.kappa_pe0, 0.0},
            {"r", o.coeffs.r, pe.r_pe0, 0.0},
            {"A0", o.prices.annuity, pe.annuity0.mean, pe.annuity0.se},
            {"S0", o.prices.stock, pe.stock0.mean, pe.stock0.se}};
  t.kappa_above_pe = o.coeffs.kappa > pe.kappa_pe0;
  t.rate_below_pe = o.coeffs.r < pe.r_pe0;

  std::string csv = "quantity,value,benchmark,benchmark_se,margin,ratio\n";
  json rows = json::array();
  std::ostringstream table;
  table << std::left << std::setw(8) << "qty" << std::right << std::setw(24) << "value"
        << std::setw(24) << "pareto" << std::setw(24) << "se" << std::setw(24) << "margin"
        << "\n";
  for (const auto& row : t.rows) {
    const double margin = row.value - row.benchmark;
    const double ratio = row.value / row.benchmark;
    csv += row.quantity + ',' + format_double(row.value) + ',' + format_double(row.benchmark) +
           ',' + format_double(row.benchmark_se) + ',' + format_double(margin) + ',' +
           format_double(ratio) + '\n';
    rows.push_back({{"quantity", row.quantity},
                    {"value", num(row.value)},
                    {"benchmark", num(row.benchmark)},
                    {"benchmark_se", num(row.benchmark_se)},
                    {"margin", num(margin)},
                    {"ratio", num(ratio)}});
    table << std::left << std::setw(8) << row.quantity << std::right << std::setw(24)
          << format_double(row.value) << std::setw(24) << format_double(row.benchmark)
          << std::setw(24) << format_double(row.benchmark_se) << std::setw(24)
          << format_double(margin) << "\n";
  }
  table << "kappa > kappa_pe: " << (t.kappa_above_pe ? "true" : "false")
        << "\nr < r_pe: " << (t.rate_below_pe ? "true" : "false") << "\n";

  ArtifactWriter w(out_dir);
  if (config.output.csv) w.write("compare.csv", csv);
  if (config.output.json) {
    json j = {{"backend", p->backend()},
              {"rows", rows},
              {"kappa_above_pe", t.kappa_above_pe},
              {"rate_below_pe", t.rate_below_pe},
              {"gamma", pe.gamma}};
    w.write("compare.json", j.dump(2) + "\n");
  }
  w.manifest("compare", config);
  log << table.str();
  return t;
}

fs::path resolve_out_dir(const std::optional<std::string>& flag, const RunConfig& config) {
  if (flag && !flag->empty()) return *flag;
  if (!config.output.directory.empty()) return config.output.directory;
  if (const char* env = std::getenv("LPEQ_OUT_DIR"); env && *env) return env;
  return "lpeq_out";
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Limited-participation Radner equilibrium solver and verifier", "lpeq"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path;
  std::optional<std::string> out_flag;
  std::optional<std::uint64_t> seed_flag;
  std::vector<std::string> formats;
  double corrupt_kappa = 1.0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_flag, "output directory");
    sub->add_option("--seed", seed_flag, "overrides mc.seed");
    sub->add_option("--format", formats, "comma-separated subset of csv,json")
        ->delimiter(',')
        ->check(CLI::IsMember({"csv", "json"}));
  };
  CLI::App* solve = app.add_subcommand("solve", "solve and export fields, paths and a summary");
  CLI::App* verify = app.add_subcommand("verify", "run the verification battery");
  CLI::App* compare = app.add_subcommand("compare", "compare with the Pareto benchmark");
  for (auto* s : {solve, verify, compare}) common(s);
  verify->add_option("--corrupt-kappa", corrupt_kappa, "scale kappa (negative control)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (seed_flag) cfg.mc.seed = *seed_flag;
    if (!formats.empty()) {
      cfg.output.csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
      cfg.output.json = std::find(formats.begin(), formats.end(), "json") != formats.end();
    }
    const fs::path dir = resolve_out_dir(out_flag, cfg);
    cfg.output.directory.clear();  // where outputs land does not change them
    refresh_canonical(cfg);

    if (solve->parsed()) {
      run_solve(cfg, dir, out);
      return exit_ok;
    }
    if (verify->parsed()) {
      const VerificationReport r = run_verify(cfg, dir, corrupt_kappa, out);
      return r.overall_pass() ? exit_ok : exit_verify_failed;
    }
    run_compare(cfg, dir, out);
    return exit_ok;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    err << "error: " << e.what() << "\n";
    return code;
  }
}

}  // namespace lpeq
