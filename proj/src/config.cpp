#include "lpeq/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lpeq/error.hpp"

namespace lpeq {

namespace {

using nlohmann::json;

std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw ConfigError(path + ": " + why);
}

// Tracks which keys of one object were consumed.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string path(const std::string& key) const { return join(path_, key); }

  const json& at(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) fail(path(key), "required field is missing");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) fail(path(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path(key), "must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : (used_.insert(key), fallback);
  }

  std::size_t count(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      fail(path(key), "expected a nonnegative integer");
    }
    return v.get<std::size_t>();
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    return has(key) ? count(key) : fallback;
  }

  std::string text(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) fail(path(key), "expected a string");
    return v.get<std::string>();
  }

  Block child(const std::string& key) { return Block(at(key), path(key)); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) fail(path(item.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& path, const std::string& why) {
  if (!ok) fail(path, why);
}

AgentParams read_agent(Block b) {
  AgentParams a;
  a.alpha = b.number("alpha");
  require(a.alpha > 0.0, b.path("alpha"), "must be > 0");
  a.rho = b.number("rho");
  require(a.rho >= 0.0, b.path("rho"), "must be >= 0");
  a.theta0 = b.number("theta0");
  b.finish();
  return a;
}

DividendCoefficients read_dividend(Block& div, double& bound_m) {
  const std::string preset_name = div.text("preset");
  DividendPreset preset;
  try {
    preset = dividend_preset_from_string(preset_name);
  } catch (const InvalidParameter&) {
    fail(div.path("preset"), "unknown preset '" + preset_name +
                                 "' (constant, affine_clamped, tanh_bounded)");
  }
  bound_m = div.number("bound_M");
  require(bound_m > 0.0, div.path("bound_M"), "must be > 0");

  Block p = div.child("params");
  DividendCoefficients c;
  switch (preset) {
    case DividendPreset::constant:
      c = DividendCoefficients::constant(p.number("mu0"), p.number("sigma0"));
      break;
    case DividendPreset::tanh_bounded: {
      const double mu0 = p.number("mu0"), mu1 = p.number("mu1");
      const double s0 = p.number("sigma0"), s1 = p.number("sigma1");
      c = DividendCoefficients::tanh_bounded(mu0, mu1, s0, s1);
      break;
    }
    case DividendPreset::affine_clamped: {
      const double mu0 = p.number("mu0"), mu1 = p.number("mu1"), cap = p.number("mu_cap");
      const double s0 = p.number("sigma0"), s1 = p.number("sigma1");
      const double lo = p.number("sigma_lo"), hi = p.number("sigma_hi");
      require(cap >= 0.0, p.path("mu_cap"), "must be >= 0");
      require(lo > 0.0 && lo <= hi, p.path("sigma_lo"), "need 0 < sigma_lo <= sigma_hi");
      c = DividendCoefficients::affine_clamped(mu0, mu1, cap, s0, s1, lo, hi);
      break;
    }
  }
  p.finish();
  return c;
}

MarketModel read_model(Block m) {
  MarketModel model;
  const json& agents = m.at("agents");
  require(agents.is_array() && agents.size() == 2, m.path("agents"),
          "expected an array of two agents (unconstrained first)");
  model.agent1 = read_agent(Block(agents[0], m.path("agents") + "[0]"));
  model.agent2 = read_agent(Block(agents[1], m.path("agents") + "[1]"));
  model.horizon = m.number("horizon");
  require(model.horizon > 0.0, m.path("horizon"), "must be > 0");
  model.d0 = m.number("D0");
  Block div = m.child("dividend");
  model.dividend = read_dividend(div, model.bound_m);
  div.finish();
  m.finish();
  require(std::abs(model.agent1.theta0 + model.agent2.theta0 - 1.0) <= 1e-12,
          m.path("agents"), "theta0 values must sum to 1");
  return model;
}

void read_grid(Block b, GridSpec& g) {
  g.n_time = b.count("n_time", g.n_time);
  require(g.n_time >= 4, b.path("n_time"), "must be >= 4");
  g.n_space = b.count("n_space", g.n_space);
  require(g.n_space >= 8, b.path("n_space"), "must be >= 8");
  g.coverage_k = b.number("coverage_k", g.coverage_k);
  require(g.coverage_k > 0.0, b.path("coverage_k"), "must be > 0");
  g.cfl_safety = b.number("cfl_safety", g.cfl_safety);
  require(g.cfl_safety > 0.0 && g.cfl_safety <= 1.0, b.path("cfl_safety"), "must be in (0, 1]");
  b.finish();
}

void read_mc(Block b, McConfig& mc) {
  mc.n_paths = b.count("n_paths", mc.n_paths);
  require(mc.n_paths >= 2, b.path("n_paths"), "must be >= 2");
  if (b.has("seed")) {
    const json& v = b.at("seed");
    require(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0),
            b.path("seed"), "expected a nonnegative integer");
    mc.seed = v.get<std::uint64_t>();
  }
  if (b.has("checkpoints")) {
    const json& v = b.at("checkpoints");
    require(v.is_array() && !v.empty(), b.path("checkpoints"), "expected a nonempty array");
    mc.checkpoints.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = b.path("checkpoints") + "[" + std::to_string(i) + "]";
      require(v[i].is_number(), p, "expected a number");
      const double f = v[i].get<double>();
      require(f > 0.0 && f <= 1.0, p, "must be a fraction of the horizon in (0, 1]");
      mc.checkpoints.push_back(f);
    }
  }
  b.finish();
}

void read_truncation(Block b, TruncationConfig& t) {
  if (b.has("mode")) {
    const std::string mode = b.text("mode");
    if (mode == "auto") {
      t.mode = TruncationMode::automatic;
    } else if (mode == "fixed") {
      t.mode = TruncationMode::fixed;
    } else {
      fail(b.path("mode"), "expected 'auto' or 'fixed'");
    }
  }
  t.n = b.number("N", t.n);
  require(t.n > 1.0, b.path("N"), "must be > 1");
  t.n_max = b.number("N_max", t.n_max);
  require(t.n_max >= 4.0, b.path("N_max"), "must be >= 4");
  b.finish();
}

void read_output(Block b, OutputConfig& o) {
  if (b.has("directory")) o.directory = b.text("directory");
  if (b.has("formats")) {
    const json& v = b.at("formats");
    require(v.is_array(), b.path("formats"), "expected an array");
    o.csv = o.json = false;
    for (const auto& f : v) {
      require(f.is_string(), b.path("formats"), "expected strings");
      const auto s = f.get<std::string>();
      if (s == "csv") {
        o.csv = true;
      } else if (s == "json") {
        o.json = true;
      } else {
        fail(b.path("formats"), "unknown format '" + s + "' (csv, json)");
      }
    }
  }
  o.export_paths = b.count("export_paths", o.export_paths);
  b.finish();
}

void read_verify(Block b, VerifyConfig& v) {
  v.fk_paths = b.count("fk_paths", v.fk_paths);
  require(v.fk_paths >= 2, b.path("fk_paths"), "must be >= 2");
  v.perturb_delta = b.number("perturb_delta", v.perturb_delta);
  require(v.perturb_delta > 0.0, b.path("perturb_delta"), "must be > 0");
  v.perturb_eps = b.number("perturb_eps", v.perturb_eps);
  require(v.perturb_eps > 0.0, b.path("perturb_eps"), "must be > 0");
  v.se_multiplier = b.number("se_multiplier", v.se_multiplier);
  require(v.se_multiplier > 0.0, b.path("se_multiplier"), "must be > 0");
  v.min_paths = b.count("min_paths", v.min_paths);
  b.finish();
}

json to_json(const RunConfig& c) {
  const auto& m = c.model;
  const auto& d = m.dividend;
  json params;
  switch (d.preset) {
    case DividendPreset::constant:
      params = {{"mu0", d.mu0}, {"sigma0", d.sigma0}};
      break;
    case DividendPreset::tanh_bounded:
      params = {{"mu0", d.mu0}, {"mu1", d.mu1}, {"sigma0", d.sigma0}, {"sigma1", d.sigma1}};
      break;
    case DividendPreset::affine_clamped:
      params = {{"mu0", d.mu0},       {"mu1", d.mu1},           {"mu_cap", d.mu_cap},
                {"sigma0", d.sigma0}, {"sigma1", d.sigma1},     {"sigma_lo", d.sigma_lo},
                {"sigma_hi", d.sigma_hi}};
      break;
  }
  auto agent = [](const AgentParams& a) {
    return json{{"alpha", a.alpha}, {"rho", a.rho}, {"theta0", a.theta0}};
  };
  json formats = json::array();
  if (c.output.csv) formats.push_back("csv");
  if (c.output.json) formats.push_back("json");
  return {
      {"model",
       {{"agents", {agent(m.agent1), agent(m.agent2)}},
        {"horizon", m.horizon},
        {"D0", m.d0},
        {"dividend", {{"preset", to_string(d.preset)}, {"params", params}, {"bound_M", m.bound_m}}}}},
      {"grid",
       {{"n_time", c.grid.n_time},
        {"n_space", c.grid.n_space},
        {"coverage_k", c.grid.coverage_k},
        {"cfl_safety", c.grid.cfl_safety}}},
      {"mc", {{"n_paths", c.mc.n_paths}, {"seed", c.mc.seed}, {"checkpoints", c.mc.checkpoints}}},
      {"truncation",
       {{"mode", c.truncation.mode == TruncationMode::automatic ? "auto" : "fixed"},
        {"N", c.truncation.n},
        {"N_max", c.truncation.n_max}}},
      {"output",
       {{"directory", c.output.directory},
        {"formats", formats},
        {"export_paths", c.output.export_paths}}},
      {"verify",
       {{"fk_paths", c.verify.fk_paths},
        {"perturb_delta", c.verify.perturb_delta},
        {"perturb_eps", c.verify.perturb_eps},
        {"se_multiplier", c.verify.se_multiplier},
        {"min_paths", c.verify.min_paths}}},
  };
}

}  // namespace

void refresh_canonical(RunConfig& cfg) { cfg.canonical = to_json(cfg).dump(); }

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("<root>: malformed JSON: ") + e.what());
  }
  Block top(root, "");
  RunConfig cfg;
  cfg.model = read_model(top.child("model"));
  if (top.has("grid")) read_grid(top.child("grid"), cfg.grid);
  if (top.has("mc")) read_mc(top.child("mc"), cfg.mc);
  if (top.has("truncation")) read_truncation(top.child("truncation"), cfg.truncation);
  if (top.has("output")) read_output(top.child("output"), cfg.output);
  if (top.has("verify")) read_verify(top.child("verify"), cfg.verify);
  top.finish();
  refresh_canonical(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError(file.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace lpeq
