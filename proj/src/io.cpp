#include "lpeq/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "lpeq/error.hpp"

namespace lpeq {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void write_text_file(const std::filesystem::path& file, std::string_view content) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + file.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed for " + file.string());
}

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string field_csv(const SolutionField& field, const std::vector<double>& values) {
  const Grid& g = field.grid;
  std::string out = "t";
  for (std::size_t j = 0; j < g.n_nodes(); ++j) {
    out += ',';
    out += format_double(g.node(j));
  }
  out += '\n';
  for (std::size_t n = 0; n <= g.n_time; ++n) {
    out += format_double(g.time(n));
    for (std::size_t j = 0; j < g.n_nodes(); ++j) {
      out += ',';
      out += format_double(values[field.index(n, j)]);
    }
    out += '\n';
  }
  return out;
}

std::string ode_csv(const ConstantSolution& s) {
  std::string out = "t,a,y1,y2\n";
  for (std::size_t n = 0; n < s.times.size(); ++n) {
    out += format_double(s.times[n]) + ',' + format_double(s.a[n]) + ',' +
           format_double(s.y1[n]) + ',' + format_double(s.y2[n]) + '\n';
  }
  return out;
}

std::string paths_csv(const EquilibriumPathSet& paths, std::size_t n_export) {
  std::string out =
      "path,t,D,A,S,kappa,sigma_A,mu_A,sigma_S,mu_S,r,X1,X2,c1,c2,theta1,theta2,xi\n";
  const std::size_t count = std::min(n_export, paths.size());
  for (std::size_t k = 0; k < count; ++k) {
    const EquilibriumPath p = paths.path(k);
    const std::string id = std::to_string(paths.source_index(k));
    const std::vector<double>* cols[] = {&p.t,       &p.d,     &p.annuity, &p.stock, &p.kappa,
                                         &p.sigma_a, &p.mu_a,  &p.sigma_s, &p.mu_s,  &p.r,
                                         &p.x1,      &p.x2,    &p.c1,      &p.c2,    &p.theta1,
                                         &p.theta2,  &p.xi};
    for (std::size_t n = 0; n < p.t.size(); ++n) {
      out += id;
      for (const auto* c : cols) {
        out += ',';
        out += format_double((*c)[n]);
      }
      out += '\n';
    }
  }
  return out;
}

namespace {

const char* to_string(Comparison c) {
  switch (c) {
    case Comparison::at_most:
      return "<=";
    case Comparison::at_least:
      return ">=";
    case Comparison::greater_than:
      return ">";
  }
  return "?";
}

// JSON has no inf/nan.
nlohmann::json num(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

}  // namespace

std::string report_json(const VerificationReport& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"statistic", num(c.statistic)},
                      {"threshold", num(c.threshold)},
                      {"comparison", to_string(c.comparison)},
                      {"pass", c.passed},
                      {"mandatory", c.mandatory},
                      {"n_samples", c.n_samples},
                      {"details", c.details}});
  }
  nlohmann::json j = {{"overall_pass", r.overall_pass()},
                      {"model_fingerprint", r.model_fingerprint},
                      {"backend", r.backend},
                      {"n_time", r.n_time},
                      {"n_space", r.n_space},
                      {"n_paths", r.n_paths},
                      {"seed", r.seed},
                      {"kappa_scale", r.kappa_scale},
                      {"checks", checks}};
  return j.dump(2) + "\n";
}

std::string report_table(const VerificationReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(38) << "check" << std::setw(6) << "pass" << std::right
     << std::setw(15) << "statistic" << "  " << std::setw(2) << "" << std::setw(15)
     << "threshold" << "\n";
  for (const auto& c : r.checks) {
    std::string status = c.passed ? "ok" : (c.mandatory ? "FAIL" : "warn");
    os << std::left << std::setw(38) << c.name << std::setw(6) << status << std::right
       << std::setw(15) << format_double(c.statistic) << "  " << std::setw(2)
       << to_string(c.comparison) << std::setw(15) << format_double(c.threshold) << "\n";
  }
  os << "overall: " << (r.overall_pass() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

}  // namespace lpeq
