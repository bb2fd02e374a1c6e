#pragma once

// Run configuration: flat JSON keys, strict parsing, validation into a ProblemCase.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kplap/canonical_duality.hpp"
#include "kplap/convergence_suite.hpp"
#include "kplap/error.hpp"
#include "kplap/radial_model.hpp"

namespace kplap::cli {

using nlohmann::json;

enum class Mode { Solve, Verify, Sweep, Oracle };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Solve: return "solve";
    case Mode::Verify: return "verify";
    case Mode::Sweep: return "sweep";
    case Mode::Oracle: return "oracle";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "solve") return Mode::Solve;
  if (s == "verify") return Mode::Verify;
  if (s == "sweep") return Mode::Sweep;
  if (s == "oracle") return Mode::Oracle;
  throw parse_error("unknown mode '" + s + "' (expected solve, verify, sweep or oracle)");
}

inline CaseKind parse_case(const std::string& s) {
  if (s == "disjoint") return CaseKind::DisjointBalls;
  if (s == "annulus-outer") return CaseKind::AnnulusOuterSource;
  if (s == "annulus-inner") return CaseKind::AnnulusInnerSource;
  throw parse_error("unknown case '" + s + "' (expected disjoint, annulus-outer or annulus-inner)");
}

inline std::string case_name(CaseKind k) {
  switch (k) {
    case CaseKind::DisjointBalls: return "disjoint";
    case CaseKind::AnnulusOuterSource: return "annulus-outer";
    case CaseKind::AnnulusInnerSource: return "annulus-inner";
  }
  return "?";
}

struct RunConfig {
  Mode mode = Mode::Verify;
  CaseKind kind = CaseKind::DisjointBalls;
  int dimension = 2;
  double R1 = 1.0;
  double R2 = 1.0;
  /// "uniform", "power:<exponent>" or "table:<csv path>"; always rescaled to unit mass.
  std::string density_plus = "uniform";
  std::string density_minus = "uniform";
  std::vector<double> p_values;
  std::size_t grid_size = 4097;
  std::size_t quad_nodes = 4097;
  double gap_tol = 1e-6;
  double root_tol = 1e-12;
  double gtol = 1e-10;
  double el_tol = 1e-6;
  std::size_t oracle_nodes = 2048;
  int oracle_max_iter = 20000;
  double oracle_tol = 5e-3;
  int random_test_functions = 32;
  std::uint64_t seed = 20240611;
  std::string output_dir = ".";
  std::string prefix = "kplap";
  bool write_csv = true;
  bool write_json = true;
};

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "mode",     "case",       "n",         "R1",      "R2",           "density_plus",    "density_minus",
      "p",        "grid_size",  "quad_nodes", "gap_tol", "root_tol",     "gtol",            "el_tol",
      "oracle_nodes", "oracle_max_iter", "oracle_tol", "random_test_functions", "seed", "output_dir",
      "prefix",   "write_csv",  "write_json"};
  return keys;
}

namespace detail {

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw parse_error("key '" + key + "': wrong value type " + std::string(j.type_name()));
  }
}

inline double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw parse_error("key '" + key + "': expected a number, got " + std::string(j.type_name()));
  return j.get<double>();
}

inline std::size_t get_count(const json& j, const std::string& key) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw parse_error("key '" + key + "': expected a nonnegative integer");
  return j.get<std::size_t>();
}

inline std::string get_string(const json& j, const std::string& key) {
  if (!j.is_string()) throw parse_error("key '" + key + "': expected a string, got " + std::string(j.type_name()));
  return j.get<std::string>();
}

inline bool get_bool(const json& j, const std::string& key) {
  if (!j.is_boolean()) throw parse_error("key '" + key + "': expected true or false");
  return j.get<bool>();
}

}  // namespace detail

/// Fills cfg from a JSON object. Unknown keys and wrong types are parse errors.
inline void apply_json(RunConfig& cfg, const json& j, std::vector<std::string>* seen = nullptr) {
  if (!j.is_object()) throw parse_error("configuration must be a JSON object");
  const auto& keys = config_keys();
  const std::set<std::string> known(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (!known.count(k)) throw parse_error("unknown key '" + k + "'");
    if (seen) seen->push_back(k);
    if (k == "mode") cfg.mode = parse_mode(detail::get_string(v, k));
    else if (k == "case") cfg.kind = parse_case(detail::get_string(v, k));
    else if (k == "n") cfg.dimension = static_cast<int>(detail::get_count(v, k));
    else if (k == "R1") cfg.R1 = detail::get_number(v, k);
    else if (k == "R2") cfg.R2 = detail::get_number(v, k);
    else if (k == "density_plus") cfg.density_plus = detail::get_string(v, k);
    else if (k == "density_minus") cfg.density_minus = detail::get_string(v, k);
    else if (k == "p") {
      cfg.p_values.clear();
      if (v.is_number()) cfg.p_values.push_back(v.get<double>());
      else if (v.is_array())
        for (const json& e : v) cfg.p_values.push_back(detail::get_number(e, k));
      else throw parse_error("key 'p': expected a number or an array of numbers");
    }
    else if (k == "grid_size") cfg.grid_size = detail::get_count(v, k);
    else if (k == "quad_nodes") cfg.quad_nodes = detail::get_count(v, k);
    else if (k == "gap_tol") cfg.gap_tol = detail::get_number(v, k);
    else if (k == "root_tol") cfg.root_tol = detail::get_number(v, k);
    else if (k == "gtol") cfg.gtol = detail::get_number(v, k);
    else if (k == "el_tol") cfg.el_tol = detail::get_number(v, k);
    else if (k == "oracle_nodes") cfg.oracle_nodes = detail::get_count(v, k);
    else if (k == "oracle_max_iter") cfg.oracle_max_iter = static_cast<int>(detail::get_count(v, k));
    else if (k == "oracle_tol") cfg.oracle_tol = detail::get_number(v, k);
    else if (k == "random_test_functions") cfg.random_test_functions = static_cast<int>(detail::get_count(v, k));
    else if (k == "seed") cfg.seed = detail::get_as<std::uint64_t>(v, k);
    else if (k == "output_dir") cfg.output_dir = detail::get_string(v, k);
    else if (k == "prefix") cfg.prefix = detail::get_string(v, k);
    else if (k == "write_csv") cfg.write_csv = detail::get_bool(v, k);
    else if (k == "write_json") cfg.write_json = detail::get_bool(v, k);
  }
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::ostringstream os;
    os << origin << ": malformed JSON at line " << detail::line_of(text, e.byte) << ": " << e.what();
    throw parse_error(os.str());
  }
}

/// Reads a configuration file; p_given reports whether it set the exponent list.
inline RunConfig load_config_file(const std::string& path, bool* p_given = nullptr) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open configuration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg;
  std::vector<std::string> seen;
  apply_json(cfg, parse_json_text(ss.str(), path), &seen);
  if (p_given) *p_given = std::find(seen.begin(), seen.end(), "p") != seen.end();
  return cfg;
}

namespace detail {

inline std::vector<std::pair<double, double>> read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open density table '" + path + "'");
  std::vector<std::pair<double, double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double r = 0.0, v = 0.0;
    if (!(ls >> r >> v)) {
      if (rows.empty()) continue;  // header row
      throw parse_error(path + ": line " + std::to_string(lineno) + " is not 'r,value'");
    }
    rows.emplace_back(r, v);
  }
  return rows;
}

/// Unit-mass density on the support from a density spec string.
inline RadialDensity make_density(const std::string& spec, Interval support, int n) {
  RadialDensity d = RadialDensity::uniform(1.0, support);
  if (spec == "uniform") {
  } else if (spec.rfind("power:", 0) == 0) {
    double e = 0.0;
    try {
      std::size_t used = 0;
      e = std::stod(spec.substr(6), &used);
      if (used != spec.size() - 6) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw parse_error("density spec '" + spec + "': bad exponent");
    }
    if (!(e >= 0.0)) throw domain_error("density spec '" + spec + "': exponent must be >= 0");
    d = RadialDensity::power_law(1.0, e, support);
  } else if (spec.rfind("table:", 0) == 0) {
    const auto rows = read_table(spec.substr(6));
    std::vector<double> r, v;
    for (const auto& [x, y] : rows) {
      r.push_back(x);
      v.push_back(y);
    }
    d = RadialDensity::tabulated(std::move(r), std::move(v));
  } else {
    throw parse_error("density spec '" + spec + "' (expected uniform, power:<k> or table:<path>)");
  }
  const Interval dom = d.domain();
  const double mass = surface_constant(n) * d.moment(dom.a, dom.b, n);
  if (!(mass > 0.0)) throw balance_error("density spec '" + spec + "' has zero mass");
  return d.scaled(1.0 / mass);
}

}  // namespace detail

/// Validates every field and builds the case; p <= 2 is a domain error and inconsistent
/// radii a geometry error.
inline ProblemCase validate(RunConfig& cfg, bool p_given) {
  for (double p : cfg.p_values) duality::require_exponent(p);
  if (cfg.p_values.empty()) {
    if (cfg.mode == Mode::Sweep && p_given) throw usage_error("sweep mode needs a nonempty list of exponents");
    cfg.p_values = cfg.mode == Mode::Sweep ? default_sweep_exponents() : std::vector<double>{4.0};
  }
  if (cfg.mode == Mode::Sweep) {
    for (std::size_t i = 1; i < cfg.p_values.size(); ++i)
      if (!(cfg.p_values[i] > cfg.p_values[i - 1])) throw usage_error("sweep exponents must be strictly increasing");
  }
  const std::pair<const char*, double> tols[] = {{"gap_tol", cfg.gap_tol}, {"root_tol", cfg.root_tol},
                                                 {"gtol", cfg.gtol},       {"el_tol", cfg.el_tol},
                                                 {"oracle_tol", cfg.oracle_tol}};
  for (const auto& [name, v] : tols)
    if (!(v > 0.0) || !std::isfinite(v)) throw usage_error(std::string(name) + " must be positive");
  if (cfg.grid_size < 256) throw usage_error("grid_size must be >= 256");
  if (cfg.quad_nodes > (1u << 24) || cfg.grid_size > (1u << 24)) throw usage_error("node counts are capped at 2^24");
  numerics::QuadratureSpec{static_cast<int>(cfg.quad_nodes), numerics::Scheme::CompositeSimpson}.validate();
  if (cfg.oracle_nodes < 256) throw usage_error("oracle_nodes must be >= 256");
  if (cfg.oracle_max_iter < 1) throw usage_error("oracle_max_iter must be >= 1");
  if (cfg.random_test_functions < 0) throw usage_error("random_test_functions must be >= 0");
  if (cfg.prefix.empty() || cfg.prefix.find('/') != std::string::npos)
    throw usage_error("prefix must be a nonempty file name stem");

  ProblemCase pc;
  pc.kind = cfg.kind;
  pc.dimension = cfg.dimension;
  pc.R1 = cfg.R1;
  pc.R2 = cfg.R2;
  if (cfg.dimension < 2) throw geometry_error("dimension must be >= 2");
  if (!(cfg.R1 > 0.0 && cfg.R2 > 0.0) || !std::isfinite(cfg.R1) || !std::isfinite(cfg.R2))
    throw geometry_error("radii must be positive and finite");
  if (cfg.kind == CaseKind::AnnulusOuterSource && !(cfg.R1 > cfg.R2))
    throw geometry_error("annulus-outer requires R1 > R2");
  if (cfg.kind == CaseKind::AnnulusInnerSource && !(cfg.R2 > cfg.R1))
    throw geometry_error("annulus-inner requires R2 > R1");
  pc.f_plus = detail::make_density(cfg.density_plus, pc.expected_support(Side::Source), cfg.dimension);
  pc.f_minus = detail::make_density(cfg.density_minus, pc.expected_support(Side::Sink), cfg.dimension);
  pc.validate();

  if (cfg.write_csv || cfg.write_json) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    const std::filesystem::path probe = std::filesystem::path(cfg.output_dir) / (".kplap_write_probe");
    std::ofstream out(probe);
    if (!out) throw usage_error("output directory '" + cfg.output_dir + "' is not writable");
    out.close();
    std::filesystem::remove(probe, ec);
  }
  return pc;
}

inline json to_json(const RunConfig& cfg) {
  return json{{"mode", to_string(cfg.mode)},
              {"case", case_name(cfg.kind)},
              {"n", cfg.dimension},
              {"R1", cfg.R1},
              {"R2", cfg.R2},
              {"density_plus", cfg.density_plus},
              {"density_minus", cfg.density_minus},
              {"p", cfg.p_values},
              {"grid_size", cfg.grid_size},
              {"quad_nodes", cfg.quad_nodes},
              {"gap_tol", cfg.gap_tol},
              {"root_tol", cfg.root_tol},
              {"gtol", cfg.gtol},
              {"el_tol", cfg.el_tol},
              {"oracle_nodes", cfg.oracle_nodes},
              {"oracle_max_iter", cfg.oracle_max_iter},
              {"oracle_tol", cfg.oracle_tol},
              {"random_test_functions", cfg.random_test_functions},
              {"seed", cfg.seed},
              {"output_dir", cfg.output_dir},
              {"prefix", cfg.prefix},
              {"write_csv", cfg.write_csv},
              {"write_json", cfg.write_json}};
}

}  // namespace kplap::cli
