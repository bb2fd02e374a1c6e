#pragma once

// Command-line flags. A --config file is read first; explicit flags override its values.

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kplap/cli/config.hpp"
#include "kplap/error.hpp"

namespace kplap::cli {

struct ParsedArgs {
  RunConfig config;
  bool p_given = false;
  /// Set when the parser already handled the invocation (--help); the value is the exit code.
  std::optional<int> early_exit;
  std::string help_text;
};

inline ParsedArgs parse_args(int argc, const char* const* argv) {
  CLI::App app{"Radial p-Laplacian approximation of Kantorovich potentials", "kplap"};
  app.set_version_flag("--version", "kplap 1.0.0");

  std::string config_path, mode, kind, dens_plus, dens_minus, out_dir, prefix;
  int n = 0, oracle_max_iter = 0, random_tests = 0;
  double R1 = 0, R2 = 0, gap_tol = 0, root_tol = 0, gtol = 0, el_tol = 0, oracle_tol = 0;
  std::size_t grid = 0, quad = 0, oracle_nodes = 0;
  std::uint64_t seed = 0;
  std::vector<double> pvals;
  bool uniform = false, no_csv = false, no_json = false;

  app.add_option("--config", config_path, "JSON configuration file (flat keys)");
  auto* o_mode = app.add_option("--mode", mode, "solve | verify | sweep | oracle");
  auto* o_case = app.add_option("--case", kind, "disjoint | annulus-outer | annulus-inner");
  auto* o_n = app.add_option("--n", n, "space dimension");
  auto* o_R1 = app.add_option("--R1", R1, "source radius");
  auto* o_R2 = app.add_option("--R2", R2, "sink radius");
  app.add_flag("--uniform", uniform, "uniform unit-mass densities on both supports");
  auto* o_dp = app.add_option("--density-plus", dens_plus, "uniform | power:<k> | table:<csv>");
  auto* o_dm = app.add_option("--density-minus", dens_minus, "uniform | power:<k> | table:<csv>");
  auto* o_p = app.add_option("--p", pvals, "exponents, comma separated or repeated")->delimiter(',');
  auto* o_grid = app.add_option("--grid-size", grid, "potential grid nodes");
  auto* o_quad = app.add_option("--quad-nodes", quad, "quadrature nodes for the dual energy and constants");
  auto* o_gap = app.add_option("--gap-tol", gap_tol, "relative duality gap tolerance");
  auto* o_root = app.add_option("--root-tol", root_tol, "boundary constant root tolerance");
  auto* o_gtol = app.add_option("--gtol", gtol, "oracle gradient norm tolerance");
  auto* o_el = app.add_option("--el-tol", el_tol, "Euler-Lagrange residual tolerance");
  auto* o_on = app.add_option("--oracle-nodes", oracle_nodes, "oracle grid nodes");
  auto* o_oi = app.add_option("--oracle-max-iter", oracle_max_iter, "oracle iteration limit");
  auto* o_ot = app.add_option("--oracle-tol", oracle_tol, "oracle sup-norm tolerance");
  auto* o_rt = app.add_option("--random-tests", random_tests, "random test functions for the second variation");
  auto* o_seed = app.add_option("--seed", seed, "seed for the random test functions");
  auto* o_out = app.add_option("--output-dir", out_dir, "directory for CSV and JSON outputs");
  auto* o_pre = app.add_option("--prefix", prefix, "file name stem for outputs");
  app.add_flag("--no-csv", no_csv, "skip CSV outputs");
  app.add_flag("--no-json", no_json, "skip the JSON summary");

  ParsedArgs out;
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    std::ostringstream os;
    app.exit(e, os, os);
    out.help_text = os.str();
    out.early_exit = 0;
    return out;
  } catch (const CLI::ParseError& e) {
    throw parse_error(e.what());
  }

  if (!config_path.empty()) out.config = load_config_file(config_path, &out.p_given);
  RunConfig& c = out.config;
  if (*o_mode) c.mode = parse_mode(mode);
  if (*o_case) c.kind = parse_case(kind);
  if (*o_n) c.dimension = n;
  if (*o_R1) c.R1 = R1;
  if (*o_R2) c.R2 = R2;
  if (uniform) c.density_plus = c.density_minus = "uniform";
  if (*o_dp) c.density_plus = dens_plus;
  if (*o_dm) c.density_minus = dens_minus;
  if (*o_p) {
    c.p_values = pvals;
    out.p_given = true;
  }
  if (*o_grid) c.grid_size = grid;
  if (*o_quad) c.quad_nodes = quad;
  if (*o_gap) c.gap_tol = gap_tol;
  if (*o_root) c.root_tol = root_tol;
  if (*o_gtol) c.gtol = gtol;
  if (*o_el) c.el_tol = el_tol;
  if (*o_on) c.oracle_nodes = oracle_nodes;
  if (*o_oi) c.oracle_max_iter = oracle_max_iter;
  if (*o_ot) c.oracle_tol = oracle_tol;
  if (*o_rt) c.random_test_functions = random_tests;
  if (*o_seed) c.seed = seed;
  if (*o_out) c.output_dir = out_dir;
  if (*o_pre) c.prefix = prefix;
  if (no_csv) c.write_csv = false;
  if (no_json) c.write_json = false;
  return out;
}

}  // namespace kplap::cli
