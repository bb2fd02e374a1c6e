#pragma once

// p-sweeps toward the limit p -> infinity: Cauchy differences of u_p, the gradient gap
// 1 - |grad u_p| at fixed probes, the boundary constants and the Kantorovich values.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "kplap/energies.hpp"
#include "kplap/error.hpp"
#include "kplap/flux_field.hpp"
#include "kplap/numerics.hpp"
#include "kplap/potential.hpp"
#include "kplap/radial_model.hpp"

namespace kplap {

inline std::vector<double> default_sweep_exponents() { return {3, 4, 8, 16, 32, 64, 128, 256}; }

/// Worker count: KPLAP_THREADS if set and positive, else the hardware concurrency.
inline unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("KPLAP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

/// Runs job(i) for i in [0, count) on up to worker_count threads. The first exception
/// (lowest index) is rethrown after all workers finish.
template <class Job>
void parallel_for(std::size_t count, Job&& job) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned nthreads = worker_count(count);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {

inline double limit_kink_midpoint(const ProblemCase& pc) {
  const Interval iv = annulus_interval(pc);
  return 0.5 * (iv.a + iv.b);
}

inline bool uniform_density(const RadialDensity& d) {
  return std::holds_alternative<RadialDensity::Uniform>(d.form());
}

inline const RadialDensity& annulus_density(const ProblemCase& pc) {
  return pc.kind == CaseKind::AnnulusOuterSource ? pc.f_plus : pc.f_minus;
}

}  // namespace detail

/// Closed-form candidate limit on one side. Balls: R1 - r on the source, r - R2 on the sink.
/// Annuli: the tent vanishing at both ends with its peak at the kink, |slope| = 1 on the
/// shorter leg, negative when the density side is the sink.
inline RadialPotential limit_potential(const ProblemCase& pc, Side side, std::size_t grid_size,
                                       std::optional<double> kink = std::nullopt) {
  pc.validate();
  if (grid_size < 2) throw usage_error("limit_potential needs at least two grid nodes");
  RadialPotential pot;
  pot.p = std::numeric_limits<double>::infinity();
  pot.side = side;
  if (pc.is_annulus()) {
    const Side active = pc.kind == CaseKind::AnnulusOuterSource ? Side::Source : Side::Sink;
    if (side != active) throw usage_error("annulus cases carry a single potential on the density side");
    pot.tag = SideTag::Annulus;
    pot.interval = annulus_interval(pc);
    const double k = kink.value_or(detail::limit_kink_midpoint(pc));
    if (!(k > pot.interval.a && k < pot.interval.b)) throw domain_error("limit kink lies outside the annulus");
    pot.zeros = {k};
  } else {
    pot.tag = side == Side::Source ? SideTag::SourceBall : SideTag::SinkBall;
    pot.interval = {0.0, side == Side::Source ? pc.R1 : pc.R2};
  }
  const double sign = side == Side::Source ? 1.0 : -1.0;
  pot.grid = numerics::linspace(pot.interval.a, pot.interval.b, grid_size);
  const double a = pot.interval.a;
  const double b = pot.interval.b;
  const double peak = pot.zeros.empty() ? 0.0 : std::min(pot.zeros[0] - a, b - pot.zeros[0]);
  for (double r : pot.grid) {
    double v = 0.0;
    double d = 0.0;
    if (pot.tag != SideTag::Annulus) {
      v = b - r;
      d = -1.0;
    } else {
      const double k = pot.zeros[0];
      if (r <= k) {
        v = peak * (r - a) / (k - a);
        d = peak / (k - a);
      } else {
        v = peak * (b - r) / (b - k);
        d = -peak / (b - k);
      }
    }
    pot.values.push_back(sign * v);
    pot.derivative.push_back(sign * d);
    pot.lambda.push_back(1.0);
    pot.theta_r.push_back(sign * d);
  }
  return pot;
}

/// K[u_inf] = sum over sides of int u_inf f dx, split at the kink.
inline double kantorovich_limit_value(const ProblemCase& pc, std::optional<double> kink = std::nullopt) {
  pc.validate();
  const int n = pc.dimension;
  const double omega = surface_constant(n);
  const numerics::QuadratureSpec quad = numerics::QuadratureSpec::production();
  numerics::CompensatedSum acc;
  for (Side s : pc.active_sides()) {
    const RadialPotential lim = limit_potential(pc, s, 2, kink);
    const double a = lim.interval.a;
    const double b = lim.interval.b;
    const double sign = s == Side::Source ? 1.0 : -1.0;
    auto integrand = [&](double r, double u) { return u * pc.signed_density(s, r) * omega * std::pow(r, n - 1); };
    if (lim.tag != SideTag::Annulus) {
      acc.add(numerics::integrate([&](double r) { return integrand(r, sign * (b - r)); }, a, b, quad));
    } else {
      const double k = lim.zeros[0];
      const double peak = std::min(k - a, b - k);
      acc.add(numerics::integrate([&](double r) { return integrand(r, sign * peak * (r - a) / (k - a)); }, a, k, quad));
      acc.add(numerics::integrate([&](double r) { return integrand(r, sign * peak * (b - r) / (b - k)); }, k, b, quad));
    }
  }
  return acc.value();
}

/// Probe radii for the gradient gap: 8 equispaced interior points of the side's interval
/// with 10% margins cut around r = 0 and around the limit kink.
inline std::vector<double> gradient_probes(const Interval& iv, bool ball, std::optional<double> kink) {
  constexpr int count = 8;
  const double margin = 0.1 * iv.length();
  std::vector<Interval> pieces;
  if (ball) {
    pieces.push_back({iv.a + margin, iv.b});
  } else if (kink) {
    if (*kink - margin > iv.a) pieces.push_back({iv.a, *kink - margin});
    if (*kink + margin < iv.b) pieces.push_back({*kink + margin, iv.b});
  } else {
    pieces.push_back(iv);
  }
  double total = 0.0;
  for (const Interval& p : pieces) total += p.length();
  std::vector<double> out;
  for (int k = 1; k <= count; ++k) {
    double s = total * k / (count + 1);
    for (const Interval& p : pieces) {
      if (s <= p.length()) {
        out.push_back(p.a + s);
        break;
      }
      s -= p.length();
    }
  }
  return out;
}

struct SweepResult {
  ProblemCase problem;
  std::vector<double> p_values;
  std::size_t grid_size = 0;
  std::vector<Solution> solutions;
  /// C_p (outer source) or D_p (inner source); the source-ball constant for two balls.
  std::vector<double> constants;
  std::vector<EnergyReport> energy_reports;
  /// sup over sides and grid of |u_{p_{k+1}} - u_{p_k}|; one entry per consecutive pair.
  std::vector<double> cauchy_table;
  /// Probe radii per side, concatenated over the active sides.
  std::vector<double> probe_radii;
  /// |1 - |grad u_p|| at every probe, one row per p.
  std::vector<std::vector<double>> grad_gap_table;
  /// sup of each grad_gap_table row.
  std::vector<double> grad_gap_sup;
  /// sup over sides and grid of |u_p - u_inf|.
  std::vector<double> limit_sup_diff;
  std::optional<double> limit_kink;
  std::vector<RadialPotential> limit;
  double kantorovich_limit = 0.0;
  /// max over p of sup|u_p|, and max over p of sup|u_p'|.
  double sup_potential = 0.0;
  double sup_gradient = 0.0;
};

struct SweepOptions {
  SolveOptions solve;
  EnergyOptions energy;
  /// Set to skip energy reports, which dominate the cost of a sweep.
  bool skip_energies = false;
};

inline SweepResult run_sweep(const ProblemCase& pc, const std::vector<double>& p_values, std::size_t grid_size,
                             const SweepOptions& opt = {}) {
  pc.validate();
  if (p_values.empty()) throw usage_error("sweep needs at least one exponent");
  if (p_values.size() > 16) throw usage_error("sweep is limited to 16 exponents");
  for (std::size_t i = 0; i < p_values.size(); ++i) {
    duality::require_exponent(p_values[i]);
    if (i > 0 && !(p_values[i] > p_values[i - 1])) throw usage_error("sweep exponents must be strictly increasing");
  }

  SweepResult res;
  res.problem = pc;
  res.p_values = p_values;
  res.grid_size = grid_size;
  const std::size_t P = p_values.size();
  res.solutions.resize(P);
  res.energy_reports.resize(P);

  SolveOptions so = opt.solve;
  so.grid_size = grid_size;
  parallel_for(P, [&](std::size_t k) {
    const double p = p_values[k];
    try {
      res.solutions[k] = solve(pc, p, so);
      if (!opt.skip_energies) res.energy_reports[k] = energy_report(res.solutions[k], opt.energy);
    } catch (const error& e) {
      std::ostringstream os;
      os.precision(17);
      os << "sweep failed at p = " << p << ": " << e.what();
      throw convergence_error(os.str());
    }
  });

  for (const Solution& s : res.solutions) res.constants.push_back(s.sides.front().flux.constant);

  if (pc.is_annulus()) {
    if (detail::uniform_density(detail::annulus_density(pc)))
      res.limit_kink = detail::limit_kink_midpoint(pc);
    else
      res.limit_kink = res.solutions.back().sides.front().flux.zeros.front();
  }
  for (Side s : pc.active_sides()) res.limit.push_back(limit_potential(pc, s, grid_size, res.limit_kink));
  res.kantorovich_limit = kantorovich_limit_value(pc, res.limit_kink);

  for (const RadialPotential& lim : res.limit) {
    const auto pr = gradient_probes(lim.interval, lim.tag != SideTag::Annulus, res.limit_kink);
    res.probe_radii.insert(res.probe_radii.end(), pr.begin(), pr.end());
  }

  for (std::size_t k = 0; k < P; ++k) {
    const Solution& sol = res.solutions[k];
    double diff = 0.0;
    std::vector<double> gaps;
    for (std::size_t j = 0; j < sol.sides.size(); ++j) {
      const RadialPotential& pot = sol.sides[j].potential;
      for (std::size_t i = 0; i < pot.size(); ++i) {
        diff = std::max(diff, std::abs(pot.values[i] - res.limit[j].values[i]));
        res.sup_potential = std::max(res.sup_potential, std::abs(pot.values[i]));
        res.sup_gradient = std::max(res.sup_gradient, std::abs(pot.derivative[i]));
      }
      const auto pr = gradient_probes(res.limit[j].interval, res.limit[j].tag != SideTag::Annulus, res.limit_kink);
      for (double r : pr) gaps.push_back(std::abs(1.0 - std::abs(gradient_at(sol.sides[j].flux, sol.p, r))));
    }
    res.limit_sup_diff.push_back(diff);
    res.grad_gap_sup.push_back(*std::max_element(gaps.begin(), gaps.end()));
    res.grad_gap_table.push_back(std::move(gaps));
    if (k > 0) {
      double c = 0.0;
      const Solution& prev = res.solutions[k - 1];
      for (std::size_t j = 0; j < sol.sides.size(); ++j)
        for (std::size_t i = 0; i < sol.sides[j].potential.size(); ++i)
          c = std::max(c, std::abs(sol.sides[j].potential.values[i] - prev.sides[j].potential.values[i]));
      res.cauchy_table.push_back(c);
    }
  }
  return res;
}

}  // namespace kplap
