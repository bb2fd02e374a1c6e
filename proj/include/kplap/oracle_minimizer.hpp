#pragma once

// Direct minimization of the discretized radial energy
//   sum_cells |du/h|^p / p * w_cell  -  sum_nodes u f w_node
// over grid functions pinned to zero at the case's boundary nodes. Knows nothing of the
// flux formulas; it only sees the densities.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "kplap/canonical_duality.hpp"
#include "kplap/error.hpp"
#include "kplap/flux_field.hpp"
#include "kplap/numerics.hpp"
#include "kplap/radial_model.hpp"

namespace kplap {

struct DiscreteProblem {
  double p = 0.0;
  int dimension = 2;
  Side side = Side::Source;
  Interval interval;
  std::vector<double> grid;
  double h = 0.0;
  /// omega_n r_mid^{n-1} h per cell.
  std::vector<double> cell_weight;
  /// omega_n r^{n-1} times the trapezoid length per node; the cell average at r = 0.
  std::vector<double> node_weight;
  /// Signed density: +f+ or -f- at the nodes.
  std::vector<double> f_values;
  std::vector<std::size_t> pinned;

  std::size_t size() const { return grid.size(); }

  double objective(const std::vector<double>& u) const {
    numerics::CompensatedSum acc;
    for (std::size_t i = 0; i + 1 < size(); ++i)
      acc.add(std::pow(std::abs((u[i + 1] - u[i]) / h), p) / p * cell_weight[i]);
    for (std::size_t i = 0; i < size(); ++i) acc.add(-u[i] * f_values[i] * node_weight[i]);
    return acc.value();
  }

  /// Gradient with the pinned components set to zero.
  std::vector<double> gradient(const std::vector<double>& u) const {
    std::vector<double> g(size());
    for (std::size_t i = 0; i < size(); ++i) g[i] = -f_values[i] * node_weight[i];
    for (std::size_t i = 0; i + 1 < size(); ++i) {
      const double d = (u[i + 1] - u[i]) / h;
      const double flux = std::pow(std::abs(d), p - 2.0) * d * cell_weight[i] / h;
      g[i] -= flux;
      g[i + 1] += flux;
    }
    for (std::size_t k : pinned) g[k] = 0.0;
    return g;
  }

  bool is_pinned(std::size_t i) const { return std::find(pinned.begin(), pinned.end(), i) != pinned.end(); }
};

/// Grid of N nodes over the side's working interval: [0, R] for balls with the outer node
/// pinned, the annulus interval with both ends pinned.
inline DiscreteProblem discretize(const ProblemCase& pc, Side side, double p, std::size_t N) {
  duality::require_exponent(p);
  if (N < 256) throw usage_error("discretize needs N >= 256");
  pc.validate();
  DiscreteProblem dp;
  dp.p = p;
  dp.dimension = pc.dimension;
  dp.side = side;
  if (pc.is_annulus()) {
    const Side active = pc.kind == CaseKind::AnnulusOuterSource ? Side::Source : Side::Sink;
    if (side != active) throw usage_error("annulus cases carry a single potential on the density side");
    dp.interval = annulus_interval(pc);
  } else {
    dp.interval = {0.0, side == Side::Source ? pc.R1 : pc.R2};
  }
  const int n = pc.dimension;
  const double omega = surface_constant(n);
  dp.grid = numerics::linspace(dp.interval.a, dp.interval.b, N);
  dp.h = dp.interval.length() / static_cast<double>(N - 1);
  dp.cell_weight.resize(N - 1);
  for (std::size_t i = 0; i + 1 < N; ++i)
    dp.cell_weight[i] = omega * std::pow(0.5 * (dp.grid[i] + dp.grid[i + 1]), n - 1) * dp.h;
  dp.node_weight.resize(N);
  dp.f_values.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double len = (i == 0 || i + 1 == N) ? 0.5 * dp.h : dp.h;
    dp.node_weight[i] = omega * std::pow(dp.grid[i], n - 1) * len;
    dp.f_values[i] = pc.signed_density(side, dp.grid[i]);
  }
  if (dp.grid.front() == 0.0) dp.node_weight.front() = omega * std::pow(0.5 * dp.h, n) / n;
  if (pc.is_annulus()) dp.pinned = {0, N - 1};
  else dp.pinned = {N - 1};
  return dp;
}

struct MinimizeResult {
  std::vector<double> u;
  double objective = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  /// Objective after every accepted step, starting with the initial value.
  std::vector<double> history;
  bool line_search_failed = false;
  double last_step = 0.0;
  std::string diagnostic;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  numerics::CompensatedSum acc;
  for (std::size_t i = 0; i < a.size(); ++i) acc.add(a[i] * b[i]);
  return acc.value();
}

/// Solves K z = g for the weighted H^1 stiffness K (cell weights w/h^2), identity rows at
/// pinned nodes. Thomas algorithm.
class StiffnessPreconditioner {
 public:
  explicit StiffnessPreconditioner(const DiscreteProblem& dp) : n_(dp.size()), diag_(n_, 0.0), off_(n_ - 1, 0.0) {
    for (std::size_t i = 0; i + 1 < n_; ++i) {
      const double k = dp.cell_weight[i] / (dp.h * dp.h);
      diag_[i] += k;
      diag_[i + 1] += k;
      off_[i] = -k;
    }
    for (std::size_t k : dp.pinned) {
      diag_[k] = 1.0;
      if (k > 0) off_[k - 1] = 0.0;
      if (k + 1 < n_) off_[k] = 0.0;
    }
  }

  std::vector<double> apply(const std::vector<double>& g) const {
    std::vector<double> c(n_ - 1), d(n_);
    double m = diag_[0];
    c[0] = off_[0] / m;
    d[0] = g[0] / m;
    for (std::size_t i = 1; i < n_; ++i) {
      m = diag_[i] - off_[i - 1] * c[i - 1];
      if (i + 1 < n_) c[i] = off_[i] / m;
      d[i] = (g[i] - off_[i - 1] * d[i - 1]) / m;
    }
    for (std::size_t i = n_ - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
    return d;
  }

 private:
  std::size_t n_;
  std::vector<double> diag_;
  std::vector<double> off_;
};

}  // namespace detail

/// Preconditioned limited-memory BFGS with Armijo backtracking, started from u = 0.
/// Stops when the Euclidean norm of the raw gradient reaches gtol.
inline MinimizeResult minimize(const DiscreteProblem& dp, double gtol, int max_iter) {
  duality::require_exponent(dp.p);
  if (!(gtol > 0.0)) throw usage_error("minimize needs gtol > 0");
  constexpr std::size_t memory = 10;
  constexpr double armijo = 1e-4;
  constexpr double eps = std::numeric_limits<double>::epsilon();

  const detail::StiffnessPreconditioner prec(dp);
  MinimizeResult res;
  std::vector<double> u(dp.size(), 0.0);
  double f = dp.objective(u);
  std::vector<double> g = dp.gradient(u);
  res.history.push_back(f);
  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;

  auto finish = [&](bool ok) {
    res.u = u;
    res.objective = f;
    res.grad_norm = std::sqrt(detail::dot(g, g));
    res.converged = ok;
    return res;
  };

  for (int it = 0;; ++it) {
    res.iterations = it;
    if (std::sqrt(detail::dot(g, g)) <= gtol) return finish(true);
    if (it >= max_iter) {
      res.diagnostic = "iteration limit reached";
      return finish(false);
    }

    std::vector<double> q = g;
    std::vector<double> alpha(S.size());
    for (std::size_t k = S.size(); k-- > 0;) {
      alpha[k] = rho[k] * detail::dot(S[k], q);
      for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * Y[k][i];
    }
    std::vector<double> z = prec.apply(q);
    if (!S.empty()) {
      const std::vector<double> py = prec.apply(Y.back());
      const double scale = detail::dot(S.back(), Y.back()) / detail::dot(Y.back(), py);
      for (double& v : z) v *= scale;
    }
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = rho[k] * detail::dot(Y[k], z);
      for (std::size_t i = 0; i < z.size(); ++i) z[i] += S[k][i] * (alpha[k] - beta);
    }
    std::vector<double> dir(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) dir[i] = -z[i];
    double slope = detail::dot(g, dir);
    if (!(slope < 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      dir = prec.apply(g);
      for (double& v : dir) v = -v;
      slope = detail::dot(g, dir);
    }

    double t = 1.0;
    std::vector<double> un(u.size()), gn;
    double fn = 0.0;
    for (;;) {
      for (std::size_t i = 0; i < u.size(); ++i) un[i] = u[i] + t * dir[i];
      fn = dp.objective(un);
      if (fn <= f + armijo * t * slope) {
        gn = dp.gradient(un);
        break;
      }
      // At the roundoff floor the objective cannot resolve the decrease; fall back on the
      // directional derivative, still refusing any visible increase.
      if (std::abs(fn - f) < 1e-15 * std::abs(f) && fn <= f + 4.0 * eps * std::abs(f)) {
        gn = dp.gradient(un);
        if (std::abs(detail::dot(gn, dir)) <= std::abs(slope)) break;
      }
      t *= 0.5;
      if (t < 1e-20) {
        res.line_search_failed = true;
        res.last_step = t;
        res.diagnostic = "line search failed to find a decrease";
        return finish(false);
      }
    }
    res.last_step = t;

    std::vector<double> s(u.size()), y(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      s[i] = un[i] - u[i];
      y[i] = gn[i] - g[i];
    }
    const double sy = detail::dot(s, y);
    if (sy > 0.0) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (S.size() > memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    u.swap(un);
    g.swap(gn);
    f = fn;
    res.history.push_back(f);
  }
}

/// Max relative deviation between the analytic gradient and central differences of the
/// objective with step h_fd, over the free nodes. Nodes whose stencil reaches a cell where
/// the difference quotient changes sign are skipped.
inline double gradient_check(const DiscreteProblem& dp, const std::vector<double>& u, double h_fd) {
  if (u.size() != dp.size()) throw usage_error("gradient_check: u has the wrong size");
  for (double v : u)
    if (!std::isfinite(v)) throw numeric_error("gradient_check: u is not finite");
  const std::vector<double> g = dp.gradient(u);
  double gmax = 0.0;
  for (double v : g) gmax = std::max(gmax, std::abs(v));
  if (gmax == 0.0) return 0.0;

  // Only the two adjacent cells and the node load depend on u_i.
  auto local = [&](const std::vector<double>& w, std::size_t i) {
    double e = -w[i] * dp.f_values[i] * dp.node_weight[i];
    if (i > 0) e += std::pow(std::abs((w[i] - w[i - 1]) / dp.h), dp.p) / dp.p * dp.cell_weight[i - 1];
    if (i + 1 < dp.size()) e += std::pow(std::abs((w[i + 1] - w[i]) / dp.h), dp.p) / dp.p * dp.cell_weight[i];
    return e;
  };

  double worst = 0.0;
  std::vector<double> w = u;
  for (std::size_t i = 0; i < dp.size(); ++i) {
    if (dp.is_pinned(i)) continue;
    const bool left_kink = i > 0 && std::abs(u[i] - u[i - 1]) <= h_fd;
    const bool right_kink = i + 1 < dp.size() && std::abs(u[i + 1] - u[i]) <= h_fd;
    if (left_kink || right_kink) continue;
    w[i] = u[i] + h_fd;
    const double ep = local(w, i);
    w[i] = u[i] - h_fd;
    const double em = local(w, i);
    w[i] = u[i];
    const double fd = (ep - em) / (2.0 * h_fd);
    const double denom = std::max(std::abs(g[i]), 1e-8 * gmax);
    worst = std::max(worst, std::abs(fd - g[i]) / denom);
  }
  return worst;
}

}  // namespace kplap
