#pragma once

// Scalar algebra of the canonical dual transformation for H(g) = |g|^p / p.
//
//   xi     = |grad u|^2                  in [0, 1]
//   zeta   = xi^{(p-2)/2} / 2            in [0, 1/2]   (derivative of psi)
//   lambda = 2 zeta                      in [0, 1]
//   |theta|^2 = E_p(lambda) = lambda^{(2p-2)/(p-2)}     (dual algebraic equation)

#include <cmath>
#include <sstream>
#include <string>

#include "kplap/error.hpp"

namespace kplap::duality {

inline constexpr double min_exponent_gap = 1e-6;

inline void require_exponent(double p) {
  if (!(p > 2.0 + min_exponent_gap) || !std::isfinite(p)) {
    std::ostringstream os;
    os.precision(17);
    os << "exponent p = " << p << " outside the supported range p > 2";
    throw domain_error(os.str());
  }
}

inline double dae_exponent(double p) { return (2.0 * p - 2.0) / (p - 2.0); }

inline double E_p(double lambda, double p) {
  require_exponent(p);
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw domain_error("E_p: lambda must lie in [0, 1]");
  return std::pow(lambda, dae_exponent(p));
}

/// Inverse of E_p. Arguments above 1 are accepted and map above 1; callers flag them
/// as inadmissible.
inline double E_p_inverse(double y, double p) {
  require_exponent(p);
  if (!(y >= 0.0)) throw domain_error("E_p_inverse: argument must be >= 0");
  return std::pow(y, (p - 2.0) / (2.0 * p - 2.0));
}

struct DualityScalars {
  double p = 0.0;
  double xi = 0.0;
  double zeta = 0.0;
  double lambda = 0.0;
  bool admissible = true;  // false when |theta|^2 > 1 forces lambda > 1
};

inline double zeta_of_xi(double xi, double p) {
  require_exponent(p);
  if (!(xi >= 0.0 && xi <= 1.0)) throw domain_error("zeta_of_xi: xi must lie in [0, 1]");
  return 0.5 * std::pow(xi, 0.5 * (p - 2.0));
}

/// Pointwise solution of the dual algebraic equation for a flux magnitude |theta|^2.
inline DualityScalars solve_dae(double theta_norm_sq, double p) {
  require_exponent(p);
  if (!(theta_norm_sq >= 0.0) || !std::isfinite(theta_norm_sq))
    throw domain_error("solve_dae: |theta|^2 must be finite and >= 0");
  DualityScalars s;
  s.p = p;
  s.lambda = E_p_inverse(theta_norm_sq, p);
  s.zeta = 0.5 * s.lambda;
  s.xi = std::pow(s.lambda, 2.0 / (p - 2.0));
  s.admissible = theta_norm_sq <= 1.0;
  return s;
}

inline double psi(double xi, double p) {
  require_exponent(p);
  if (!(xi >= 0.0 && xi <= 1.0)) throw domain_error("psi: xi must lie in [0, 1]");
  return std::pow(xi, 0.5 * p) / p;
}

/// Legendre conjugate of psi: (1 - 2/p) 2^{2/(p-2)} zeta^{p/(p-2)}.
inline double psi_star(double zeta, double p) {
  require_exponent(p);
  if (!(zeta >= 0.0 && zeta <= 0.5)) throw domain_error("psi_star: zeta must lie in [0, 1/2]");
  return (1.0 - 2.0 / p) * std::pow(2.0, 2.0 / (p - 2.0)) * std::pow(zeta, p / (p - 2.0));
}

}  // namespace kplap::duality
