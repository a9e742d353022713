#pragma once

// Quadrature over the time simplex {0 < t1 < t2 < 1} for integrands with a
// power-law singularity tau^(-alpha) in tau = t2 - t1.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace loctime {

/// Absolute/relative tolerance pair: met when err <= max(abs, rel * |value|).
struct Tolerance {
  double abs = 1e-10;
  double rel = 0.0;

  double bound(double value) const;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t evaluations = 0;
};

using TriangleIntegrand = std::function<double(double t1, double t2)>;

struct SingularIntegrandSpec {
  /// Integrand is tau^(-alpha) * g(t1, t2).
  double alpha = 0.0;
  /// Bounded factor on the simplex; may be left empty when g_local is set.
  TriangleIntegrand g;
  Tolerance tol;
  /// Values c where g is not smooth along t1 = c or t2 = c.
  std::vector<double> breakpoints;
  /// Optional replacement for g, called as g_local(t1, tau, d1, d2) with tau
  /// exact (t1 + tau rounds to t1 for tiny tau) and d1[j] = t1 - c_j,
  /// d2[j] = t1 + tau - c_j over the sorted distinct breakpoints in (0, 1).
  /// Offsets from a piece end are exact, so factors singular at t = c_j stay
  /// accurate.
  std::function<double(double, double, std::span<const double>, std::span<const double>)> g_local;

  bool integrable() const { return alpha < 1.0; }
};

/// int_Delta tau^(-alpha) d^2t = 1 / ((1 - alpha)(2 - alpha)); alpha < 1.
double triangle_power_moment(double alpha);

/// int_0^1 tau^(-alpha) G(tau) dtau for bounded G, alpha < 1. Geometric panels
/// toward 0 with Gauss-Legendre 16/32 per panel, the innermost panel mapped by
/// tau = v^(1/(1-alpha)). G may be non-smooth at tau_breaks.
QuadratureResult integrate_power_singular(const std::function<double(double)>& G, double alpha, Tolerance tol,
                                          std::span<const double> tau_breaks = {});

QuadratureResult integrate_triangle_singular(const SingularIntegrandSpec& spec);

struct ProbePoint {
  double cutoff;
  double value;
};

/// int_{tau > kappa} tau^(-alpha) g d^2t for each cutoff kappa in (0, 1).
std::vector<ProbePoint> divergence_probe(const SingularIntegrandSpec& spec, std::span<const double> cutoffs);

}  // namespace loctime
