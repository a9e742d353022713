#pragma once

// One-dimensional quadrature building blocks shared by the modules.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace loctime {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order() const { return static_cast<int>(nodes.size()); }
};

/// Rule of the given order; orders 16 and 32 are cached.
const GaussRule& gauss_legendre(int order);

/// Applies a Gauss-Legendre rule mapped to [a, b].
template <typename F>
double gauss_apply(const GaussRule& rule, F&& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

struct Integral1D {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;

  Integral1D& operator+=(const Integral1D& o) {
    value += o.value;
    error += o.error;
    evaluations += o.evaluations;
    return *this;
  }
};

/// Double-exponential (tanh-sinh) quadrature of f over the finite interval
/// [a, b]. Integrable endpoint singularities are allowed; the endpoints
/// themselves are never evaluated. Throws AccuracyError when the achieved
/// error estimate exceeds abs_tol.
Integral1D integrate_interval(const std::function<double(double)>& f, double a, double b, double abs_tol);

/// Same as integrate_interval but splits [a, b] at the given breakpoints and
/// into chunks no longer than max_chunk.
Integral1D integrate_pieces(const std::function<double(double)>& f, double a, double b, double abs_tol,
                            std::span<const double> breakpoints = {}, double max_chunk = 0.0);

/// Node handed to a local integrand: its distances to both ends of the
/// piece. The distance to the nearer end keeps full relative precision.
struct PieceNode {
  double from_lo, from_hi;
};

/// tanh-sinh over a piece of the given width. No accuracy check; l1 receives
/// the integral of |f| for require_accuracy.
Integral1D integrate_piece_local(const std::function<double(const PieceNode&)>& f, double width, double& l1);

/// Throws AccuracyError unless r.error <= max(abs_tol, 1e-14 l1).
void require_accuracy(const Integral1D& r, double l1, double a, double b, double abs_tol);

}  // namespace loctime
