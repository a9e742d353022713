#pragma once

// S-transforms of the Donsker delta of fBm increments, its truncated and
// Gaussian-regularized variants, and of the self-intersection local time
// obtained by integrating them over the time simplex.

#include <complex>
#include <cstddef>
#include <span>
#include <unordered_map>
#include <vector>

#include "loctime/admissibility.hpp"
#include "loctime/fractional_ops.hpp"
#include "loctime/singular_quadrature.hpp"
#include "loctime/test_function.hpp"

namespace loctime {

/// (H, d, N, eps): Hurst index, dimension, number of subtracted chaos orders
/// and Gaussian regularization width.
struct DeltaSpec {
  DeltaSpec(Hurst H, int d, int N = 0, double eps = 0.0);

  Hurst H;
  int d;
  int N;
  double eps;

  /// 2N(1-H) - dH > -1; independent of eps.
  bool admissible() const;
  int minimal_n() const;
  bool regularized() const { return eps > 0.0; }
  /// Small-tau exponent alpha of tau^(-alpha) in the unregularized integrand.
  double singular_exponent() const;
};

/// exp_N(x) = sum_{n >= N} x^n / n!.
double exp_truncated(double x, int N);

/// S-transform of exp(i lambda . (B(t) - B(s))) at f; s != t.
std::complex<double> s_char_exp(Hurst H, std::span<const double> lambda, double s, double t,
                                const VectorTestFunction& f, double tol = 1e-10);

/// Pointwise S-transform from the squared pairing norm |v|^2 at lag tau.
/// Covers every combination of N and eps in spec.
double s_delta_from_pairing(const DeltaSpec& spec, double tau, double v_sq);

/// N = 0, eps = 0.
double s_delta(const DeltaSpec& spec, double t1, double t2, const VectorTestFunction& f, double tol = 1e-10);
/// eps = 0, any N.
double s_delta_truncated(const DeltaSpec& spec, double t1, double t2, const VectorTestFunction& f,
                         double tol = 1e-10);
/// eps > 0, any N; t1 = t2 allowed.
double s_delta_regularized(const DeltaSpec& spec, double t1, double t2, const VectorTestFunction& f,
                           double tol = 1e-10);

/// Memoized pairing vectors v(t1, t2) for one (H, f). Lets repeated
/// simplex quadratures with the same node set share the pairings.
/// Not thread-safe.
class PairingCache {
 public:
  PairingCache(Hurst H, VectorTestFunction f, double tol = 1e-11);

  Hurst hurst() const { return H_; }
  const VectorTestFunction& function() const { return f_; }
  const std::vector<double>& operator()(double t1, double t2);
  double squared_norm(double t1, double t2);
  /// Pairings over [t1, t1 + tau] with tau exact; short intervals use
  /// two-point Gauss on the dual route, accurate to O(tau^4). M_H^+ f is
  /// read from a Chebyshev interpolant on [0, 1] when one converges. Short
  /// results are not stored; the reference lasts until the next call.
  const std::vector<double>& at(double t1, double tau);
  double squared_norm_at(double t1, double tau);
  std::size_t size() const { return table_.size(); }

 private:
  struct KeyHash {
    std::size_t operator()(const std::pair<double, double>& k) const;
  };
  Hurst H_;
  VectorTestFunction f_;
  double tol_;
  bool zero_;
  std::vector<double> zeros_;
  std::unordered_map<std::pair<double, double>, std::vector<double>, KeyHash> table_;
  std::vector<double> short_;
  // Chebyshev coefficients of M_H^+ f_j on [0, 1]; empty if not converged.
  std::vector<std::vector<double>> plus_coeffs_;
  bool plus_built_ = false;
  double plus_value(int j, double x);
};

/// S L^(N)_{H,eps}(f) = int_Delta S delta^(N)(B(t2) - B(t1))(f) d^2t.
/// Throws AdmissibilityError for eps = 0 and an inadmissible spec.
QuadratureResult s_local_time(const DeltaSpec& spec, const VectorTestFunction& f, Tolerance tol = {1e-9, 0.0});
QuadratureResult s_local_time(const DeltaSpec& spec, PairingCache& cache, Tolerance tol = {1e-9, 0.0});

/// S L at z f for z^2 = zsq real, i.e. z on the real or imaginary axis.
QuadratureResult s_local_time_scaled(const DeltaSpec& spec, PairingCache& cache, double zsq, Tolerance tol);

struct UEstimateSample {
  double z_modulus;
  bool imaginary_axis;
  /// |z|^2 |||f|||^2
  double x;
  double value;
};

struct UEstimateReport {
  std::vector<UEstimateSample> samples;
  double K1 = 0.0;
  double K2 = 0.0;
  /// C_H^2 / 2 when C_H is known, NaN otherwise.
  double k2_bound;
  std::size_t violations = 0;
  bool envelope_ok = false;
};

/// Evaluates |S L(z f)| for z = r and z = i r, r in z_moduli, and fits the
/// envelope |S L(z f)| <= K1 exp(K2 |z|^2 |||f|||^2). lemma_constant is C_H
/// if known (pass a negative value otherwise; H = 1/2 defaults to 1).
UEstimateReport u_estimate_check(const DeltaSpec& spec, const VectorTestFunction& f, std::span<const double> z_moduli,
                                 Tolerance tol = {1e-9, 0.0}, double lemma_constant = -1.0);

}  // namespace loctime
