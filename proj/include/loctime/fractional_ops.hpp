#pragma once

// Fractional operators M_H and M_H^+ that carry white noise to fractional
// Brownian motion, B_H(t) = <omega, M_H 1_[0,t]>.

#include <vector>

#include "loctime/test_function.hpp"

namespace loctime {

enum class Regime { rough, classical, persistent };

const char* to_string(Regime r);

/// Hurst parameter H in (0, 1) with exponent a = H - 1/2.
class Hurst {
 public:
  explicit Hurst(double h);

  double value() const { return h_; }
  double a() const { return h_ - 0.5; }
  Regime regime() const;

 private:
  double h_;
};

/// Time interval [s, t] with s < t.
class Interval {
 public:
  Interval(double s, double t);

  double s() const { return s_; }
  double t() const { return t_; }
  double tau() const { return t_ - s_; }

 private:
  double s_, t_;
};

/// K_H = Gamma(H + 1/2) (1/(2H) + int_0^inf ((1+s)^a - s^a)^2 ds)^(-1/2),
/// evaluated by quadrature. Makes |M_H 1_[0,1]|_{L2} = 1.
double normalization_constant(Hurst H, double tol = 1e-13);

/// c_H = K_H / Gamma(H + 1/2), the prefactor of the indicator closed form.
/// Cached per H.
double indicator_prefactor(Hurst H);

/// Closed form of M_H applied to indicators:
/// (M_H 1_[s,t])(x) = c_H [(t - x)_+^a - (s - x)_+^a].
/// Caches c_H so it can sit in inner loops.
class IndicatorKernel {
 public:
  explicit IndicatorKernel(Hurst H);

  Hurst hurst() const { return H_; }
  double prefactor() const { return c_; }

  /// Throws SingularPointError at x in {s, t} when a < 0.
  double operator()(double s, double t, double x) const;
  /// Same value from the offsets ds = s - x, dt = t - x and len = t - s, for
  /// callers that know them more precisely than s, t and x.
  double at_offsets(double ds, double dt, double len) const;
  /// (1 / (hi - lo)) * int_lo^hi (M_H 1_[s,t])(x) dx, exact.
  double cell_average(double s, double t, double lo, double hi) const;

 private:
  Hurst H_;
  double c_;
};

double mh_indicator(Hurst H, const Interval& iv, double x);

/// (M_H^+ f)(x) to absolute accuracy tol. Fractional integral for H > 1/2,
/// Marchaud derivative for H < 1/2, identity for H = 1/2.
double mh_plus_apply(Hurst H, const TestFunction& f, double x, double tol);

/// int f(x) (M_H 1_[s,t])(x) dx by quadrature against the closed form.
double pairing_closed_form(Hurst H, const TestFunction& f, const Interval& iv, double tol);
/// int_s^t (M_H^+ f)(x) dx; the dual route.
double pairing_dual(Hurst H, const TestFunction& f, const Interval& iv, double tol);

/// Component-wise pairing v_j = <f_j, M_H 1_[s,t]>, computed by both routes.
/// Throws ConsistencyError if they disagree by more than 10 tol.
std::vector<double> pairing_indicator(Hurst H, const VectorTestFunction& f, const Interval& iv, double tol);

/// Fast single-route pairing used inside quadratures over the time simplex.
std::vector<double> pairing_vector(Hurst H, const VectorTestFunction& f, const Interval& iv, double tol);

/// |<f, M_H 1_[s,t]>| / (tau (sup|f| + sup|f'| + |f|)); 0 for f = 0.
double lemma_bound_ratio(Hurst H, const TestFunction& f, const Interval& iv, double tol = 1e-10);

/// <M_H 1_[0,s], M_H 1_[0,t]>_{L2} by quadrature of the closed forms.
double indicator_inner_product(Hurst H, double s, double t, double tol = 1e-11);

}  // namespace loctime
