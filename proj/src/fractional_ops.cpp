#include "loctime/fractional_ops.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "loctime/errors.hpp"
#include "loctime/quadrature.hpp"
#include "loctime/singular_quadrature.hpp"

namespace loctime {

const char* to_string(Regime r) {
  switch (r) {
    case Regime::rough:
      return "rough";
    case Regime::classical:
      return "classical";
    case Regime::persistent:
      return "persistent";
  }
  return "unknown";
}

Hurst::Hurst(double h) : h_(h) {
  if (!(h > 0.0 && h < 1.0)) {
    std::ostringstream msg;
    msg << "Hurst parameter must lie in (0, 1), got " << h;
    throw ValidationError(msg.str());
  }
}

Regime Hurst::regime() const {
  if (h_ < 0.5) return Regime::rough;
  if (h_ > 0.5) return Regime::persistent;
  return Regime::classical;
}

Interval::Interval(double s, double t) : s_(s), t_(t) {
  if (!(s < t)) {
    std::ostringstream msg;
    msg << "interval needs s < t, got [" << s << ", " << t << "]";
    throw DegenerateIntervalError(msg.str());
  }
}

double normalization_constant(Hurst H, double tol) {
  const double a = H.a();
  if (a == 0.0) return 1.0;
  const Tolerance t{tol, tol};
  // int_0^1 ((1+s)^a - s^a)^2 ds
  QuadratureResult near;
  if (a < 0.0) {
    auto G = [a](double s) {
      const double r = 1.0 - std::exp(a * (std::log1p(s) - std::log(s)));
      return r * r;
    };
    near = integrate_power_singular(G, -2.0 * a, t);
  } else {
    auto G = [a](double s) {
      const double r = std::pow(1.0 + s, a) - std::pow(s, a);
      return r * r;
    };
    near = integrate_power_singular(G, 0.0, t);
  }
  // int_1^inf, mapped by s = 1/u onto int_0^1 u^(-2a) (expm1(a log1p(u)) / u)^2 du
  auto G_far = [a](double u) {
    const double r = std::expm1(a * std::log1p(u)) / u;
    return r * r;
  };
  const QuadratureResult far = integrate_power_singular(G_far, 2.0 * a, t);
  const double h = H.value();
  return std::tgamma(h + 0.5) / std::sqrt(1.0 / (2.0 * h) + near.value + far.value);
}

double indicator_prefactor(Hurst H) {
  static std::mutex mu;
  static std::map<double, double> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(H.value());
    if (it != cache.end()) return it->second;
  }
  const double c = normalization_constant(H) / std::tgamma(H.value() + 0.5);
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(H.value(), c);
  return c;
}

IndicatorKernel::IndicatorKernel(Hurst H) : H_(H), c_(indicator_prefactor(H)) {}

double IndicatorKernel::operator()(double s, double t, double x) const {
  const double a = H_.a();
  if (a == 0.0) return (x >= s && x <= t) ? 1.0 : 0.0;
  if (a < 0.0 && (x == s || x == t)) {
    std::ostringstream msg;
    msg << "M_H 1_[s,t] is unbounded at the endpoint x = " << x << " for H < 1/2";
    throw SingularPointError(msg.str());
  }
  return at_offsets(s - x, t - x, t - s);
}

double IndicatorKernel::at_offsets(double ds, double dt, double len) const {
  const double a = H_.a();
  if (dt <= 0.0) return 0.0;
  if (a == 0.0) return ds <= 0.0 ? 1.0 : 0.0;
  if (ds <= 0.0) return c_ * std::pow(dt, a);
  return c_ * std::pow(ds, a) * std::expm1(a * std::log1p(len / ds));
}

double IndicatorKernel::cell_average(double s, double t, double lo, double hi) const {
  const double a = H_.a();
  const double b = a + 1.0;
  if (hi <= s && a != 0.0) {
    // Cell left of s: with u = s - x, int ((u + tau)^a - u^a) du has the
    // antiderivative u^b expm1(b log1p(tau / u)) / b, free of cancellation
    // however far the cell is.
    const double tau = t - s;
    auto G = [tau, b](double u) {
      return u > 0.0 ? std::pow(u, b) * std::expm1(b * std::log1p(tau / u)) : std::pow(tau, b);
    };
    return c_ * (G(s - lo) - G(s - hi)) / (b * (hi - lo));
  }
  auto F = [b](double u, double x) { return u > x ? std::pow(u - x, b) : 0.0; };
  const double integral = (F(t, lo) - F(t, hi) - F(s, lo) + F(s, hi)) / b;
  return c_ * integral / (hi - lo);
}

double mh_indicator(Hurst H, const Interval& iv, double x) { return IndicatorKernel(H)(iv.s(), iv.t(), x); }

double mh_plus_apply(Hurst H, const TestFunction& f, double x, double tol) {
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  const double a = H.a();
  if (a == 0.0) return f(x);
  if (f.is_zero()) return 0.0;
  const double K = normalization_constant(H);
  const double lo = f.support_lo(), hi = f.support_hi();
  const double scale = f.length_scale();

  if (a > 0.0) {
    // K_H / Gamma(a) int_0^inf f(x - u) u^(a-1) du, f(x - u) negligible
    // unless x - u lies in the support.
    const double pref = K / std::tgamma(a);
    const double u0 = std::max(0.0, x - hi);
    const double u1 = x - lo;
    if (u1 <= 0.0) return 0.0;
    const double budget = 0.5 * tol / pref;
    double sum = 0.0;
    double start = u0;
    if (u0 == 0.0) {
      // u = w^(1/a) removes the endpoint singularity: u^(a-1) du = dw / a.
      const double u_split = std::min(u1, scale);
      auto h = [&](double w) { return f(x - std::pow(w, 1.0 / a)) / a; };
      sum += integrate_interval(h, 0.0, std::pow(u_split, a), 0.5 * budget).value;
      start = u_split;
    }
    if (u1 > start) {
      auto h = [&](double u) { return f(x - u) * std::pow(u, a - 1.0); };
      sum += integrate_pieces(h, start, u1, 0.5 * budget, {}, scale).value;
    }
    return pref * sum;
  }

  // Marchaud form: (-a) K_H / Gamma(a+1) int_0^inf (f(x) - f(x-y)) y^(a-1) dy.
  const double pref = -a * K / std::tgamma(a + 1.0);
  const double b = a + 1.0;
  const double fx = f(x);
  double sum = 0.0;
  double delta = 0.0;
  const double fp_sup = f.sup_deriv_norm();
  if (fp_sup > 0.0) {
    // |f(x) - f(x-y)| <= y sup|f'| bounds the inner segment by
    // pref sup|f'| delta^b / b; delta puts that below tol / 2.
    delta = std::pow(tol * b / (2.0 * pref * fp_sup), 1.0 / b);
    delta = std::min(delta, scale);
    sum += f.derivative(x) * std::pow(delta, b) / b;
  }
  const double y_lo = std::max(delta, x - hi);
  const double y_hi = std::max(delta, x - lo);
  // f(x - y) vanishes for y outside [y_lo, y_hi].
  if (y_lo > delta) sum += fx * (std::pow(y_lo, a) - (delta > 0.0 ? std::pow(delta, a) : 0.0)) / a;
  sum += fx * std::pow(y_hi, a) / (-a);
  // (f(x) - f(x - y)) / y, as the mean of f' over [x - y, x] when the plain
  // difference would cancel.
  const auto& g8 = gauss_legendre(8);
  auto quotient = [&](double y) {
    if (y > 0.1 * scale) return (fx - f(x - y)) / y;
    return gauss_apply(g8, [&](double u) { return f.derivative(x - y * u); }, 0.0, 1.0);
  };
  if (y_hi > y_lo) {
    const double budget = 0.25 * tol / pref;
    double start = y_lo;
    if (y_lo == delta) {
      // w = y^b: y^(a-1) dy = dw / (b y).
      const double y_mid = std::min(y_hi, std::max(delta, scale));
      if (y_mid > delta) {
        auto h = [&](double w) {
          const double y = std::pow(w, 1.0 / b);
          return quotient(y) / b;
        };
        sum += integrate_interval(h, std::pow(delta, b), std::pow(y_mid, b), 0.5 * budget).value;
      }
      start = y_mid;
    }
    if (y_hi > start) {
      auto h = [&](double y) { return quotient(y) * std::pow(y, a); };
      sum += integrate_pieces(h, start, y_hi, 0.5 * budget, {}, scale).value;
    }
  }
  return pref * sum;
}

double pairing_closed_form(Hurst H, const TestFunction& f, const Interval& iv, double tol) {
  if (f.is_zero()) return 0.0;
  const double lo = f.support_lo(), hi = f.support_hi();
  const double s = iv.s(), t = iv.t(), tau = iv.tau();
  const double a = H.a();
  const double c = indicator_prefactor(H);
  const double scale = f.length_scale();
  // Both pieces are integrated in the distance to their singular endpoint so
  // the singularity sits where doubles are dense.
  double sum = 0.0;
  // x = t - w in (s, t).
  const double w_lo = std::max(0.0, t - hi), w_hi = std::min(tau, t - lo);
  if (w_hi > w_lo) {
    auto h = [&](double w) { return f(t - w) * (a == 0.0 ? 1.0 : std::pow(w, a)); };
    sum += integrate_pieces(h, w_lo, w_hi, 0.5 * tol / c, {}, scale).value;
  }
  // x = s - y < s.
  const double y_lo = std::max(0.0, s - hi), y_hi = s - lo;
  if (a != 0.0 && y_hi > y_lo) {
    auto h = [&](double y) { return f(s - y) * std::pow(y, a) * std::expm1(a * std::log1p(tau / y)); };
    sum += integrate_pieces(h, y_lo, y_hi, 0.5 * tol / c, {}, scale).value;
  }
  return c * sum;
}

double pairing_dual(Hurst H, const TestFunction& f, const Interval& iv, double tol) {
  if (f.is_zero()) return 0.0;
  const double s = iv.s(), t = iv.t(), tau = iv.tau();
  if (H.a() == 0.0) {
    auto h = [&](double x) { return f(x); };
    return integrate_pieces(h, s, t, tol, {}, f.length_scale()).value;
  }
  const double inner_tol = 0.25 * tol / tau;
  const int chunks = std::max(1, static_cast<int>(std::ceil(tau / (0.5 * f.length_scale()))));
  const auto& rule = gauss_legendre(16);
  auto mplus = [&](double x) { return mh_plus_apply(H, f, x, inner_tol); };
  double sum = 0.0;
  for (int k = 0; k < chunks; ++k) {
    const double a = s + tau * k / chunks;
    const double b = s + tau * (k + 1) / chunks;
    sum += gauss_apply(rule, mplus, a, b);
  }
  return sum;
}

std::vector<double> pairing_vector(Hurst H, const VectorTestFunction& f, const Interval& iv, double tol) {
  std::vector<double> v(static_cast<std::size_t>(f.dim()));
  for (int j = 0; j < f.dim(); ++j) v[static_cast<std::size_t>(j)] = pairing_closed_form(H, f[j], iv, tol);
  return v;
}

std::vector<double> pairing_indicator(Hurst H, const VectorTestFunction& f, const Interval& iv, double tol) {
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  std::vector<double> v = pairing_vector(H, f, iv, 0.5 * tol);
  for (int j = 0; j < f.dim(); ++j) {
    const double dual = pairing_dual(H, f[j], iv, 0.5 * tol);
    const double gap = std::abs(dual - v[static_cast<std::size_t>(j)]);
    if (gap > 10.0 * tol) {
      std::ostringstream msg;
      msg << "pairing routes disagree for component " << j << ": closed form " << v[static_cast<std::size_t>(j)]
          << " vs dual " << dual;
      throw ConsistencyError(msg.str(), v[static_cast<std::size_t>(j)], gap);
    }
  }
  return v;
}

double lemma_bound_ratio(Hurst H, const TestFunction& f, const Interval& iv, double tol) {
  const double denom = iv.tau() * f.triple_norm();
  if (denom == 0.0) return 0.0;
  return std::abs(pairing_closed_form(H, f, iv, tol)) / denom;
}

double indicator_inner_product(Hurst H, double s, double t, double tol) {
  if (s < 0.0 || t < 0.0) throw ValidationError("indicator inner product needs s, t >= 0");
  if (s == 0.0 || t == 0.0) return 0.0;
  const double a = H.a();
  const double c = indicator_prefactor(H);
  const double m = std::min(s, t);
  // (0, min(s,t)): both kernels are c (u - x)^a; w = min(s,t) - x.
  auto inside = [&](double w) { return std::pow(t - m + w, a) * std::pow(s - m + w, a); };
  double total = integrate_interval(inside, 0.0, m, tol / 3.0).value;
  if (a == 0.0) return total;
  // x = -y < 0, with (u + y)^a - y^a written to avoid cancellation for y >> u.
  auto diff = [a](double u, double y) {
    if (y < u) return std::pow(u + y, a) - std::pow(y, a);
    return std::pow(y, a) * std::expm1(a * std::log1p(u / y));
  };
  auto left_near = [&](double y) { return diff(t, y) * diff(s, y); };
  total += integrate_interval(left_near, 0.0, 1.0, tol / 3.0).value;
  // y = 1/u: u^(-2a) (expm1(a log1p(t u)) / u) (expm1(a log1p(s u)) / u).
  auto left_far = [&](double u) {
    return std::pow(u, -2.0 * a) * (std::expm1(a * std::log1p(t * u)) / u) * (std::expm1(a * std::log1p(s * u)) / u);
  };
  total += integrate_interval(left_far, 0.0, 1.0, tol / 3.0).value;
  return c * c * total;
}

}  // namespace loctime
