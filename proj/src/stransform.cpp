#include "loctime/stransform.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "loctime/errors.hpp"
#include "loctime/quadrature.hpp"

namespace loctime {

DeltaSpec::DeltaSpec(Hurst H_, int d_, int N_, double eps_) : H(H_), d(d_), N(N_), eps(eps_) {
  if (d < 1) throw ValidationError("dimension d must be >= 1");
  if (N < 0) throw ValidationError("truncation level N must be >= 0");
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ValidationError("regularization eps must be finite and >= 0");
}

bool DeltaSpec::admissible() const { return admissibility(H, d, N).admissible; }

int DeltaSpec::minimal_n() const { return admissibility(H, d, N).minimal_n; }

double DeltaSpec::singular_exponent() const { return d * H.value() - 2.0 * N * (1.0 - H.value()); }

double exp_truncated(double x, int N) {
  if (N < 0) throw ValidationError("truncation level N must be >= 0");
  if (N == 0) return std::exp(x);
  if (x == 0.0) return 0.0;
  if (x > 0.0) return std::exp(x) * boost::math::gamma_p(static_cast<double>(N), x);
  // x^N / (N-1)! int_0^1 e^(x u) (1 - u)^(N-1) du. The integrand lives on
  // u < 40 / |x|; panels are a couple of e-foldings wide and at most 16 wide
  // in polynomial degree.
  const double ax = -x;
  const double upper = std::min(1.0, 40.0 / ax);
  const int panels = std::max({1, static_cast<int>(std::ceil(upper * ax / 2.0)), (N + 15) / 16});
  const auto& rule = gauss_legendre(32);
  auto h = [x, N](double u) { return std::exp(x * u) * std::pow(1.0 - u, N - 1); };
  double integral = 0.0;
  for (int k = 0; k < panels; ++k) integral += gauss_apply(rule, h, upper * k / panels, upper * (k + 1) / panels);
  const double log_pref = N * std::log(ax) - std::lgamma(static_cast<double>(N));
  const double sign = (N % 2 == 0) ? 1.0 : -1.0;
  return sign * std::exp(log_pref) * integral;
}

std::complex<double> s_char_exp(Hurst H, std::span<const double> lambda, double s, double t,
                                const VectorTestFunction& f, double tol) {
  if (s == t) throw DegenerateIntervalError("characteristic exponential needs s != t");
  if (static_cast<int>(lambda.size()) != f.dim()) throw ValidationError("lambda and f must have the same dimension");
  const Interval iv(std::min(s, t), std::max(s, t));
  double lam_sq = 0.0;
  for (double l : lambda) lam_sq += l * l;
  const double modulus = std::exp(-0.5 * lam_sq * std::pow(iv.tau(), 2.0 * H.value()));
  if (lam_sq == 0.0) return {modulus, 0.0};
  const std::vector<double> v = pairing_indicator(H, f, iv, tol);
  double phase = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) phase += lambda[j] * v[j];
  if (t < s) phase = -phase;
  return std::polar(modulus, phase);
}

double s_delta_from_pairing(const DeltaSpec& spec, double tau, double v_sq) {
  const double h = spec.H.value();
  const double d = spec.d;
  if (spec.eps > 0.0) {
    const double var = spec.eps + std::pow(tau, 2.0 * h);
    return std::pow(2.0 * std::numbers::pi * var, -0.5 * d) * exp_truncated(-v_sq / (2.0 * var), spec.N);
  }
  if (!(tau > 0.0)) throw DegenerateIntervalError("unregularized delta needs t1 != t2");
  const double var = std::pow(tau, 2.0 * h);
  return std::pow(2.0 * std::numbers::pi * var, -0.5 * d) * exp_truncated(-v_sq / (2.0 * var), spec.N);
}

namespace {

double pairing_sq(Hurst H, double t1, double t2, const VectorTestFunction& f, double tol) {
  if (f.is_zero() || t1 == t2) return 0.0;
  const std::vector<double> v = pairing_indicator(H, f, Interval(std::min(t1, t2), std::max(t1, t2)), tol);
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return sq;
}

void check_dim(const DeltaSpec& spec, const VectorTestFunction& f) {
  if (f.dim() != spec.d) {
    std::ostringstream msg;
    msg << "test function has " << f.dim() << " components but d = " << spec.d;
    throw ValidationError(msg.str());
  }
}

}  // namespace

double s_delta(const DeltaSpec& spec, double t1, double t2, const VectorTestFunction& f, double tol) {
  if (spec.N != 0 || spec.eps != 0.0) throw MisuseError("s_delta needs N = 0 and eps = 0");
  return s_delta_truncated(spec, t1, t2, f, tol);
}

double s_delta_truncated(const DeltaSpec& spec, double t1, double t2, const VectorTestFunction& f, double tol) {
  if (spec.eps != 0.0) throw MisuseError("s_delta_truncated needs eps = 0; use s_delta_regularized");
  check_dim(spec, f);
  if (t1 == t2) throw DegenerateIntervalError("unregularized delta needs t1 != t2");
  return s_delta_from_pairing(spec, std::abs(t2 - t1), pairing_sq(spec.H, t1, t2, f, tol));
}

double s_delta_regularized(const DeltaSpec& spec, double t1, double t2, const VectorTestFunction& f, double tol) {
  if (!(spec.eps > 0.0)) throw MisuseError("s_delta_regularized needs eps > 0");
  check_dim(spec, f);
  return s_delta_from_pairing(spec, std::abs(t2 - t1), pairing_sq(spec.H, t1, t2, f, tol));
}

std::size_t PairingCache::KeyHash::operator()(const std::pair<double, double>& k) const {
  const auto a = std::bit_cast<std::uint64_t>(k.first);
  const auto b = std::bit_cast<std::uint64_t>(k.second);
  return std::hash<std::uint64_t>{}(a ^ (b * 0x9E3779B97F4A7C15ull));
}

PairingCache::PairingCache(Hurst H, VectorTestFunction f, double tol)
    : H_(H), f_(std::move(f)), tol_(tol), zero_(f_.is_zero()), zeros_(static_cast<std::size_t>(f_.dim()), 0.0) {}

const std::vector<double>& PairingCache::operator()(double t1, double t2) {
  if (zero_) return zeros_;
  const auto key = std::make_pair(t1, t2);
  auto it = table_.find(key);
  if (it != table_.end()) return it->second;
  return table_.emplace(key, pairing_vector(H_, f_, Interval(t1, t2), tol_)).first->second;
}

double PairingCache::squared_norm(double t1, double t2) {
  if (zero_) return 0.0;
  double sq = 0.0;
  for (double x : (*this)(t1, t2)) sq += x * x;
  return sq;
}

const std::vector<double>& PairingCache::at(double t1, double tau) {
  constexpr double kShort = 1e-4;
  if (zero_) return zeros_;
  if (tau >= kShort) return (*this)(t1, t1 + tau);
  const double offset = 0.5 / std::sqrt(3.0);
  short_.resize(static_cast<std::size_t>(f_.dim()));
  for (int j = 0; j < f_.dim(); ++j)
    short_[static_cast<std::size_t>(j)] =
        0.5 * tau * (plus_value(j, t1 + (0.5 - offset) * tau) + plus_value(j, t1 + (0.5 + offset) * tau));
  return short_;
}

namespace {

// Coefficients of the degree n-1 interpolant through Chebyshev-Lobatto
// values on [0, 1], doubling n until the tail drops to the sampling noise.
std::vector<double> chebyshev_fit(const std::function<double(double)>& g, double noise) {
  std::vector<double> values;
  for (int n = 33; n <= 1025; n = 2 * n - 1) {
    const int deg = n - 1;
    values.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) values[static_cast<std::size_t>(k)] = g(0.5 * (1.0 + std::cos(std::numbers::pi * k / deg)));
    std::vector<double> c(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) {
      double sum = 0.0;
      for (int k = 0; k < n; ++k) {
        const double w = (k == 0 || k == deg) ? 0.5 : 1.0;
        sum += w * values[static_cast<std::size_t>(k)] * std::cos(std::numbers::pi * m * k / deg);
      }
      c[static_cast<std::size_t>(m)] = 2.0 * sum / deg;
    }
    c.front() *= 0.5;
    c.back() *= 0.5;
    double scale = 0.0, tail = 0.0;
    for (double x : c) scale = std::max(scale, std::abs(x));
    for (int m = n - 8; m < n; ++m) tail = std::max(tail, std::abs(c[static_cast<std::size_t>(m)]));
    if (tail <= 4.0 * noise + 1e-15 * scale) return c;
  }
  return {};
}

double chebyshev_eval(const std::vector<double>& c, double x) {
  const double y = 2.0 * x - 1.0;
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t m = c.size() - 1; m > 0; --m) {
    const double b0 = 2.0 * y * b1 - b2 + c[m];
    b2 = b1;
    b1 = b0;
  }
  return y * b1 - b2 + c[0];
}

}  // namespace

double PairingCache::plus_value(int j, double x) {
  if (!plus_built_) {
    plus_built_ = true;
    for (const TestFunction& fj : f_.components())
      plus_coeffs_.push_back(chebyshev_fit([&](double u) { return mh_plus_apply(H_, fj, u, tol_); }, tol_));
  }
  const auto& c = plus_coeffs_[static_cast<std::size_t>(j)];
  if (c.empty() || x < 0.0 || x > 1.0) return mh_plus_apply(H_, f_[j], x, tol_);
  return chebyshev_eval(c, x);
}

double PairingCache::squared_norm_at(double t1, double tau) {
  if (zero_) return 0.0;
  double sq = 0.0;
  for (double x : at(t1, tau)) sq += x * x;
  return sq;
}

QuadratureResult s_local_time_scaled(const DeltaSpec& spec, PairingCache& cache, double zsq, Tolerance tol) {
  check_dim(spec, cache.function());
  if (cache.hurst().value() != spec.H.value()) throw MisuseError("pairing cache was built for a different H");
  SingularIntegrandSpec integrand;
  integrand.tol = tol;
  const double h = spec.H.value();
  const double d = spec.d;
  const int N = spec.N;
  if (spec.eps > 0.0) {
    const double eps = spec.eps;
    integrand.alpha = 0.0;
    integrand.g_local = [&cache, h, d, N, eps, zsq](double t1, double tau, auto, auto) {
      const double var = eps + std::pow(tau, 2.0 * h);
      const double v_sq = cache.squared_norm_at(t1, tau);
      return std::pow(2.0 * std::numbers::pi * var, -0.5 * d) * exp_truncated(-zsq * v_sq / (2.0 * var), N);
    };
  } else {
    if (!spec.admissible()) throw AdmissibilityError(admissibility_message(spec.H, spec.d, spec.N), spec.minimal_n());
    integrand.alpha = spec.singular_exponent();
    const double compensate = 2.0 * N * (1.0 - h);
    const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * d);
    integrand.g_local = [&cache, h, N, zsq, compensate, norm](double t1, double tau, auto, auto) {
      const double var = std::pow(tau, 2.0 * h);
      const double v_sq = cache.squared_norm_at(t1, tau);
      const double e = exp_truncated(-zsq * v_sq / (2.0 * var), N);
      if (e == 0.0) return 0.0;
      return norm * std::pow(tau, -compensate) * e;
    };
  }
  return integrate_triangle_singular(integrand);
}

QuadratureResult s_local_time(const DeltaSpec& spec, PairingCache& cache, Tolerance tol) {
  return s_local_time_scaled(spec, cache, 1.0, tol);
}

QuadratureResult s_local_time(const DeltaSpec& spec, const VectorTestFunction& f, Tolerance tol) {
  check_dim(spec, f);
  PairingCache cache(spec.H, f);
  return s_local_time(spec, cache, tol);
}

UEstimateReport u_estimate_check(const DeltaSpec& spec, const VectorTestFunction& f, std::span<const double> z_moduli,
                                 Tolerance tol, double lemma_constant) {
  check_dim(spec, f);
  if (lemma_constant < 0.0 && spec.H.value() == 0.5) lemma_constant = 1.0;
  UEstimateReport report;
  report.k2_bound = lemma_constant >= 0.0 ? 0.5 * lemma_constant * lemma_constant
                                          : std::numeric_limits<double>::quiet_NaN();
  PairingCache cache(spec.H, f);
  const double fn = f.norm();
  for (double r : z_moduli) {
    if (!(r >= 0.0)) throw ValidationError("z moduli must be >= 0");
    for (bool imag : {false, true}) {
      if (imag && r == 0.0) continue;
      const double zsq = imag ? -r * r : r * r;
      const double value = std::abs(s_local_time_scaled(spec, cache, zsq, tol).value);
      report.samples.push_back({r, imag, r * r * fn * fn, value});
    }
  }
  if (report.samples.empty()) return report;
  std::vector<UEstimateSample> sorted = report.samples;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
  const double base = sorted.front().value;
  if (base > 0.0) {
    // Anchor K1 at the smallest |z|; K2 is the steepest log-growth from there.
    for (const auto& s : sorted)
      if (s.x > sorted.front().x && s.value > 0.0)
        report.K2 = std::max(report.K2, std::log(s.value / base) / (s.x - sorted.front().x));
  } else {
    // S(0) = 0 for N >= 1: steepest slope between consecutive nonzero samples.
    const UEstimateSample* prev = nullptr;
    for (const auto& s : sorted) {
      if (!(s.value > 0.0)) continue;
      if (prev && s.x > prev->x) report.K2 = std::max(report.K2, std::log(s.value / prev->value) / (s.x - prev->x));
      prev = &s;
    }
  }
  for (const auto& s : sorted) report.K1 = std::max(report.K1, s.value * std::exp(-report.K2 * s.x));
  for (const auto& s : report.samples)
    if (s.value > report.K1 * std::exp(report.K2 * s.x) * (1.0 + 1e-9)) ++report.violations;
  report.envelope_ok = std::isfinite(report.K1) && std::isfinite(report.K2) && report.violations == 0 &&
                       (std::isnan(report.k2_bound) || report.K2 <= report.k2_bound * (1.0 + 1e-9));
  return report;
}

}  // namespace loctime
