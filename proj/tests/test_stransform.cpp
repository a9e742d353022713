#include <cmath>
#include <numbers>
#include <random>
#include <tuple>

#include "doctest.h"
#include "loctime/errors.hpp"
#include "loctime/stransform.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>

using namespace loctime;
using boost::multiprecision::cpp_dec_float_50;

namespace {

// exp(x) minus its first N Taylor terms at 50 significant digits.
double exp_truncated_oracle(double x, int N) {
  const cpp_dec_float_50 X(x);
  cpp_dec_float_50 term(1), partial(0);
  for (int n = 0; n < N; ++n) {
    partial += term;
    term *= X / (n + 1);
  }
  return static_cast<double>(exp(X) - partial);
}

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

}  // namespace

TEST_CASE("truncated exponential") {
  for (double x : {-3.0, 0.0, 2.0}) CHECK(exp_truncated(x, 0) == std::exp(x));
  for (int N = 1; N < 5; ++N) CHECK(exp_truncated(0.0, N) == 0.0);
  CHECK(exp_truncated(-1.0, 2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  for (int N = 0; N <= 6; ++N) {
    for (double x = -5.0; x <= 5.0; x += 0.25) {
      CAPTURE(N);
      CAPTURE(x);
      const double ref = exp_truncated_oracle(x, N);
      CHECK(std::abs(exp_truncated(x, N) - ref) <= 1e-10 * std::max(1.0, std::exp(x)));
      if (x != 0.0 || N == 0) CHECK(exp_truncated(x, N) == doctest::Approx(ref).epsilon(1e-12));
    }
  }
  for (auto [x, N] : {std::pair{-30.0, 4}, std::pair{-60.0, 3}, std::pair{-60.0, 7}, std::pair{-0.01, 5},
                      std::pair{25.0, 6}, std::pair{-12.0, 40}}) {
    CAPTURE(x);
    CAPTURE(N);
    CHECK(exp_truncated(x, N) == doctest::Approx(exp_truncated_oracle(x, N)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(exp_truncated(1.0, -1), ValidationError);
}

TEST_CASE("admissibility gate") {
  CHECK(admissibility(Hurst(0.5), 1, 0).admissible);
  CHECK_FALSE(admissibility(Hurst(0.5), 2, 0).admissible);
  CHECK(admissibility(Hurst(0.5), 2, 0).minimal_n == 1);
  CHECK(admissibility(Hurst(0.5), 3, 0).minimal_n == 1);
  CHECK(admissibility(Hurst(0.9), 2, 0).minimal_n == 5);
  CHECK_FALSE(admissibility(Hurst(0.9), 2, 4).admissible);
  CHECK(admissibility(Hurst(0.9), 2, 5).admissible);
  CHECK(admissibility_message(Hurst(0.9), 2, 0).find("minimal N = 5") != std::string::npos);
}

TEST_CASE("characteristic exponential") {
  const VectorTestFunction f({TestFunction::gaussian_bump(0.4, 0.3, 0.2)});
  const std::vector<double> zero{0.0}, lam{1.7}, neg{-1.7};
  CHECK(s_char_exp(Hurst(0.3), zero, 0.1, 0.6, f) == std::complex<double>(1.0, 0.0));
  const auto flat = s_char_exp(Hurst(0.3), lam, 0.1, 0.6, VectorTestFunction::zero(1));
  CHECK(flat.imag() == 0.0);
  CHECK(flat.real() == doctest::Approx(std::exp(-0.5 * 1.7 * 1.7 * std::pow(0.5, 0.6))));
  const auto a = s_char_exp(Hurst(0.3), lam, 0.1, 0.6, f);
  const auto b = s_char_exp(Hurst(0.3), neg, 0.1, 0.6, f);
  CHECK(a.real() == doctest::Approx(b.real()).epsilon(1e-14));
  CHECK(a.imag() == doctest::Approx(-b.imag()).epsilon(1e-14));
  CHECK(std::abs(a) <= 1.0);
  const auto swapped = s_char_exp(Hurst(0.3), lam, 0.6, 0.1, f);
  CHECK(swapped.imag() == doctest::Approx(-a.imag()).epsilon(1e-14));
  CHECK_THROWS_AS(s_char_exp(Hurst(0.3), lam, 0.4, 0.4, f), DegenerateIntervalError);
}

TEST_CASE("pointwise delta S-transforms") {
  const DeltaSpec plain(Hurst(0.5), 1);
  const VectorTestFunction zero = VectorTestFunction::zero(1);
  CHECK(s_delta(plain, 0.2, 0.7, zero) == doctest::Approx(kInvSqrt2Pi * std::pow(0.5, -0.5)).epsilon(1e-14));

  // H = 1/2: the pairing is the plain integral of f over [t1, t2].
  const double amp = 0.6, c = 0.4, w = 0.15;
  const VectorTestFunction f({TestFunction::gaussian_bump(amp, c, w)});
  auto F = [&](double x) { return amp * w * std::sqrt(std::numbers::pi / 2.0) * boost::math::erf((x - c) / (w * std::sqrt(2.0))); };
  const double t1 = 0.25, t2 = 0.55, tau = t2 - t1;
  const double v = F(t2) - F(t1);
  const double expected = std::exp(-v * v / (2.0 * tau)) / std::sqrt(2.0 * std::numbers::pi * tau);
  CHECK(s_delta(plain, t1, t2, f) == doctest::Approx(expected).epsilon(1e-10));
  CHECK(s_delta(plain, t2, t1, f) == doctest::Approx(expected).epsilon(1e-10));
  CHECK_THROWS_AS(s_delta(plain, 0.3, 0.3, f), DegenerateIntervalError);

  const DeltaSpec one(Hurst(0.5), 1, 1);
  CHECK(s_delta_truncated(one, t1, t2, f) == doctest::Approx(expected - 1.0 / std::sqrt(2.0 * std::numbers::pi * tau)).epsilon(1e-9));
  CHECK(s_delta_truncated(one, t1, t2, zero) == 0.0);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const double h = 0.1 + 0.8 * u(rng);
    const double a = u(rng), b = u(rng);
    if (a == b) continue;
    const VectorTestFunction g({TestFunction::hermite(k % 4, 0.5, u(rng), 0.3 + u(rng))});
    const DeltaSpec s0(Hurst(h), 1, 0);
    CHECK(s_delta_truncated(s0, a, b, g) == s_delta(s0, a, b, g));
  }
}

TEST_CASE("regularized delta") {
  const VectorTestFunction zero = VectorTestFunction::zero(2);
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1e-6, 1e-4, 1e-2, 1.0}) {
    const DeltaSpec s(Hurst(0.7), 2, 0, eps);
    const double v = s_delta_regularized(s, 0.1, 0.6, zero);
    CHECK(v == doctest::Approx(1.0 / (2.0 * std::numbers::pi * (eps + std::pow(0.5, 1.4)))));
    CHECK(v < prev);
    prev = v;
  }
  const DeltaSpec at(Hurst(0.7), 2, 0, 0.05);
  CHECK(s_delta_regularized(at, 0.3, 0.3, zero) == doctest::Approx(1.0 / (2.0 * std::numbers::pi * 0.05)));

  const VectorTestFunction f({TestFunction::gaussian_bump(0.5, 0.3, 0.2)});
  const double limit = s_delta(DeltaSpec(Hurst(0.4), 1), 0.2, 0.7, f);
  double gap = std::numeric_limits<double>::infinity();
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const double g = std::abs(s_delta_regularized(DeltaSpec(Hurst(0.4), 1, 0, eps), 0.2, 0.7, f) - limit);
    CHECK(g < gap);
    gap = g;
  }
  CHECK_THROWS_AS(s_delta_regularized(DeltaSpec(Hurst(0.4), 1), 0.2, 0.7, f), MisuseError);
}

TEST_CASE("local time S-transform constants") {
  const auto r = s_local_time(DeltaSpec(Hurst(0.5), 1), VectorTestFunction::zero(1), {1e-10, 0.0});
  CHECK(r.value == doctest::Approx(kInvSqrt2Pi * 4.0 / 3.0).epsilon(1e-9));
  try {
    s_local_time(DeltaSpec(Hurst(0.5), 2), VectorTestFunction::zero(2));
    FAIL("expected admissibility error");
  } catch (const AdmissibilityError& e) {
    CHECK(e.minimal_n() == 1);
  }
  const double eps = 0.01;
  const auto reg = s_local_time(DeltaSpec(Hurst(0.5), 2, 0, eps), VectorTestFunction::zero(2), {1e-10, 0.0});
  const double exact = ((1.0 + eps) * std::log((1.0 + eps) / eps) - 1.0) / (2.0 * std::numbers::pi);
  CHECK(reg.value == doctest::Approx(exact).epsilon(1e-9));
  const auto trunc = s_local_time(DeltaSpec(Hurst(0.5), 2, 1), VectorTestFunction::zero(2));
  CHECK(trunc.value == 0.0);
}

TEST_CASE("singular exponent close to 1") {
  // alpha = dH - 2N(1 - H) = 0.9 in each case; f = 0 leaves the power moment.
  for (auto [h, d, n] : {std::tuple{0.9, 1, 0}, std::tuple{0.3, 3, 0}, std::tuple{0.7, 3, 2}}) {
    const DeltaSpec spec(Hurst(h), d, n);
    const double expected = n == 0 ? std::pow(2.0 * std::numbers::pi, -0.5 * d) / (0.1 * 1.1) : 0.0;
    CHECK(s_local_time(spec, VectorTestFunction::zero(d)).value == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("short pairings keep tau exact") {
  const VectorTestFunction f({TestFunction::gaussian_bump(0.4, 0.3, 0.2), TestFunction::hermite(2, 0.3, 0.6, 0.3)});
  for (double h : {0.3, 0.7}) {
    PairingCache cache(Hurst(h), f);
    for (auto [tau, tol, rel] : {std::tuple{9e-5, 1e-13, 1e-7}, std::tuple{1e-6, 1e-12, 1e-5}}) {
      const std::vector<double> direct = pairing_vector(Hurst(h), f, Interval(0.45, 0.45 + tau), tol);
      const std::vector<double>& fast = cache.at(0.45, tau);
      for (int j = 0; j < 2; ++j) CHECK(fast[j] == doctest::Approx(direct[j]).epsilon(rel));
    }
    // Below the spacing of doubles near t1 the interval form cannot see tau.
    const double tiny = 1e-19;
    CHECK(cache.at(0.45, tiny)[0] / tiny == doctest::Approx(cache.at(0.45, 1e-9)[0] / 1e-9).epsilon(1e-6));
  }
}

TEST_CASE("short pairings track the adjoint across the unit interval") {
  const TestFunction narrow = TestFunction::gaussian_bump(0.1, 0.2, 0.05);
  for (double h : {0.1, 0.5, 0.9}) {
    PairingCache cache(Hurst(h), VectorTestFunction({narrow}));
    const double tau = 1e-7;
    for (int i = 0; i <= 40; ++i) {
      const double t = 0.025 * i * (1.0 - tau);
      const double direct = tau * mh_plus_apply(Hurst(h), narrow, t + 0.5 * tau, 1e-12);
      CHECK(std::abs(cache.at(t, tau)[0] - direct) <= 2e-11 * tau);
    }
  }
}

TEST_CASE("local time S-transform against nested quadrature") {
  const double amp = 0.5, c = 0.35, w = 0.2;
  const VectorTestFunction f({TestFunction::gaussian_bump(amp, c, w)});
  auto F = [&](double x) { return amp * w * std::sqrt(std::numbers::pi / 2.0) * boost::math::erf((x - c) / (w * std::sqrt(2.0))); };
  boost::math::quadrature::tanh_sinh<double> ts;
  auto outer = [&](double tau) {
    auto inner = [&](double t1) {
      const double v = F(t1 + tau) - F(t1);
      return std::exp(-v * v / (2.0 * tau));
    };
    return ts.integrate(inner, 0.0, 1.0 - tau) / std::sqrt(2.0 * std::numbers::pi * tau);
  };
  const double exact = ts.integrate(outer, 0.0, 1.0);
  const auto r = s_local_time(DeltaSpec(Hurst(0.5), 1), f, {1e-10, 0.0});
  CHECK(r.value == doctest::Approx(exact).epsilon(1e-8));
}

TEST_CASE("U-estimate envelope") {
  const std::vector<double> zs{0.0, 1.0, 2.0, 4.0};
  const DeltaSpec spec(Hurst(0.5), 1);
  const auto flat = u_estimate_check(spec, VectorTestFunction::zero(1), zs);
  for (const auto& s : flat.samples) CHECK(s.value == doctest::Approx(flat.samples.front().value));
  CHECK(flat.envelope_ok);

  const TestFunction h0 = TestFunction::hermite(0, 0.3, 0.4, 0.3);
  const TestFunction h2 = TestFunction::hermite(2, 0.2, 0.6, 0.3);
  const VectorTestFunction bundle({linear_combination(1.0, h0, 1.0, h2)});
  const auto report = u_estimate_check(spec, bundle, zs);
  CHECK(report.samples.size() == 7);
  CHECK(report.envelope_ok);
  CHECK(report.violations == 0);
  CHECK(report.K2 > 0.0);
  CHECK(report.K2 <= 0.5);
  // S evaluated at z f depends on z f only.
  const auto doubled = u_estimate_check(spec, bundle.scaled(2.0), std::vector<double>{1.0});
  const auto twice = u_estimate_check(spec, bundle, std::vector<double>{2.0});
  CHECK(doubled.samples[0].value == doctest::Approx(twice.samples[0].value).epsilon(1e-9));
  CHECK(doubled.samples[1].value == doctest::Approx(twice.samples[1].value).epsilon(1e-9));
}
