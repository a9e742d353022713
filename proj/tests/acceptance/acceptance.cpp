// Acceptance checks. Each criterion prints one PASS/FAIL line; the process
// exits nonzero when any selected criterion fails.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "loctime/admissibility.hpp"
#include "loctime/chaos_kernels.hpp"
#include "loctime/errors.hpp"
#include "loctime/fbm_mc.hpp"
#include "loctime/fractional_ops.hpp"
#include "loctime/singular_quadrature.hpp"
#include "loctime/stransform.hpp"
#include "runner.hpp"

using namespace loctime;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

// ---------------------------------------------------------------------------

// Squared norm of the indicator image by direct quadrature of the pointwise
// kernel: tanh-sinh on (0, t), exp-sinh on the left half line.
double independent_norm_sq(Hurst H, double t) {
  boost::math::quadrature::tanh_sinh<double> inner;
  boost::math::quadrature::exp_sinh<double> outer;
  auto sq = [&](double x) {
    const double v = mh_indicator(H, Interval(0.0, t), x);
    return v * v;
  };
  // Near x = t evaluate on the translate (-t, 0) so the distance to the
  // endpoint is exact.
  auto sq_shifted = [&](double u) {
    const double v = mh_indicator(H, Interval(-t, 0.0), -u);
    return v * v;
  };
  const double right = inner.integrate([&](double x) { return sq(x); }, 0.0, 0.5 * t, 1e-12) +
                       inner.integrate(sq_shifted, 0.0, 0.5 * t, 1e-12);
  const double near = inner.integrate([&](double u) { return sq(-u); }, 0.0, t, 1e-12);
  const double far = outer.integrate([&](double u) { return sq(-t - u); }, 0.0, std::numeric_limits<double>::infinity(), 1e-12);
  return right + near + far;
}

Verdict normalization() {
  double worst_lib = 0.0, worst_ind = 0.0;
  for (int k = 1; k <= 9; ++k) {
    const Hurst H(0.1 * k);
    for (double t : {0.25, 0.5, 1.0, 2.0}) {
      const double exact = std::pow(t, 2.0 * H.value());
      worst_lib = std::max(worst_lib, std::abs(indicator_inner_product(H, t, t, 1e-12) - exact));
      worst_ind = std::max(worst_ind, std::abs(independent_norm_sq(H, t) - exact));
    }
  }
  return {worst_lib <= 1e-6 && worst_ind <= 1e-6,
          fmt("max |norm^2 - t^2H|: closed form %.2e, pointwise quadrature %.2e (limit 1e-6)", worst_lib, worst_ind)};
}

TestFunction random_function(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  if (U(rng) < 0.5)
    return TestFunction::gaussian_bump(0.2 + 1.8 * U(rng), -0.5 + 2.0 * U(rng), 0.05 + 0.5 * U(rng));
  const auto n = static_cast<unsigned>(std::uniform_int_distribution<int>(0, 6)(rng));
  return TestFunction::hermite(n, 0.2 + 1.8 * U(rng), -0.5 + 2.0 * U(rng), 0.05 + 0.4 * U(rng));
}

Verdict duality() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const Hurst H(0.05 + 0.9 * U(rng));
    const TestFunction f = random_function(rng);
    const double tau = std::pow(10.0, -4.0 * U(rng));
    const double s = -0.5 + 1.5 * U(rng);
    const Interval iv(s, s + tau);
    const double a = pairing_closed_form(H, f, iv, 1e-9);
    const double b = pairing_dual(H, f, iv, 1e-9);
    worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
  }
  return {worst <= 1e-6, fmt("max scaled route gap over 100 cases %.2e (limit 1e-6)", worst)};
}

// Three decades toward tau -> 0 carry the flatness check. The top decade
// [1e-1, 1) is reported and must not exceed them: there the pairing averages
// M_H^+ f over a long interval, so its maximum can only be smaller.
Verdict lemma_bound() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  bool finite = true, flat = true;
  std::ostringstream detail;
  int cases = 0;
  for (double h : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const Hurst H(h);
    double decade_max[4] = {0.0, 0.0, 0.0, 0.0};
    for (int pair = 0; pair < 50; ++pair) {
      const TestFunction f = random_function(rng);
      const double s = -0.5 + 1.5 * U(rng);
      for (int k = 0; k < 10; ++k) {
        // Decades [1e-4, 1e-3), [1e-3, 1e-2), [1e-2, 1e-1); every tenth case in [1e-1, 1).
        const int decade = k == 9 ? 3 : k % 3;
        const double tau = std::pow(10.0, -4.0 + decade + U(rng));
        const double r = lemma_bound_ratio(H, f, Interval(s, s + tau), 1e-11);
        finite = finite && std::isfinite(r);
        decade_max[decade] = std::max(decade_max[decade], r);
        ++cases;
      }
    }
    const double hi = std::max({decade_max[0], decade_max[1], decade_max[2]});
    const double lo = std::min({decade_max[0], decade_max[1], decade_max[2]});
    flat = flat && hi <= 1.2 * lo && decade_max[3] <= 1.2 * hi;
    detail << fmt(" H=%.1f:[%.3g %.3g %.3g | %.3g]", h, decade_max[0], decade_max[1], decade_max[2], decade_max[3]);
  }
  return {finite && flat && cases == 2500,
          fmt("%d cases, finite=%d, per-decade max C_H from tau~1e-4 upward (last: [0.1, 1)):", cases, finite) +
              detail.str()};
}

Verdict quadrature_oracle() {
  double worst = 0.0;
  for (double alpha : {-1.0, 0.0, 0.25, 0.5, 0.75, 0.9, 0.99}) {
    SingularIntegrandSpec spec;
    spec.alpha = alpha;
    spec.g = [](double, double) { return 1.0; };
    spec.tol = {0.0, 1e-11};
    const double exact = 1.0 / ((1.0 - alpha) * (2.0 - alpha));
    worst = std::max(worst, std::abs(integrate_triangle_singular(spec).value / exact - 1.0));
  }
  SingularIntegrandSpec spec;
  spec.alpha = 1.0;
  spec.g = [](double, double) { return 1.0; };
  spec.tol = {1e-12, 0.0};
  const std::vector<double> kappas{1e-2, 1e-3, 1e-4, 1e-5};
  const auto probe = divergence_probe(spec, kappas);
  double worst_log = 0.0;
  for (std::size_t i = 1; i < probe.size(); ++i)
    worst_log = std::max(worst_log, std::abs((probe[i].value - probe[i - 1].value) / std::log(10.0) - 1.0));
  return {worst <= 1e-8 && worst_log <= 0.02,
          fmt("power moments max rel err %.2e (limit 1e-8); alpha=1 decade steps off ln 10 by at most %.2f%% (limit 2%%)",
              worst, 100.0 * worst_log)};
}

Verdict admissibility_gate() {
  const int expected_min[][4] = {{5, 1, 0, 0}, {5, 2, 1, 0}, {5, 3, 1, 0}, {9, 2, 5, 0}};
  bool table = true;
  std::ostringstream detail;
  for (const auto& row : expected_min) {
    const double h = row[0] / 10.0;
    const int got = admissibility(Hurst(h), row[1], 0).minimal_n;
    table = table && got == row[2];
    detail << fmt(" H=%.1f,d=%d->N=%d", h, row[1], got);
  }
  int mismatches = 0, checked = 0;
  for (int k = 1; k <= 9; ++k)
    for (int d = 1; d <= 3; ++d)
      for (int N = 0; N <= 6; ++N) {
        const Hurst H(0.1 * k);
        const bool ok = admissibility(H, d, N).admissible;
        bool rejected = false;
        try {
          s_local_time(DeltaSpec(H, d, N, 0.0), VectorTestFunction::zero(d));
        } catch (const AdmissibilityError&) {
          rejected = true;
        }
        mismatches += rejected == ok;
        if (N <= 3) {
          std::vector<int> orders(static_cast<std::size_t>(d), 0);
          orders[0] = N;
          const KernelIndex idx(orders);
          // Points past t = 1 give a zero kernel right after the gate, which
          // is all this sweep needs; unit tests cover the quadrature.
          const std::vector<double> u(static_cast<std::size_t>(2 * N), 1.5);
          bool kernel_rejected = false;
          try {
            kernel_value(H, d, idx, KernelArgument(idx, u));
          } catch (const AdmissibilityError&) {
            kernel_rejected = true;
          }
          mismatches += kernel_rejected == ok;
        }
        ++checked;
      }
  std::ostringstream sink;
  const std::string out = (std::filesystem::temp_directory_path() / "loctime_acceptance_gate").string();
  const int exit_bad = cli::run_cli({"kernels", "--H", "0.5", "--d", "2", "--N", "0", "--out", out}, sink, sink);
  const int exit_good = cli::run_cli({"stransform", "--H", "0.5", "--d", "2", "--N", "1", "--out", out}, sink, sink);
  return {table && mismatches == 0 && exit_bad == 4 && exit_good == 0,
          fmt("minimal N table ok=%d;", table) + detail.str() +
              fmt("; %d (H,d,N) gate mismatches over %d; CLI exit codes %d (inadmissible) %d (admissible)", mismatches,
                  checked, exit_bad, exit_good)};
}

Verdict analytic_constant() {
  const double v = s_local_time(DeltaSpec(Hurst(0.5), 1, 0, 0.0), VectorTestFunction::zero(1), {1e-12, 0.0}).value;
  const double exact = kInvSqrt2Pi * 4.0 / 3.0;
  return {std::abs(v - exact) <= 1e-8, fmt("value %.12f, closed form %.12f, gap %.2e (limit 1e-8)", v, exact, std::abs(v - exact))};
}

Verdict mc_expectation() {
  bool all = true;
  std::ostringstream detail;
  const int m = 256;
  for (double h : {0.3, 0.5, 0.7})
    for (int d : {1, 2}) {
      const Hurst H(h);
      const auto zero = VectorTestFunction::zero(d);
      const double exact = s_local_time(DeltaSpec(H, d, 0, 0.01), zero, {1e-10, 0.0}).value;
      const auto ens = sample_paths_cholesky(H, d, uniform_time_grid(2 * m), 20000, 20260101, static_cast<std::uint64_t>(10 * h + d));
      const GridComparison cmp = mc_grid_comparison(ens, zero, 0.01, 0);
      // Bias at m bounded from the m vs 2m difference assuming at least
      // first-order convergence of the simplex rule.
      const double bias = 2.0 * cmp.difference;
      const double gap = std::abs(cmp.coarse.mean - exact);
      const double budget = 3.0 * cmp.coarse.std_error + bias;
      const double true_bias = grid_expectation(ens, zero, 0.01, 0, 2) - exact;
      all = all && gap <= budget;
      detail << fmt(" (H=%.1f,d=%d: mc %.5f se %.1e analytic %.5f bias %.2e [exact-law %.2e] gap/budget %.2f)", h, d,
                    cmp.coarse.mean, cmp.coarse.std_error, exact, bias, true_bias, gap / budget);
    }
  return {all, "m=256 vs 512, 2e4 paths:" + detail.str()};
}

Verdict mc_stransform() {
  bool all = true;
  std::ostringstream detail;
  const double unit_norm = VectorTestFunction({TestFunction::gaussian_bump(1.0, 0.5, 0.3)}).norm();
  const VectorTestFunction f({TestFunction::gaussian_bump(0.5 / unit_norm, 0.5, 0.3)});
  for (double h : {0.5, 0.7}) {
    const Hurst H(h);
    const WhiteNoiseGrid grid(H, 1.0 / 512, 1.0, 31337, static_cast<std::uint64_t>(10 * h));
    const auto ens = sample_paths_whitenoise(H, 1, uniform_time_grid(256), grid, 20000);
    const McEstimate w = mc_wick_weight_mean(ens, f);
    const bool wick_ok = std::abs(w.mean - 1.0) <= 3.0 * w.std_error;
    all = all && wick_ok;
    detail << fmt(" (H=%.1f wick %.4f se %.1e)", h, w.mean, w.std_error);
    for (int N : {0, 1}) {
      const double exact = s_local_time(DeltaSpec(H, 1, N, 0.01), f, {1e-10, 0.0}).value;
      const McEstimate est = mc_s_transform(ens, f, 0.01, N);
      const double z = (est.mean - exact) / est.std_error;
      all = all && std::abs(z) <= 3.0;
      detail << fmt(" (H=%.1f,N=%d: mc %.5f se %.1e analytic %.5f z %.2f)", h, N, est.mean, est.std_error, exact, z);
    }
  }
  return {all, fmt("|f| = %.3f, m=256, 2e4 paths:", f.norm()) + detail.str()};
}

Verdict eps_convergence() {
  bool all = true;
  std::ostringstream detail;
  const struct {
    double h;
    int d, N;
  } cases[] = {{0.5, 1, 0}, {0.3, 2, 0}, {0.7, 2, 2}};
  for (const auto& c : cases) {
    const Hurst H(c.h);
    const VectorTestFunction f = VectorTestFunction(std::vector<TestFunction>(
        static_cast<std::size_t>(c.d), TestFunction::gaussian_bump(0.3, 0.5, 0.25)));
    PairingCache cache(H, f);
    const double limit = s_local_time(DeltaSpec(H, c.d, c.N, 0.0), cache, {1e-11, 0.0}).value;
    double prev = std::numeric_limits<double>::infinity();
    bool monotone = true;
    double gap = 0.0;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
      gap = std::abs(s_local_time(DeltaSpec(H, c.d, c.N, eps), cache, {1e-11, 0.0}).value - limit);
      monotone = monotone && gap < prev;
      prev = gap;
    }
    const double rel = gap / std::abs(limit);
    all = all && monotone && rel < 1e-3;
    detail << fmt(" (H=%.1f,d=%d,N=%d: monotone %d, final relative gap %.2e)", c.h, c.d, c.N, monotone, rel);
  }
  return {all, "limit 1e-3:" + detail.str()};
}

Verdict chaos_closure() {
  bool all = true;
  std::ostringstream detail;
  const Hurst H(0.5);
  const std::vector<TestFunction> fs{TestFunction::gaussian_bump(1.0, 0.4, 0.3), TestFunction::hermite(1, 1.0, 0.5, 0.3),
                                     TestFunction::hermite(2, 1.0, 0.3, 0.4)};
  for (double eps : {0.0, 0.01})
    for (const TestFunction& g : fs) {
      const VectorTestFunction unit({g});
      const VectorTestFunction f = unit.scaled(0.09 / unit.norm());
      if (f.norm() > 0.1) return {false, fmt("test function norm %.3f exceeds 0.1", f.norm())};
      const DeltaSpec spec(H, 1, 0, eps);
      const SeriesReport series = series_reconstruction(spec, f, 4, {1e-10, 0.0});
      const double direct = s_local_time(spec, f, {1e-11, 0.0}).value;
      const double gap = std::abs(series.partial_sum - direct);
      all = all && gap <= 1e-6;
      detail << fmt(" %.1e", gap);
    }
  bool zeros = true;
  for (const std::vector<int>& raw : {std::vector<int>{1}, std::vector<int>{3}, std::vector<int>{1, 2}, std::vector<int>{2, 3}}) {
    const int points = [&] {
      int s = 0;
      for (int v : raw) s += v + (v % 2);
      return s;
    }();
    const std::vector<double> u(static_cast<std::size_t>(points), 0.3);
    zeros = zeros && chaos_kernel(Hurst(0.5), static_cast<int>(raw.size()), raw, 0.0, u) == 0.0 &&
            chaos_kernel(Hurst(0.7), static_cast<int>(raw.size()), raw, 0.01, u) == 0.0;
  }
  return {all && zeros, fmt("odd kernels exactly zero=%d; |series - direct| (limit 1e-6):", zeros) + detail.str()};
}

Verdict divergence() {
  const DeltaSpec dspec(Hurst(0.6), 2, 0, 0.0);
  SingularIntegrandSpec spec;
  spec.alpha = dspec.singular_exponent();
  spec.g = [](double, double) { return 1.0 / (2.0 * std::numbers::pi); };
  spec.tol = {1e-12, 0.0};
  const std::vector<double> kappas{1e-1, 1e-2, 1e-3, 1e-4};
  const auto probe = divergence_probe(spec, kappas);
  bool grows = true;
  std::ostringstream detail;
  double prev_inc = 0.0;
  for (std::size_t i = 1; i < probe.size(); ++i) {
    const double inc = probe[i].value - probe[i - 1].value;
    if (i > 1) grows = grows && inc >= 0.5 * prev_inc;
    grows = grows && inc > 0.0;
    detail << fmt(" %.4f", inc);
    prev_inc = inc;
  }
  return {grows, fmt("alpha = %.2f, decade increments:", spec.alpha) + detail.str()};
}

Verdict generator_fidelity() {
  const Hurst H(0.75);
  const auto times = uniform_time_grid(64);
  const WhiteNoiseGrid grid(H, 1.0 / 256, 1.0, 4242, 0);
  const auto wn = sample_paths_whitenoise(H, 1, times, grid, 10000);
  const double bias = discretization_bias(wn);
  const CovarianceDeviation dw = covariance_deviation(wn, 0, bias);
  const auto ch = sample_paths_cholesky(H, 1, times, 10000, 4242, 1);
  const CovarianceDeviation dc = covariance_deviation(ch, 0);
  return {dw.max_z <= 5.0 && dc.max_z <= 5.0,
          fmt("white noise: max dev %.2e, bias budget %.2e, max (dev - bias)/se %.2f; cholesky: max dev %.2e, max dev/se "
              "%.2f (limit 5)",
              dw.max_deviation, bias, dw.max_z, dc.max_deviation, dc.max_z)};
}

struct Criterion {
  const char* name;
  std::function<Verdict()> run;
  double budget_s;
};

const std::vector<Criterion> kCriteria{
    {"normalization of indicator images", normalization, 10},
    {"pairing duality", duality, 60},
    {"lemma bound stress suite", lemma_bound, 60},
    {"singular quadrature oracle", quadrature_oracle, 10},
    {"admissibility gate", admissibility_gate, 1},
    {"analytic local-time constant", analytic_constant, 5},
    {"MC expectation closure", mc_expectation, 600},
    {"MC S-transform closure", mc_stransform, 600},
    {"eps -> 0 convergence", eps_convergence, 300},
    {"chaos series closure", chaos_closure, 300},
    {"divergence demonstration", divergence, 10},
    {"fBm generator fidelity", generator_fidelity, 300},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "Criterion numbers to run (default: all)")->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);
  if (selected.empty())
    for (int k = 1; k <= static_cast<int>(kCriteria.size()); ++k) selected.push_back(k);

  int failures = 0;
  for (int k : selected) {
    const Criterion& c = kCriteria[static_cast<std::size_t>(k - 1)];
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) v = {false, v.detail + fmt("; over the %.0fs budget", c.budget_s)};
    std::cout << "criterion " << k << " " << (v.pass ? "PASS" : "FAIL") << " [" << c.name << "] " << v.detail
              << fmt(" (%.1fs)", secs) << std::endl;
    failures += !v.pass;
  }
  return failures == 0 ? 0 : 1;
}
