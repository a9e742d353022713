#include <cmath>
#include <cstdlib>
#include <numbers>

#include "doctest.h"
#include "loctime/errors.hpp"
#include "loctime/fbm_mc.hpp"

using namespace loctime;

namespace {

// (2 pi)^(-1/2) int_0^1 (1 - tau) (eps + tau)^(-1/2) dtau.
double bm_local_time(double eps) {
  const double a = 1.0 + eps;
  const double v = a * 2.0 * (std::sqrt(a) - std::sqrt(eps)) - 2.0 / 3.0 * (std::pow(a, 1.5) - std::pow(eps, 1.5));
  return v / std::sqrt(2.0 * std::numbers::pi);
}

std::vector<double> endpoint_samples(const PathEnsemble& ens) {
  std::vector<double> out;
  for (std::size_t p = 0; p < ens.n_paths; ++p) out.push_back(ens.at(p, ens.steps(), 0));
  return out;
}

}  // namespace

TEST_CASE("fbm covariance examples") {
  CHECK(fbm_covariance(Hurst(0.5), 0.3, 0.7) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(fbm_covariance(Hurst(0.37), 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(fbm_covariance(Hurst(0.8), 0.0, 0.6) == 0.0);
  CHECK_THROWS_AS(fbm_covariance(Hurst(0.5), -0.1, 0.2), ValidationError);
  for (double h : {0.2, 0.6, 0.85})
    CHECK(fbm_covariance_quadrature(Hurst(h), 0.4, 0.9) == doctest::Approx(fbm_covariance(Hurst(h), 0.4, 0.9)).epsilon(1e-9));
}

TEST_CASE("white-noise grid layout and tail budget") {
  const WhiteNoiseGrid g(Hurst(0.75), 1.0 / 64, 1.0, 1, 0);
  CHECK(g.x_hi() == 1.0);
  CHECK(g.x_lo() == doctest::Approx(WhiteNoiseGrid::required_x_lo(Hurst(0.75), 1.0, 1e-4)));
  CHECK(WhiteNoiseGrid::tail_mass(Hurst(0.75), 1.0, g.x_lo()) == doctest::Approx(1e-4).epsilon(1e-9));
  for (std::size_t i = 0; i < g.cells(); ++i) {
    CHECK(g.width(i) > 0.0);
    if (g.cell_lo(i) >= -1.0) CHECK(g.width(i) == doctest::Approx(1.0 / 64).epsilon(1e-12));
  }
  CHECK(WhiteNoiseGrid::required_x_lo(Hurst(0.5), 1.0, 1e-4) == -1.0);
  // Brownian case needs no left cells at all.
  CHECK(WhiteNoiseGrid(Hurst(0.5), 0.25, 1.0, 1, 0).cells() == 8);
  CHECK_THROWS_AS(WhiteNoiseGrid(Hurst(0.75), 1.0 / 64, 1.0, 1, 0, -20.0), ConfigurationError);
  CHECK_THROWS_AS(WhiteNoiseGrid(Hurst(0.75), 0.3, 1.0, 1, 0), ValidationError);
  CHECK_NOTHROW(WhiteNoiseGrid(Hurst(0.75), 1.0 / 64, 1.0, 1, 0, -1e7));
}

TEST_CASE("white-noise increments are centered with cell variance") {
  const WhiteNoiseGrid g(Hurst(0.3), 1.0 / 256, 1.0, 42, 3);
  for (int j = 0; j < 2; ++j) {
    const std::vector<double> inc = g.increments(17, j, 2);
    const double n = static_cast<double>(inc.size());
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < inc.size(); ++i) mean += inc[i] / std::sqrt(g.width(i)) / n;
    for (std::size_t i = 0; i < inc.size(); ++i) var += std::pow(inc[i] / std::sqrt(g.width(i)) - mean, 2) / (n - 1.0);
    CHECK(std::abs(mean) < 5.0 / std::sqrt(n));
    CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
  }
}

TEST_CASE("white-noise paths are the loaded sums of the increments") {
  const Hurst H(0.65);
  const WhiteNoiseGrid g(H, 1.0 / 32, 1.0, 9, 1);
  const auto ens = sample_paths_whitenoise(H, 2, uniform_time_grid(16), g, 300);
  for (std::size_t path : {0u, 255u, 299u})
    for (int j = 0; j < 2; ++j) {
      const std::vector<double> inc = g.increments(path, j, 2);
      CHECK(ens.at(path, 0, j) == 0.0);
      for (std::size_t k : {4u, 16u}) {
        double b = 0.0;
        for (std::size_t i = 0; i < inc.size(); ++i) b += ens.loading[k * g.cells() + i] * inc[i];
        CHECK(ens.at(path, k, j) == doctest::Approx(b).epsilon(1e-12));
      }
    }
}

TEST_CASE("ensembles do not depend on the worker count") {
  const Hurst H(0.4);
  const WhiteNoiseGrid g(H, 1.0 / 32, 1.0, 5, 2);
  const auto times = uniform_time_grid(16);
  setenv("LOCTIME_THREADS", "1", 1);
  const auto a = sample_paths_whitenoise(H, 2, times, g, 1000);
  const auto ca = sample_paths_cholesky(H, 1, times, 1000, 5, 2);
  const double ea = mc_local_time_regularized(a, 0.05).mean;
  setenv("LOCTIME_THREADS", "4", 1);
  const auto b = sample_paths_whitenoise(H, 2, times, g, 1000);
  const auto cb = sample_paths_cholesky(H, 1, times, 1000, 5, 2);
  const double eb = mc_local_time_regularized(b, 0.05).mean;
  unsetenv("LOCTIME_THREADS");
  CHECK(a.values == b.values);
  CHECK(ca.values == cb.values);
  CHECK(ea == eb);
  const auto other = sample_paths_cholesky(H, 1, times, 1000, 5, 3);
  CHECK(other.values != ca.values);
}

TEST_CASE("white-noise covariance matches fbm within bias and noise") {
  const Hurst H(0.75);
  const WhiteNoiseGrid g(H, 1.0 / 128, 1.0, 21, 0);
  const auto ens = sample_paths_whitenoise(H, 1, uniform_time_grid(32), g, 10000);
  const double bias = discretization_bias(ens);
  CHECK(bias < 1e-3);
  CHECK(covariance_deviation(ens, 0, bias).max_z <= 5.0);
  CHECK(covariance_deviation(ens, 0, 0.0, true).max_z <= 5.0);
}

TEST_CASE("cholesky generator") {
  const auto ens = sample_paths_cholesky(Hurst(0.3), 1, uniform_time_grid(32), 10000, 8, 0);
  const McEstimate var = [&] {
    std::vector<double> sq;
    for (double b : endpoint_samples(ens)) sq.push_back(b * b);
    return summarize(sq);
  }();
  CHECK(std::abs(var.mean - 1.0) <= 5.0 * var.std_error);
  CHECK(discretization_bias(ens) < 1e-12);

  const auto bm = sample_paths_cholesky(Hurst(0.5), 1, uniform_time_grid(20), 10000, 8, 1);
  CHECK(covariance_deviation(bm, 0).max_z <= 5.0);
}

TEST_CASE("brownian increments over disjoint intervals are uncorrelated") {
  const Hurst H(0.5);
  const WhiteNoiseGrid g(H, 1.0 / 16, 1.0, 13, 0);
  const auto ens = sample_paths_whitenoise(H, 1, uniform_time_grid(4), g, 10000);
  std::vector<double> prod;
  for (std::size_t p = 0; p < ens.n_paths; ++p)
    prod.push_back((ens.at(p, 1, 0) - ens.at(p, 0, 0)) * (ens.at(p, 4, 0) - ens.at(p, 2, 0)));
  const McEstimate c = summarize(prod);
  CHECK(std::abs(c.mean) <= 5.0 * c.std_error);
}

TEST_CASE("generators agree in distribution") {
  const Hurst H(0.7);
  const auto times = uniform_time_grid(16);
  const auto chol = sample_paths_cholesky(H, 1, times, 5000, 3, 0);
  const auto wn = sample_paths_whitenoise(H, 1, times, WhiteNoiseGrid(H, 1.0 / 64, 1.0, 3, 1), 5000);
  CHECK(ks_two_sample(endpoint_samples(chol), endpoint_samples(wn)).consistent);

  std::vector<double> shifted = endpoint_samples(wn);
  for (double& x : shifted) x += 0.3;
  CHECK_FALSE(ks_two_sample(endpoint_samples(chol), shifted).consistent);
}

TEST_CASE("self-similarity at c = 1/2") {
  const Hurst H(0.3);
  const auto a = sample_paths_cholesky(H, 1, uniform_time_grid(16), 10000, 4, 0);
  const auto b = sample_paths_cholesky(H, 1, uniform_time_grid(16), 10000, 4, 1);
  const double scale = std::pow(0.5, -2.0 * H.value());
  for (std::size_t k : {4u, 8u}) {
    std::vector<double> half, full;
    for (std::size_t p = 0; p < a.n_paths; ++p) {
      half.push_back(a.at(p, k, 0) * a.at(p, k, 0) * scale);
      full.push_back(b.at(p, 2 * k, 0) * b.at(p, 2 * k, 0));
    }
    const McEstimate x = summarize(half), y = summarize(full);
    CHECK(std::abs(x.mean - y.mean) <= 5.0 * std::hypot(x.std_error, y.std_error));
  }
}

TEST_CASE("regularized local time estimator") {
  const Hurst H(0.5);
  const auto times = uniform_time_grid(64);
  const auto ens = sample_paths_cholesky(H, 1, times, 4000, 1, 0);

  // Huge eps: the Gaussian factor is 1 and the weights integrate the simplex.
  const double big = 1e8;
  const double area = mc_local_time_regularized(ens, big).mean * std::sqrt(2.0 * std::numbers::pi * big);
  CHECK(area == doctest::Approx(0.5).epsilon(1e-7));

  const McEstimate est = mc_local_time_regularized(ens, 0.05);
  const double grid = grid_expectation(ens, VectorTestFunction::zero(1), 0.05, 0);
  CHECK(std::abs(est.mean - grid) <= 4.0 * est.std_error);
  CHECK(grid == doctest::Approx(bm_local_time(0.05)).epsilon(2e-3));

  const auto ens3 = sample_paths_cholesky(H, 3, times, 4000, 1, 0);
  CHECK(mc_local_time_regularized(ens3, 0.05).mean < est.mean);

  CHECK_THROWS_AS(mc_local_time_regularized(ens, 0.0), ValidationError);
  CHECK_THROWS_AS(mc_local_time_regularized(ens, 0.05, 3), ValidationError);
}

TEST_CASE("grid expectation converges to the analytic value") {
  const auto ens = sample_paths_cholesky(Hurst(0.5), 1, uniform_time_grid(512), 2, 1, 0);
  const double exact = bm_local_time(0.01);
  const double coarse = std::abs(grid_expectation(ens, VectorTestFunction::zero(1), 0.01, 0, 4) - exact);
  const double fine = std::abs(grid_expectation(ens, VectorTestFunction::zero(1), 0.01, 0, 1) - exact);
  CHECK(fine < coarse / 4.0);
  CHECK(fine < 2e-4);
}

TEST_CASE("standard error shrinks like n^-1/2") {
  const Hurst H(0.6);
  const auto times = uniform_time_grid(16);
  const double small = mc_local_time_regularized(sample_paths_cholesky(H, 1, times, 1000, 2, 0), 0.05).std_error;
  const double large = mc_local_time_regularized(sample_paths_cholesky(H, 1, times, 10000, 2, 1), 0.05).std_error;
  const double slope = std::log10(large / small);
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("s-transform estimator") {
  const Hurst H(0.5);
  const WhiteNoiseGrid g(H, 1.0 / 64, 1.0, 77, 0);
  const auto ens = sample_paths_whitenoise(H, 1, uniform_time_grid(32), g, 4000);
  const VectorTestFunction f({TestFunction::gaussian_bump(0.3, 0.4, 0.2)});
  const auto zero = VectorTestFunction::zero(1);

  const McEstimate plain = mc_local_time_regularized(ens, 0.05);
  const McEstimate at_zero = mc_s_transform(ens, zero, 0.05, 0);
  CHECK(at_zero.mean == plain.mean);
  CHECK(at_zero.std_error == plain.std_error);

  const McEstimate wick = mc_wick_weight_mean(ens, f);
  CHECK(std::abs(wick.mean - 1.0) <= 3.0 * wick.std_error);

  for (int N : {0, 1, 2}) {
    const McEstimate est = mc_s_transform(ens, f, 0.05, N);
    const double grid = grid_expectation(ens, f, 0.05, N);
    CHECK(std::abs(est.mean - grid) <= 4.0 * est.std_error);
  }

  const auto chol = sample_paths_cholesky(H, 1, uniform_time_grid(32), 100, 1, 0);
  CHECK_THROWS_AS(mc_s_transform(chol, f, 0.05, 0), UnsupportedError);
  CHECK_THROWS_AS(grid_expectation(chol, f, 0.05, 0), UnsupportedError);
}

TEST_CASE("truncation removes the low chaos in expectation") {
  // With f = 0 and N >= 1 every path functional is centered.
  const auto ens = sample_paths_cholesky(Hurst(0.7), 2, uniform_time_grid(32), 4000, 6, 0);
  CHECK(grid_expectation(ens, VectorTestFunction::zero(2), 0.05, 1, 1) == doctest::Approx(0.0).scale(1.0));
  const McEstimate est = mc_s_transform(sample_paths_whitenoise(Hurst(0.7), 2, uniform_time_grid(32),
                                                                WhiteNoiseGrid(Hurst(0.7), 1.0 / 32, 1.0, 6, 0), 4000),
                                        VectorTestFunction::zero(2), 0.05, 2);
  CHECK(std::abs(est.mean) <= 4.0 * est.std_error);
}

TEST_CASE("grid comparison uses common paths") {
  const auto ens = sample_paths_cholesky(Hurst(0.5), 1, uniform_time_grid(64), 2000, 3, 0);
  const GridComparison c = mc_grid_comparison(ens, VectorTestFunction::zero(1), 0.02, 0);
  CHECK(c.difference_stderr < c.coarse.std_error / 5.0);
  const auto zero = VectorTestFunction::zero(1);
  const double exact_diff = grid_expectation(ens, zero, 0.02, 0, 2) - grid_expectation(ens, zero, 0.02, 0, 1);
  CHECK(std::abs(c.difference - std::abs(exact_diff)) <= 4.0 * c.difference_stderr);
}

TEST_CASE("summary statistics") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const McEstimate s = summarize(x);
  CHECK(s.mean == 2.5);
  CHECK(s.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(s.n_samples == 4);
  CHECK_THROWS_AS(summarize(std::vector<double>{1.0}), ValidationError);
}
