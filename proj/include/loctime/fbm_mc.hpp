#pragma once

// Monte Carlo layer: fBm paths from a discretized white-noise representation
// or from an exact covariance factorization, and estimators of regularized
// local times and their S-transforms.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "loctime/fractional_ops.hpp"
#include "loctime/test_function.hpp"

namespace loctime {

/// 1/2 (s^2H + t^2H - |t - s|^2H).
double fbm_covariance(Hurst H, double s, double t);
/// Same covariance as the L2 inner product of the indicator images.
double fbm_covariance_quadrature(Hurst H, double s, double t, double tol = 1e-11);

/// Uniform grid k/m, k = 0..m.
std::vector<double> uniform_time_grid(int m);

/// Cells of the white-noise discretization on [x_lo, 1]: width dx on
/// [-1, 1], then widening geometrically toward x_lo. The noise on cell i is
/// N(0, width_i); draws are regenerated from (seed, stream, path block).
class WhiteNoiseGrid {
 public:
  /// x_lo = NaN picks the truncation from the tail bound; an explicit x_lo
  /// that misses the budget throws ConfigurationError naming the required one.
  WhiteNoiseGrid(Hurst H, double dx, double t_max, std::uint64_t seed, std::uint64_t stream,
                 double x_lo = std::numeric_limits<double>::quiet_NaN(), double tail_budget = 1e-4);

  /// Bound on int_{x < x_lo} (M_H 1_[0,t])^2 dx relative to t^2H.
  static double tail_mass(Hurst H, double t, double x_lo);
  /// Left end meeting the budget; at most -1.
  static double required_x_lo(Hurst H, double t, double budget);

  Hurst hurst() const { return H_; }
  double x_lo() const { return edges_.front(); }
  double x_hi() const { return edges_.back(); }
  double dx() const { return dx_; }
  double t_max() const { return t_max_; }
  double tail_budget() const { return tail_budget_; }
  std::size_t cells() const { return edges_.size() - 1; }
  double cell_lo(std::size_t i) const { return edges_[i]; }
  double cell_hi(std::size_t i) const { return edges_[i + 1]; }
  double width(std::size_t i) const { return edges_[i + 1] - edges_[i]; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Paths per RNG block; fixed so results do not depend on thread count.
  static constexpr std::size_t block_size = 256;

  /// Standard normal draws of one block, ordered path, component, cell.
  std::vector<double> block_normals(std::size_t block, std::size_t paths_in_block, int d) const;
  /// Noise increments of one path and component (variance width_i).
  std::vector<double> increments(std::size_t path, int component, int d) const;
  /// Cell averages of g over every cell.
  std::vector<double> cell_averages(const TestFunction& g) const;

 private:
  Hurst H_;
  double dx_, t_max_, tail_budget_;
  std::uint64_t seed_, stream_;
  std::vector<double> edges_;
};

enum class Generator { whitenoise, cholesky };

const char* to_string(Generator g);

/// n_paths x (m + 1) x d samples of B_H on a time grid.
struct PathEnsemble {
  Hurst H;
  int d;
  std::vector<double> times;
  Generator generator;
  std::optional<WhiteNoiseGrid> grid;
  std::size_t n_paths;
  std::uint64_t seed;
  std::uint64_t stream;
  /// Layout [path][component][time].
  std::vector<double> values;
  /// Covariance of (B(t_0), ..., B(t_m)) the generator realizes exactly,
  /// (m+1) x (m+1) row-major.
  std::vector<double> model_covariance;
  /// White-noise loadings: B_j(t_k) = sum_i loading[k][i] dW_{j,i}.
  std::vector<double> loading;

  std::size_t steps() const { return times.size() - 1; }
  double at(std::size_t path, std::size_t k, int component) const {
    return values[(path * static_cast<std::size_t>(d) + static_cast<std::size_t>(component)) * times.size() + k];
  }
  double model_cov(std::size_t k, std::size_t l) const { return model_covariance[k * times.size() + l]; }
};

PathEnsemble sample_paths_whitenoise(Hurst H, int d, const std::vector<double>& times, const WhiteNoiseGrid& grid,
                                     std::size_t n_paths);

PathEnsemble sample_paths_cholesky(Hurst H, int d, const std::vector<double>& times, std::size_t n_paths,
                                   std::uint64_t seed, std::uint64_t stream);

/// Sample mean with its standard error (sample standard deviation / sqrt(n)).
struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
};

McEstimate summarize(std::span<const double> samples);

/// Per-path estimator sum over grid pairs of w_kl phi_eps(B(t_l) - B(t_k)),
/// with trapezoid weights on the simplex. stride subsamples the time grid.
McEstimate mc_local_time_regularized(const PathEnsemble& ens, double eps, int stride = 1);

/// S-transform of the truncated regularized local time at f, by weighting
/// each path with its Wick exponential. Needs a white-noise ensemble.
McEstimate mc_s_transform(const PathEnsemble& ens, const VectorTestFunction& f, double eps, int N, int stride = 1);

/// Mean of the Wick exponential exp(<w, f> - |f|^2 / 2); equals 1.
McEstimate mc_wick_weight_mean(const PathEnsemble& ens, const VectorTestFunction& f);

/// Exact expectation of the estimators above given the ensemble's model
/// covariance (f = zero for the plain local time).
double grid_expectation(const PathEnsemble& ens, const VectorTestFunction& f, double eps, int N, int stride = 1);

/// Coarse (stride 2) versus fine (stride 1) estimates on common paths.
struct GridComparison {
  McEstimate coarse;
  McEstimate fine;
  /// |coarse - fine| mean difference and its standard error.
  double difference = 0.0;
  double difference_stderr = 0.0;
};

GridComparison mc_grid_comparison(const PathEnsemble& ens, const VectorTestFunction& f, double eps, int N);

/// Largest |empirical - target| covariance over grid pairs (t_k, t_l).
struct CovarianceDeviation {
  double max_deviation = 0.0;
  double stderr_at_max = 0.0;
  /// max over pairs of (|deviation| - allowance) / stderr.
  double max_z = 0.0;
};

/// Target is fbm_covariance, or the generator's model covariance when
/// against_model is set. allowance is subtracted from every |deviation|.
CovarianceDeviation covariance_deviation(const PathEnsemble& ens, int component = 0, double allowance = 0.0,
                                         bool against_model = false);

/// Largest |model covariance - fbm covariance| over the grid: the
/// discretization bias of the generator.
double discretization_bias(const PathEnsemble& ens);

struct KsResult {
  double statistic;
  double critical;
  bool consistent;
};

/// Two-sample Kolmogorov-Smirnov test at level alpha (asymptotic critical value).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha = 0.01);

}  // namespace loctime
