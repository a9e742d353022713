#include "loctime/fbm_mc.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "loctime/errors.hpp"
#include "loctime/parallel.hpp"
#include "loctime/quadrature.hpp"
#include "loctime/stransform.hpp"

namespace loctime {

namespace {

std::mt19937_64 block_engine(std::uint64_t seed, std::uint64_t stream, std::size_t block) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  const std::uint64_t b = block;
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(b), hi(b)};
  return std::mt19937_64(seq);
}

std::vector<double> normals(std::uint64_t seed, std::uint64_t stream, std::size_t block, std::size_t count) {
  auto eng = block_engine(seed, stream, block);
  std::normal_distribution<double> dist;
  std::vector<double> out(count);
  for (double& z : out) z = dist(eng);
  return out;
}

std::size_t block_count(std::size_t n_paths) {
  return (n_paths + WhiteNoiseGrid::block_size - 1) / WhiteNoiseGrid::block_size;
}

std::size_t paths_in(std::size_t block, std::size_t n_paths) {
  return std::min(WhiteNoiseGrid::block_size, n_paths - block * WhiteNoiseGrid::block_size);
}

void check_times(const std::vector<double>& times) {
  if (times.size() < 2) throw ValidationError("time grid needs at least two points");
  if (times.front() != 0.0) throw ValidationError("time grid must start at 0");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw ValidationError("time grid must be strictly increasing");
}

void check_common(int d, std::size_t n_paths) {
  if (d < 1) throw ValidationError("dimension d must be >= 1");
  if (n_paths < 2) throw ValidationError("need at least two paths");
}

}  // namespace

double fbm_covariance(Hurst H, double s, double t) {
  if (!(s >= 0.0) || !(t >= 0.0)) throw ValidationError("fbm_covariance needs s, t >= 0");
  const double h2 = 2.0 * H.value();
  return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::abs(t - s), h2));
}

double fbm_covariance_quadrature(Hurst H, double s, double t, double tol) {
  if (!(s >= 0.0) || !(t >= 0.0)) throw ValidationError("fbm_covariance needs s, t >= 0");
  if (s == 0.0 || t == 0.0) return 0.0;
  return indicator_inner_product(H, s, t, tol);
}

std::vector<double> uniform_time_grid(int m) {
  if (m < 1) throw ValidationError("time grid needs m >= 1");
  std::vector<double> t(static_cast<std::size_t>(m) + 1);
  for (int k = 0; k <= m; ++k) t[static_cast<std::size_t>(k)] = static_cast<double>(k) / m;
  t.back() = 1.0;
  return t;
}

// ---------------------------------------------------------------------------
// White-noise grid

double WhiteNoiseGrid::tail_mass(Hurst H, double t, double x_lo) {
  if (!(t > 0.0)) throw ValidationError("tail_mass needs t > 0");
  if (!(x_lo < 0.0)) throw ValidationError("tail_mass needs x_lo < 0");
  const double a = H.a();
  if (a == 0.0) return 0.0;
  // |c((t - x)^a - (-x)^a)| <= c |a| t |x|^(a-1) for x < 0.
  const double c = IndicatorKernel(H).prefactor();
  const double L = -x_lo;
  return c * c * a * a * t * t * std::pow(L, 2.0 * a - 1.0) / ((1.0 - 2.0 * a) * std::pow(t, 2.0 * H.value()));
}

double WhiteNoiseGrid::required_x_lo(Hurst H, double t, double budget) {
  if (!(t > 0.0) || !(budget > 0.0)) throw ValidationError("required_x_lo needs t > 0 and budget > 0");
  const double a = H.a();
  if (a == 0.0) return -1.0;
  const double c = IndicatorKernel(H).prefactor();
  const double scale = c * c * a * a * std::pow(t, 2.0 - 2.0 * H.value()) / ((1.0 - 2.0 * a) * budget);
  return std::min(-std::pow(scale, 1.0 / (1.0 - 2.0 * a)), -1.0);
}

WhiteNoiseGrid::WhiteNoiseGrid(Hurst H, double dx, double t_max, std::uint64_t seed, std::uint64_t stream,
                               double x_lo, double tail_budget)
    : H_(H), dx_(dx), t_max_(t_max), tail_budget_(tail_budget), seed_(seed), stream_(stream) {
  if (!(dx > 0.0) || dx > 1.0) throw ValidationError("dx must lie in (0, 1]");
  const double cells_per_unit = std::round(1.0 / dx);
  if (std::abs(1.0 / dx - cells_per_unit) > 1e-9 * cells_per_unit)
    throw ValidationError("1/dx must be an integer so cell edges meet the time grid");
  if (!(t_max > 0.0) || t_max > 1.0) throw ValidationError("t_max must lie in (0, 1]");
  if (!(tail_budget > 0.0)) throw ValidationError("tail budget must be positive");

  const double required = required_x_lo(H, t_max, tail_budget);
  if (std::isnan(x_lo)) {
    x_lo = required;
  } else if (x_lo > required) {
    std::ostringstream msg;
    msg << "x_lo = " << x_lo << " leaves tail mass " << tail_mass(H, t_max, std::min(x_lo, -1e-300))
        << " above budget " << tail_budget << "; required x_lo <= " << required;
    throw ConfigurationError(msg.str());
  }

  // Left part, built from -1 outward, then the uniform part on [-1, 1].
  std::vector<double> left;
  double x = -1.0;
  double w = dx;
  while (x > x_lo) {
    w = std::max(dx, std::min(w * 1.05, 0.05 * std::abs(x)));
    double next = x - w;
    if (next - x_lo < 0.5 * w) next = x_lo;
    left.push_back(next);
    x = next;
  }
  const auto n = static_cast<long>(cells_per_unit);
  edges_.assign(left.rbegin(), left.rend());
  for (long i = 0; i <= 2 * n; ++i) edges_.push_back(static_cast<double>(i - n) / static_cast<double>(n));
}

std::vector<double> WhiteNoiseGrid::block_normals(std::size_t block, std::size_t paths_in_block, int d) const {
  return normals(seed_, stream_, block, paths_in_block * static_cast<std::size_t>(d) * cells());
}

std::vector<double> WhiteNoiseGrid::increments(std::size_t path, int component, int d) const {
  if (component < 0 || component >= d) throw ValidationError("component out of range");
  const std::size_t C = cells();
  const std::size_t within = path % block_size;
  const std::vector<double> z = block_normals(path / block_size, within + 1, d);
  std::vector<double> out(C);
  const std::size_t offset = (within * static_cast<std::size_t>(d) + static_cast<std::size_t>(component)) * C;
  for (std::size_t i = 0; i < C; ++i) out[i] = z[offset + i] * std::sqrt(width(i));
  return out;
}

std::vector<double> WhiteNoiseGrid::cell_averages(const TestFunction& g) const {
  std::vector<double> out(cells(), 0.0);
  if (g.is_zero()) return out;
  const GaussRule& rule = gauss_legendre(16);
  const double panel = g.length_scale() / 4.0;
  for (std::size_t i = 0; i < cells(); ++i) {
    const double lo = std::max(cell_lo(i), g.support_lo());
    const double hi = std::min(cell_hi(i), g.support_hi());
    if (!(hi > lo)) continue;
    const int pieces = std::max(1, static_cast<int>(std::ceil((hi - lo) / panel)));
    double sum = 0.0;
    for (int p = 0; p < pieces; ++p) {
      const double a = lo + (hi - lo) * p / pieces;
      const double b = lo + (hi - lo) * (p + 1) / pieces;
      sum += gauss_apply(rule, [&g](double x) { return g(x); }, a, b);
    }
    out[i] = sum / width(i);
  }
  return out;
}

const char* to_string(Generator g) {
  switch (g) {
    case Generator::whitenoise: return "whitenoise";
    case Generator::cholesky: return "cholesky";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Generators

PathEnsemble sample_paths_whitenoise(Hurst H, int d, const std::vector<double>& times, const WhiteNoiseGrid& grid,
                                     std::size_t n_paths) {
  check_times(times);
  check_common(d, n_paths);
  if (grid.hurst().value() != H.value()) throw ValidationError("white-noise grid was built for a different H");
  if (times.back() > grid.t_max()) throw ConfigurationError("time grid extends past the grid's t_max");

  const std::size_t T = times.size();
  const std::size_t C = grid.cells();
  const IndicatorKernel kernel(H);

  PathEnsemble ens{H, d, times, Generator::whitenoise, grid, n_paths, grid.seed(), grid.stream(), {}, {}, {}};
  ens.loading.assign(T * C, 0.0);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(C));
  for (std::size_t k = 1; k < T; ++k) {
    for (std::size_t i = 0; i < C; ++i) {
      if (grid.cell_lo(i) >= times[k]) break;
      const double avg = kernel.cell_average(0.0, times[k], grid.cell_lo(i), grid.cell_hi(i));
      ens.loading[k * C + i] = avg;
      S(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = avg * std::sqrt(grid.width(i));
    }
  }
  const Eigen::MatrixXd cov = S * S.transpose();
  ens.model_covariance.resize(T * T);
  for (std::size_t k = 0; k < T; ++k)
    for (std::size_t l = 0; l < T; ++l)
      ens.model_covariance[k * T + l] = cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));

  ens.values.assign(n_paths * static_cast<std::size_t>(d) * T, 0.0);
  const auto Ti = static_cast<Eigen::Index>(T);
  parallel_for(block_count(n_paths), [&](std::size_t b) {
    const std::size_t P = paths_in(b, n_paths);
    std::vector<double> z = grid.block_normals(b, P, d);
    const auto cols = static_cast<Eigen::Index>(P * static_cast<std::size_t>(d));
    Eigen::Map<const Eigen::MatrixXd> Z(z.data(), static_cast<Eigen::Index>(C), cols);
    Eigen::Map<Eigen::MatrixXd> out(ens.values.data() + b * WhiteNoiseGrid::block_size * static_cast<std::size_t>(d) * T,
                                    Ti, cols);
    out.noalias() = S * Z;
    out.row(0).setZero();
  });
  return ens;
}

PathEnsemble sample_paths_cholesky(Hurst H, int d, const std::vector<double>& times, std::size_t n_paths,
                                   std::uint64_t seed, std::uint64_t stream) {
  check_times(times);
  check_common(d, n_paths);
  const std::size_t T = times.size();
  const auto m = static_cast<Eigen::Index>(T - 1);

  Eigen::MatrixXd sigma(m, m);
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index l = 0; l < m; ++l)
      sigma(k, l) = fbm_covariance(H, times[static_cast<std::size_t>(k) + 1], times[static_cast<std::size_t>(l) + 1]);

  // Jitter fallback for covariances that lose definiteness to round-off.
  const double max_diag = sigma.diagonal().maxCoeff();
  double jitter = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  for (double rel = 1e-15; llt.info() != Eigen::Success; rel *= 10.0) {
    if (rel > 1e-8) throw ConfigurationError("fBm covariance is not positive definite even with jitter");
    jitter = rel * max_diag;
    llt.compute(sigma + jitter * Eigen::MatrixXd::Identity(m, m));
  }
  const Eigen::MatrixXd L = llt.matrixL();

  PathEnsemble ens{H, d, times, Generator::cholesky, std::nullopt, n_paths, seed, stream, {}, {}, {}};
  ens.model_covariance.assign(T * T, 0.0);
  for (std::size_t k = 1; k < T; ++k)
    for (std::size_t l = 1; l < T; ++l)
      ens.model_covariance[k * T + l] = sigma(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(l - 1)) +
                                        (k == l ? jitter : 0.0);

  ens.values.assign(n_paths * static_cast<std::size_t>(d) * T, 0.0);
  parallel_for(block_count(n_paths), [&](std::size_t b) {
    const std::size_t P = paths_in(b, n_paths);
    std::vector<double> z = normals(seed, stream, b, P * static_cast<std::size_t>(d) * (T - 1));
    const auto cols = static_cast<Eigen::Index>(P * static_cast<std::size_t>(d));
    Eigen::Map<const Eigen::MatrixXd> Z(z.data(), m, cols);
    Eigen::Map<Eigen::MatrixXd, 0, Eigen::OuterStride<>> out(
        ens.values.data() + b * WhiteNoiseGrid::block_size * static_cast<std::size_t>(d) * T + 1, m, cols,
        Eigen::OuterStride<>(static_cast<Eigen::Index>(T)));
    out.noalias() = L.triangularView<Eigen::Lower>() * Z;
  });
  return ens;
}

// ---------------------------------------------------------------------------
// Estimators

McEstimate summarize(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw ValidationError("summarize needs at least two samples");
  const double mean = pairwise_sum(samples) / static_cast<double>(n);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (samples[i] - mean) * (samples[i] - mean);
  const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

namespace {

// Coarse grid indices and trapezoid weights on {t_k <= t_l}. Each square cell
// above the diagonal gives a quarter of its area to its corners; each
// diagonal triangle gives a third of its area to its vertices.
struct SimplexRule {
  std::vector<std::size_t> index;  // fine-grid index of coarse node p
  std::vector<Eigen::ArrayXd> weight;  // weight[p](q - p), q >= p
};

SimplexRule simplex_rule(const std::vector<double>& times, int stride) {
  if (stride < 1) throw ValidationError("stride must be >= 1");
  const std::size_t m = times.size() - 1;
  if (m % static_cast<std::size_t>(stride) != 0) throw ValidationError("stride must divide the number of time steps");
  SimplexRule rule;
  for (std::size_t k = 0; k <= m; k += static_cast<std::size_t>(stride)) rule.index.push_back(k);
  const std::size_t P = rule.index.size();
  std::vector<double> h(P - 1);
  for (std::size_t p = 0; p + 1 < P; ++p) h[p] = times[rule.index[p + 1]] - times[rule.index[p]];
  rule.weight.resize(P);
  for (std::size_t p = 0; p < P; ++p) rule.weight[p] = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(P - p));
  auto add = [&rule](std::size_t k, std::size_t l, double w) { rule.weight[k](static_cast<Eigen::Index>(l - k)) += w; };
  for (std::size_t p = 0; p + 1 < P; ++p) {
    const double tri = h[p] * h[p] / 6.0;
    add(p, p, tri);
    add(p, p + 1, tri);
    add(p + 1, p + 1, tri);
    for (std::size_t q = p + 1; q + 1 < P; ++q) {
      const double sq = 0.25 * h[p] * h[q];
      add(p, q, sq);
      add(p + 1, q, sq);
      add(p, q + 1, sq);
      add(p + 1, q + 1, sq);
    }
  }
  return rule;
}

// Per coarse row p: weights, model variances of B(t_q) - B(t_p), and the
// Wick coefficients (2 pi v)^(-d/2) (-1/(2v))^n with v = eps + variance.
struct PairTables {
  SimplexRule rule;
  std::vector<Eigen::ArrayXd> var;
  std::vector<std::vector<Eigen::ArrayXd>> coef;  // coef[p][n], n < N
};

PairTables pair_tables(const PathEnsemble& ens, double eps, int N, int stride) {
  PairTables t{simplex_rule(ens.times, stride), {}, {}};
  const std::size_t P = t.rule.index.size();
  const double two_pi = 2.0 * std::numbers::pi;
  t.var.resize(P);
  t.coef.resize(P);
  for (std::size_t p = 0; p < P; ++p) {
    const auto L = static_cast<Eigen::Index>(P - p);
    const std::size_t k = t.rule.index[p];
    Eigen::ArrayXd v(L);
    for (Eigen::Index j = 0; j < L; ++j) {
      const std::size_t l = t.rule.index[p + static_cast<std::size_t>(j)];
      v(j) = j == 0 ? 0.0 : std::max(0.0, ens.model_cov(l, l) + ens.model_cov(k, k) - 2.0 * ens.model_cov(k, l));
    }
    t.var[p] = v;
    const Eigen::ArrayXd total = v + eps;
    Eigen::ArrayXd c = (two_pi * total).pow(-0.5 * ens.d);
    const Eigen::ArrayXd ratio = -0.5 / total;
    for (int n = 0; n < N; ++n) {
      t.coef[p].push_back(c);
      c *= ratio;
    }
  }
  return t;
}

// Regularized truncated local-time functional of one path.
class PathFunctional {
 public:
  PathFunctional(const PathEnsemble& ens, const PairTables& tables, double eps, int N)
      : ens_(ens), tab_(tables), eps_(eps), N_(N), phi0_(std::pow(2.0 * std::numbers::pi * eps, -0.5 * ens.d)) {
    const std::size_t P = tab_.rule.index.size();
    coarse_.resize(static_cast<Eigen::Index>(ens.d), static_cast<Eigen::Index>(P));
    r2_.resize(static_cast<Eigen::Index>(P));
    diff_.resize(static_cast<Eigen::Index>(ens.d), static_cast<Eigen::Index>(P));
  }

  double operator()(std::size_t path) {
    const std::size_t P = tab_.rule.index.size();
    for (int j = 0; j < ens_.d; ++j)
      for (std::size_t p = 0; p < P; ++p)
        coarse_(j, static_cast<Eigen::Index>(p)) = ens_.at(path, tab_.rule.index[p], j);
    double total = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      const auto L = static_cast<Eigen::Index>(P - p);
      const auto start = static_cast<Eigen::Index>(p);
      auto r2 = r2_.head(L);
      r2.setZero();
      for (int j = 0; j < ens_.d; ++j) {
        diff_.row(j).head(L) = coarse_.row(j).segment(start, L).array() - coarse_(j, start);
        r2 += diff_.row(j).head(L).transpose().array().square();
      }
      Eigen::ArrayXd phi = phi0_ * (r2 * (-0.5 / eps_)).exp();
      if (N_ > 0) phi -= wick_terms(p, L);
      total += (tab_.rule.weight[p] * phi).sum();
    }
    return total;
  }

 private:
  // sum_{n < N} coef_n sum_{|idx| = n} prod_j He_{2 n_j}(X_j; var) / n_j!
  Eigen::ArrayXd wick_terms(std::size_t p, Eigen::Index L) {
    const Eigen::ArrayXd& var = tab_.var[p];
    const int top = 2 * (N_ - 1);
    // conv[n] accumulates the multinomial sum over the first components.
    std::vector<Eigen::ArrayXd> conv(static_cast<std::size_t>(N_), Eigen::ArrayXd::Zero(L));
    conv[0].setOnes();
    for (int j = 0; j < ens_.d; ++j) {
      const Eigen::ArrayXd x = diff_.row(j).head(L).transpose();
      std::vector<Eigen::ArrayXd> e(static_cast<std::size_t>(N_));
      Eigen::ArrayXd h_prev = Eigen::ArrayXd::Ones(L);
      Eigen::ArrayXd h = x;
      e[0] = h_prev;
      double fact = 1.0;
      for (int k = 1; k < top; ++k) {
        Eigen::ArrayXd next = x * h - k * var * h_prev;
        h_prev = std::move(h);
        h = std::move(next);
        if ((k + 1) % 2 == 0) {
          const int n = (k + 1) / 2;
          fact *= n;
          e[static_cast<std::size_t>(n)] = h / fact;
        }
      }
      if (j == 0) {
        conv = e;
        continue;
      }
      std::vector<Eigen::ArrayXd> next(static_cast<std::size_t>(N_), Eigen::ArrayXd::Zero(L));
      for (int a = 0; a < N_; ++a)
        for (int b = 0; a + b < N_; ++b)
          next[static_cast<std::size_t>(a + b)] += conv[static_cast<std::size_t>(a)] * e[static_cast<std::size_t>(b)];
      conv = std::move(next);
    }
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(L);
    for (int n = 0; n < N_; ++n)
      out += tab_.coef[p][static_cast<std::size_t>(n)].head(L) * conv[static_cast<std::size_t>(n)];
    return out;
  }

  const PathEnsemble& ens_;
  const PairTables& tab_;
  double eps_;
  int N_;
  double phi0_;
  Eigen::MatrixXd coarse_;
  Eigen::ArrayXd r2_;
  Eigen::MatrixXd diff_;
};

struct WickData {
  // f_j cell averages times sqrt(width), per component.
  std::vector<std::vector<double>> loading;
  double half_norm_sq = 0.0;
};

WickData wick_data(const PathEnsemble& ens, const VectorTestFunction& f) {
  if (f.dim() != ens.d) throw ValidationError("test function dimension differs from d");
  if (!ens.grid) throw UnsupportedError("S-transform weighting needs a white-noise ensemble");
  const WhiteNoiseGrid& g = *ens.grid;
  WickData w;
  double norm_sq = 0.0;
  for (int j = 0; j < ens.d; ++j) {
    std::vector<double> avg = g.cell_averages(f[j]);
    for (std::size_t i = 0; i < avg.size(); ++i) {
      avg[i] *= std::sqrt(g.width(i));
      norm_sq += avg[i] * avg[i];
    }
    w.loading.push_back(std::move(avg));
  }
  w.half_norm_sq = 0.5 * norm_sq;
  return w;
}

// Wick exponentials exp(<w, f> - |f|^2 / 2) of the paths in one block.
std::vector<double> block_weights(const PathEnsemble& ens, const WickData& w, std::size_t block) {
  const WhiteNoiseGrid& g = *ens.grid;
  const std::size_t P = paths_in(block, ens.n_paths);
  const std::size_t C = g.cells();
  const std::vector<double> z = g.block_normals(block, P, ens.d);
  std::vector<double> out(P);
  for (std::size_t p = 0; p < P; ++p) {
    double omega = 0.0;
    for (int j = 0; j < ens.d; ++j) {
      const double* zz = z.data() + (p * static_cast<std::size_t>(ens.d) + static_cast<std::size_t>(j)) * C;
      const auto& a = w.loading[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < C; ++i) omega += a[i] * zz[i];
    }
    out[p] = std::exp(omega - w.half_norm_sq);
  }
  return out;
}

std::vector<double> per_path(const PathEnsemble& ens, const VectorTestFunction* f, double eps, int N, int stride) {
  if (!(eps > 0.0)) throw ValidationError("Monte Carlo estimators need eps > 0");
  if (N < 0) throw ValidationError("N must be >= 0");
  const PairTables tables = pair_tables(ens, eps, N, stride);
  const bool weighted = f != nullptr && !f->is_zero();
  WickData wick;
  if (f != nullptr) {
    if (f->dim() != ens.d) throw ValidationError("test function dimension differs from d");
    if (weighted) wick = wick_data(ens, *f);
  }
  std::vector<double> out(ens.n_paths);
  parallel_for(block_count(ens.n_paths), [&](std::size_t b) {
    PathFunctional phi(ens, tables, eps, N);
    const std::size_t P = paths_in(b, ens.n_paths);
    const std::size_t first = b * WhiteNoiseGrid::block_size;
    std::vector<double> weights = weighted ? block_weights(ens, wick, b) : std::vector<double>(P, 1.0);
    for (std::size_t p = 0; p < P; ++p) out[first + p] = phi(first + p) * weights[p];
  });
  return out;
}

}  // namespace

McEstimate mc_local_time_regularized(const PathEnsemble& ens, double eps, int stride) {
  const std::vector<double> v = per_path(ens, nullptr, eps, 0, stride);
  return summarize(v);
}

McEstimate mc_s_transform(const PathEnsemble& ens, const VectorTestFunction& f, double eps, int N, int stride) {
  if (!ens.grid) throw UnsupportedError("mc_s_transform needs a white-noise ensemble");
  const std::vector<double> v = per_path(ens, &f, eps, N, stride);
  return summarize(v);
}

McEstimate mc_wick_weight_mean(const PathEnsemble& ens, const VectorTestFunction& f) {
  const WickData wick = wick_data(ens, f);
  std::vector<double> out(ens.n_paths);
  parallel_for(block_count(ens.n_paths), [&](std::size_t b) {
    const std::vector<double> w = block_weights(ens, wick, b);
    std::copy(w.begin(), w.end(), out.begin() + static_cast<long>(b * WhiteNoiseGrid::block_size));
  });
  return summarize(out);
}

double grid_expectation(const PathEnsemble& ens, const VectorTestFunction& f, double eps, int N, int stride) {
  if (!(eps > 0.0)) throw ValidationError("grid_expectation needs eps > 0");
  if (N < 0) throw ValidationError("N must be >= 0");
  if (f.dim() != ens.d) throw ValidationError("test function dimension differs from d");
  const PairTables tables = pair_tables(ens, eps, 1, stride);
  const std::size_t P = tables.rule.index.size();

  // Mean shift g_j(t_k) = E[B_j(t_k) <w, f>] under the discretized law.
  std::vector<std::vector<double>> shift(static_cast<std::size_t>(ens.d), std::vector<double>(ens.times.size(), 0.0));
  if (!f.is_zero()) {
    const WickData wick = wick_data(ens, f);
    const WhiteNoiseGrid& g = *ens.grid;
    const std::size_t C = g.cells();
    for (int j = 0; j < ens.d; ++j)
      for (std::size_t k = 0; k < ens.times.size(); ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < C; ++i)
          s += ens.loading[k * C + i] * std::sqrt(g.width(i)) * wick.loading[static_cast<std::size_t>(j)][i];
        shift[static_cast<std::size_t>(j)][k] = s;
      }
  }

  std::vector<double> rows(P);
  for (std::size_t p = 0; p < P; ++p) {
    const std::size_t k = tables.rule.index[p];
    double row = 0.0;
    for (std::size_t q = p; q < P; ++q) {
      const std::size_t l = tables.rule.index[q];
      const double v = eps + tables.var[p](static_cast<Eigen::Index>(q - p));
      double m2 = 0.0;
      for (int j = 0; j < ens.d; ++j) {
        const double dm = shift[static_cast<std::size_t>(j)][l] - shift[static_cast<std::size_t>(j)][k];
        m2 += dm * dm;
      }
      row += tables.rule.weight[p](static_cast<Eigen::Index>(q - p)) * tables.coef[p][0](static_cast<Eigen::Index>(q - p)) *
             exp_truncated(-0.5 * m2 / v, N);
    }
    rows[p] = row;
  }
  return pairwise_sum(rows);
}

GridComparison mc_grid_comparison(const PathEnsemble& ens, const VectorTestFunction& f, double eps, int N) {
  if (!f.is_zero() && !ens.grid) throw UnsupportedError("S-transform weighting needs a white-noise ensemble");
  const std::vector<double> coarse = per_path(ens, &f, eps, N, 2);
  const std::vector<double> fine = per_path(ens, &f, eps, N, 1);
  std::vector<double> diff(coarse.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = coarse[i] - fine[i];
  GridComparison out;
  out.coarse = summarize(coarse);
  out.fine = summarize(fine);
  const McEstimate d = summarize(diff);
  out.difference = std::abs(d.mean);
  out.difference_stderr = d.std_error;
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics

CovarianceDeviation covariance_deviation(const PathEnsemble& ens, int component, double allowance,
                                         bool against_model) {
  if (component < 0 || component >= ens.d) throw ValidationError("component out of range");
  const std::size_t T = ens.times.size();
  const auto n = static_cast<Eigen::Index>(ens.n_paths);
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(T));
  for (Eigen::Index p = 0; p < n; ++p)
    for (std::size_t k = 0; k < T; ++k)
      X(p, static_cast<Eigen::Index>(k)) = ens.at(static_cast<std::size_t>(p), k, component);
  const double nn = static_cast<double>(n);
  const Eigen::MatrixXd first = X.transpose() * X / nn;
  const Eigen::MatrixXd sq = X.array().square().matrix();
  const Eigen::MatrixXd second = sq.transpose() * sq / nn;

  CovarianceDeviation out;
  out.max_z = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < T; ++k)
    for (std::size_t l = k; l < T; ++l) {
      const auto ki = static_cast<Eigen::Index>(k), li = static_cast<Eigen::Index>(l);
      const double target = against_model ? ens.model_cov(k, l) : fbm_covariance(ens.H, ens.times[k], ens.times[l]);
      const double dev = std::abs(first(ki, li) - target);
      const double var = std::max(0.0, second(ki, li) - first(ki, li) * first(ki, li)) * nn / (nn - 1.0);
      const double se = std::sqrt(var / nn);
      if (dev > out.max_deviation) {
        out.max_deviation = dev;
        out.stderr_at_max = se;
      }
      if (se > 0.0) out.max_z = std::max(out.max_z, (dev - allowance) / se);
    }
  return out;
}

double discretization_bias(const PathEnsemble& ens) {
  const std::size_t T = ens.times.size();
  double worst = 0.0;
  for (std::size_t k = 0; k < T; ++k)
    for (std::size_t l = 0; l < T; ++l)
      worst = std::max(worst, std::abs(ens.model_cov(k, l) - fbm_covariance(ens.H, ens.times[k], ens.times[l])));
  return worst;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha) {
  if (a.empty() || b.empty()) throw ValidationError("KS test needs two nonempty samples");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double D = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    D = std::max(D, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double crit = std::sqrt(-0.5 * std::log(0.5 * alpha)) * std::sqrt((na + nb) / (na * nb));
  return {D, crit, D <= crit};
}

}  // namespace loctime
