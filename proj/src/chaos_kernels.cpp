#include "loctime/chaos_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "loctime/errors.hpp"

namespace loctime {

KernelIndex::KernelIndex(std::vector<int> orders) : orders_(std::move(orders)) {
  if (orders_.empty()) throw ValidationError("kernel index needs d >= 1 entries");
  for (int n : orders_) {
    if (n < 0) throw ValidationError("kernel index entries must be >= 0");
    total_ += n;
    factorial_weight_ *= std::tgamma(n + 1.0);
  }
}

KernelArgument::KernelArgument(const KernelIndex& idx, std::vector<double> points) : points_(std::move(points)) {
  if (static_cast<int>(points_.size()) != idx.points()) {
    std::ostringstream msg;
    msg << "kernel of total order " << idx.total() << " needs " << idx.points() << " points, got " << points_.size();
    throw ValidationError(msg.str());
  }
}

std::vector<double> KernelArgument::block(const KernelIndex& idx, int j) const {
  std::size_t start = 0;
  for (int i = 0; i < j; ++i) start += 2 * static_cast<std::size_t>(idx.orders()[i]);
  const auto len = 2 * static_cast<std::size_t>(idx.orders()[j]);
  return {points_.begin() + static_cast<long>(start), points_.begin() + static_cast<long>(start + len)};
}

namespace {

double prefactor(const KernelIndex& idx, int d) {
  return std::pow(-0.5, idx.total()) / idx.factorial_weight() * std::pow(2.0 * std::numbers::pi, -0.5 * d);
}

void check_index(const KernelIndex& idx, int d) {
  if (idx.dim() != d) {
    std::ostringstream msg;
    msg << "kernel index has " << idx.dim() << " entries but d = " << d;
    throw ValidationError(msg.str());
  }
}

// Breakpoints in (0, 1) where the indicator images are not smooth in t,
// sorted and distinct as the local integrand expects.
std::vector<double> cuts_of(const std::vector<double>& u) {
  std::vector<double> out;
  for (double x : u)
    if (x > 0.0 && x < 1.0) out.push_back(x);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Product of the indicator images at u from the offsets supplied by the
// quadrature, times weight(tau).
template <typename W>
auto local_product(const IndicatorKernel& k, const std::vector<double>& u, const std::vector<double>& cuts, W weight) {
  std::vector<int> slot;
  for (double x : u) {
    const auto it = std::lower_bound(cuts.begin(), cuts.end(), x);
    slot.push_back(it != cuts.end() && *it == x ? static_cast<int>(it - cuts.begin()) : -1);
  }
  return [&k, &u, slot, weight](double t1, double tau, std::span<const double> d1, std::span<const double> d2) {
    double p = 1.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const int j = slot[i];
      const double ds = j >= 0 ? d1[static_cast<std::size_t>(j)] : t1 - u[i];
      const double dt = j >= 0 ? d2[static_cast<std::size_t>(j)] : t1 + tau - u[i];
      if (k.hurst().a() < 0.0 && (ds == 0.0 || dt == 0.0)) return 0.0;
      p *= k.at_offsets(ds, dt, tau);
      if (p == 0.0) return 0.0;
    }
    return p * weight(tau);
  };
}

}  // namespace

double kernel_value(Hurst H, int d, const KernelIndex& idx, const KernelArgument& arg, Tolerance tol) {
  check_index(idx, d);
  const int n = idx.total();
  const Admissibility gate = admissibility(H, d, n);
  if (!gate.admissible) {
    std::ostringstream msg;
    msg << "kernel of order " << n << " is not integrable: " << admissibility_message(H, d, n);
    throw AdmissibilityError(msg.str(), gate.minimal_n);
  }
  const std::vector<double>& u = arg.points();
  if (std::any_of(u.begin(), u.end(), [](double x) { return x >= 1.0; })) return 0.0;
  const IndicatorKernel k(H);
  SingularIntegrandSpec spec;
  // tau^-(2Hn + dH) prod = tau^-alpha (tau^-2n prod).
  spec.alpha = d * H.value() - 2.0 * n * (1.0 - H.value());
  spec.breakpoints = cuts_of(u);
  spec.g_local = local_product(k, u, spec.breakpoints, [n](double tau) { return std::pow(tau, -2.0 * n); });
  const double pref = prefactor(idx, d);
  spec.tol = {tol.abs / std::abs(pref), tol.rel};
  return pref * integrate_triangle_singular(spec).value;
}

double kernel_value_regularized(Hurst H, int d, const KernelIndex& idx, double eps, const KernelArgument& arg,
                                Tolerance tol) {
  check_index(idx, d);
  if (!(eps > 0.0)) throw ValidationError("regularized kernel needs eps > 0");
  const std::vector<double>& u = arg.points();
  if (std::any_of(u.begin(), u.end(), [](double x) { return x >= 1.0; })) return 0.0;
  const int n = idx.total();
  const double h = H.value();
  const IndicatorKernel k(H);
  SingularIntegrandSpec spec;
  spec.alpha = 0.0;
  spec.breakpoints = cuts_of(u);
  spec.g_local = local_product(k, u, spec.breakpoints,
                               [n, d, h, eps](double tau) { return std::pow(eps + std::pow(tau, 2.0 * h), -(n + 0.5 * d)); });
  const double pref = prefactor(idx, d);
  spec.tol = {tol.abs / std::abs(pref), tol.rel};
  return pref * integrate_triangle_singular(spec).value;
}

double odd_kernel_zero(const std::vector<int>& raw_orders) {
  if (std::none_of(raw_orders.begin(), raw_orders.end(), [](int m) { return m % 2 != 0; }))
    throw MisuseError("odd_kernel_zero needs an index with at least one odd entry");
  return 0.0;
}

double chaos_kernel(Hurst H, int d, const std::vector<int>& raw_orders, double eps, const std::vector<double>& points,
                    Tolerance tol) {
  if (static_cast<int>(raw_orders.size()) != d) throw ValidationError("chaos index must have d entries");
  for (int m : raw_orders)
    if (m < 0) throw ValidationError("chaos index entries must be >= 0");
  if (std::any_of(raw_orders.begin(), raw_orders.end(), [](int m) { return m % 2 != 0; }))
    return odd_kernel_zero(raw_orders);
  std::vector<int> half;
  for (int m : raw_orders) half.push_back(m / 2);
  const KernelIndex idx(half);
  const KernelArgument arg(idx, points);
  if (eps > 0.0) return kernel_value_regularized(H, d, idx, eps, arg, tol);
  return kernel_value(H, d, idx, arg, tol);
}

namespace {

// Every composition of n into d nonnegative parts.
void compositions(int n, int d, std::vector<int>& current, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(current.size()) == d - 1) {
    current.push_back(n);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int k = 0; k <= n; ++k) {
    current.push_back(k);
    compositions(n - k, d, current, out);
    current.pop_back();
  }
}

}  // namespace

SeriesReport series_reconstruction(const DeltaSpec& spec, PairingCache& cache, int max_order, Tolerance tol) {
  if (cache.function().dim() != spec.d) throw ValidationError("test function dimension differs from d");
  if (cache.hurst().value() != spec.H.value()) throw MisuseError("pairing cache was built for a different H");
  if (max_order < spec.N) throw ValidationError("max_order must be >= N");
  if (spec.eps == 0.0 && !spec.admissible())
    throw AdmissibilityError(admissibility_message(spec.H, spec.d, spec.N), spec.minimal_n());

  SeriesReport report;
  const int d = spec.d;
  const double h = spec.H.value();
  const double eps = spec.eps;
  const int orders = max_order - spec.N + 1;
  const Tolerance per_order{0.5 * tol.abs / orders, tol.rel};
  const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * d);

  for (int n = spec.N; n <= max_order; ++n) {
    std::vector<std::vector<int>> indices;
    std::vector<int> scratch;
    compositions(n, d, scratch, indices);
    std::vector<double> weights;
    for (const auto& idx : indices) weights.push_back(1.0 / KernelIndex(idx).factorial_weight());

    // Sum over |idx| = n of prod_j v_j^(2 n_j) / idx!.
    auto multinomial = [&](double t1, double tau) {
      const std::vector<double>& v = cache.at(t1, tau);
      double s = 0.0;
      for (std::size_t k = 0; k < indices.size(); ++k) {
        double term = weights[k];
        for (int j = 0; j < d; ++j) term *= std::pow(v[static_cast<std::size_t>(j)], 2 * indices[k][static_cast<std::size_t>(j)]);
        s += term;
      }
      return s;
    };
    const double sign_pref = std::pow(-0.5, n) * norm;
    SingularIntegrandSpec integrand;
    integrand.tol = per_order;
    if (eps > 0.0) {
      integrand.alpha = 0.0;
      integrand.g_local = [&, n](double t1, double tau, auto, auto) {
        const double m = n == 0 ? 1.0 : multinomial(t1, tau);
        return sign_pref * m * std::pow(eps + std::pow(tau, 2.0 * h), -(n + 0.5 * d));
      };
    } else {
      integrand.alpha = d * h - 2.0 * n * (1.0 - h);
      integrand.g_local = [&, n](double t1, double tau, auto, auto) {
        const double m = n == 0 ? 1.0 : multinomial(t1, tau);
        return sign_pref * m * std::pow(tau, -2.0 * n);
      };
    }
    const QuadratureResult r = integrate_triangle_singular(integrand);
    report.contributions.push_back({n, r.value, r.error_estimate});
    report.partial_sum += r.value;
    report.error_estimate += r.error_estimate;
    report.last_contribution = std::abs(r.value);
  }
  report.converged = report.last_contribution <= tol.bound(report.partial_sum);
  if (!report.converged) {
    std::ostringstream msg;
    msg << "series truncated at order " << max_order << " with last contribution " << report.last_contribution
        << " above tolerance " << tol.bound(report.partial_sum);
    report.diagnostic = msg.str();
  }
  return report;
}

SeriesReport series_reconstruction(const DeltaSpec& spec, const VectorTestFunction& f, int max_order, Tolerance tol) {
  PairingCache cache(spec.H, f);
  return series_reconstruction(spec, cache, max_order, tol);
}

}  // namespace loctime
