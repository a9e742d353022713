#pragma once

// Chaos-expansion kernels of the truncated and regularized local times and
// the reconstruction of their S-transforms from the kernel pairings.

#include <string>
#include <vector>

#include "loctime/admissibility.hpp"
#include "loctime/fractional_ops.hpp"
#include "loctime/singular_quadrature.hpp"
#include "loctime/stransform.hpp"

namespace loctime {

/// Multi-index n = (n_1, ..., n_d). Component j owns a block of 2 n_j kernel
/// arguments, so the kernel lives on 2|n| points.
class KernelIndex {
 public:
  explicit KernelIndex(std::vector<int> orders);

  const std::vector<int>& orders() const { return orders_; }
  int dim() const { return static_cast<int>(orders_.size()); }
  int total() const { return total_; }
  /// n! = prod n_j!
  double factorial_weight() const { return factorial_weight_; }
  int points() const { return 2 * total_; }

 private:
  std::vector<int> orders_;
  int total_ = 0;
  double factorial_weight_ = 1.0;
};

/// Kernel arguments (u_1, ..., u_2n), stored block by block.
class KernelArgument {
 public:
  KernelArgument(const KernelIndex& idx, std::vector<double> points);

  const std::vector<double>& points() const { return points_; }
  /// Points of block j.
  std::vector<double> block(const KernelIndex& idx, int j) const;

 private:
  std::vector<double> points_;
};

/// Unregularized kernel; requires 2|n|(1-H) - dH > -1.
double kernel_value(Hurst H, int d, const KernelIndex& idx, const KernelArgument& arg, Tolerance tol = {1e-9, 0.0});

/// Regularized kernel, defined for every order when eps > 0.
double kernel_value_regularized(Hurst H, int d, const KernelIndex& idx, double eps, const KernelArgument& arg,
                                Tolerance tol = {1e-9, 0.0});

/// Structural zero for a raw chaos index (m_1, ..., m_d) with some odd m_j.
/// Throws MisuseError when every m_j is even.
double odd_kernel_zero(const std::vector<int>& raw_orders);

/// Kernel addressed by raw chaos index m = (m_1, ..., m_d): odd entries give
/// exact 0, otherwise n = m / 2. eps = 0 selects the unregularized kernel.
double chaos_kernel(Hurst H, int d, const std::vector<int>& raw_orders, double eps, const std::vector<double>& points,
                    Tolerance tol = {1e-9, 0.0});

struct OrderContribution {
  int order;
  double value;
  double error_estimate;
};

struct SeriesReport {
  double partial_sum = 0.0;
  double error_estimate = 0.0;
  std::vector<OrderContribution> contributions;
  /// Magnitude of the highest computed order.
  double last_contribution = 0.0;
  bool converged = false;
  std::string diagnostic;
};

/// Sum over orders n = N..max_order of the chaos contributions to S L(f).
/// converged is false when the last contribution still exceeds tol.
SeriesReport series_reconstruction(const DeltaSpec& spec, const VectorTestFunction& f, int max_order,
                                   Tolerance tol = {1e-9, 0.0});
SeriesReport series_reconstruction(const DeltaSpec& spec, PairingCache& cache, int max_order,
                                   Tolerance tol = {1e-9, 0.0});

}  // namespace loctime
