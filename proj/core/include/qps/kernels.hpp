#pragma once

#include <memory>
#include <unordered_map>
#include <vector>

#include "qps/geometry.hpp"
#include "qps/specfun.hpp"

namespace qps {

/// Dense layer-potential block: entry (i, j) is
///   kind(omega; x_i, y_j + shift*(d,0)) * sqrt(w_j),
/// acting on sqrt(w)-scaled densities. Rows are left unscaled; callers
/// with weighted targets apply their own sqrt(w) row scaling.
Mat potential_matrix(KernelKind kind, double omega,
                     const std::vector<Point2>& targets,
                     const std::vector<Point2>& target_normals,
                     const Discretization& src, int shift);

/// Interleaved 2x2 transmission pattern sign * [[D, S], [T, D*]] at one
/// wavenumber, sources optionally on a shifted copy. Used for the
/// cross-interface blocks A_{i,i+1} (sign -1, omega_{i+1}) and
/// A_{i,i-1} (sign +1, omega_i). Column-scaled by sqrt(w_j).
Mat pattern_block(double omega, const std::vector<Point2>& targets,
                  const std::vector<Point2>& target_normals,
                  const Discretization& src, int shift, double sign);

/// Entry access to the L2-scaled self-interaction difference blocks
///   [[(-I) + D^t - D^b, S^t - S^b], [T^t - T^b, (+I) + D*^t - D*^b]]
/// on one interface (identity present only for shift = 0). Entries whose
/// source panel lies parameter-near the target carry product-integration
/// log corrections; they are precomputed and cached, so entry() is cheap
/// and the block never needs dense materialization for large N.
class DifferenceBlock {
 public:
  DifferenceBlock(const Discretization& src, double omega_top,
                  double omega_bot, int shift);

  Complex entry(int row, int col) const;  // indices in [0, 2N)
  Mat dense() const;
  Mat submatrix(const std::vector<int>& rows,
                const std::vector<int>& cols) const;
  int dim() const { return 2 * src_->size(); }
  const Discretization& source() const { return *src_; }
  double omega_top() const { return wt_; }
  double omega_bot() const { return wb_; }
  int shift() const { return shift_; }

 private:
  const Discretization* src_;
  double wt_, wb_;
  int shift_;
  // corrected kernel parts per near node pair, all four kinds
  std::unordered_map<std::int64_t, KernelValues4> near_;
};

/// Convenience dense forms.
Mat self_difference_block(const Discretization& src, double omega_top,
                          double omega_bot);
Mat neighbor_difference_block(const Discretization& src, double omega_top,
                              double omega_bot, int shift);

/// T x P proxy basis: column j is phi_j = dG/dn_j + i omega G for the
/// j-th proxy source, evaluated at the targets (or its derivative along
/// target_normals). No quadrature weights are involved.
Mat proxy_basis_matrix(const ProxyCircle& circle, double omega,
                       const std::vector<Point2>& targets,
                       const std::vector<Point2>& target_normals,
                       bool with_normal_derivative);

}  // namespace qps
