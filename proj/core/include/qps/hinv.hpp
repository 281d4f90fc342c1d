#pragma once

#include <memory>

#include "qps/lowrank.hpp"

namespace qps {

enum class InverseMethod { dense, hierarchical };

/// Direct inverse of one self-interaction block A^s_ii. Dense LU for
/// small blocks; otherwise an HODLR-style factorization over contiguous
/// interleaved index ranges, with off-diagonal row skeletons from the
/// same proxy machinery as the neighbor compression and a one-level
/// Woodbury solve per tree node. Apply is reentrant after build.
class BlockInverse {
 public:
  BlockInverse() = default;

  Mat apply(const Mat& X) const;
  Vec apply(const Vec& x) const;
  int dim() const { return n_; }
  bool hierarchical() const { return root_ != nullptr; }

  struct Node;

 private:
  friend BlockInverse build_block_inverse(const DifferenceBlock&,
                                          InverseMethod, double, int);
  friend BlockInverse build_block_inverse(const Mat&);

  int n_ = 0;
  Eigen::PartialPivLU<Mat> lu_;  // dense path
  std::shared_ptr<const Node> root_;
};

/// Blocks with dim <= 512 are always factored densely regardless of the
/// requested method.
BlockInverse build_block_inverse(const DifferenceBlock& block,
                                 InverseMethod method, double tol = 1e-12,
                                 int leaf_size = 128);

/// Dense inverse of an explicitly materialized block.
BlockInverse build_block_inverse(const Mat& A);

inline Mat apply_inverse(const BlockInverse& inv, const Mat& X) {
  return inv.apply(X);
}
inline Vec apply_inverse(const BlockInverse& inv, const Vec& x) {
  return inv.apply(x);
}

}  // namespace qps
