#include "qps/hinv.hpp"

#include <cstdio>
#include <numeric>

namespace qps {

struct BlockInverse::Node {
  int b = 0, n = 0;  // interleaved row range [b, b+n)
  // leaf (or saturated fallback)
  Eigen::PartialPivLU<Mat> lu;
  // internal
  std::shared_ptr<const Node> c1, c2;
  Mat A12h, A21h;              // k1 x n2, k2 x n1 skeleton rows
  Mat E1, E2;                  // n1 x k1, n2 x k2: D^{-1}-applied bases
  Eigen::PartialPivLU<Mat> M;  // I + W D^{-1} U
};

namespace {

std::vector<int> range_rows(int b, int n) {
  std::vector<int> r(n);
  std::iota(r.begin(), r.end(), b);
  return r;
}

Mat node_apply(const BlockInverse::Node* nd, const Mat& X) {
  if (!nd->c1) return nd->lu.solve(X);
  const int n1 = nd->c1->n, n2 = nd->c2->n;
  Mat Z(nd->n, X.cols());
  Z.topRows(n1) = node_apply(nd->c1.get(), X.topRows(n1));
  Z.bottomRows(n2) = node_apply(nd->c2.get(), X.bottomRows(n2));
  const int k1 = static_cast<int>(nd->A12h.rows());
  const int k2 = static_cast<int>(nd->A21h.rows());
  if (k1 + k2 == 0) return Z;
  Mat Wz(k1 + k2, X.cols());
  Wz.topRows(k1) = nd->A12h * Z.bottomRows(n2);
  Wz.bottomRows(k2) = nd->A21h * Z.topRows(n1);
  const Mat Y = nd->M.solve(Wz);
  Z.topRows(n1) -= nd->E1 * Y.topRows(k1);
  Z.bottomRows(n2) -= nd->E2 * Y.bottomRows(k2);
  return Z;
}

// Off-diagonal row basis: proxy segment skeletons recompressed against
// the true source columns. Returns the interpolant P (nt x k) and the
// skeleton rows of the block (k x ns).
std::pair<Mat, Mat> offdiag_basis(const DifferenceBlock& block, int tb,
                                  int te, int sb, int se, Side side,
                                  const CompressionParams& prm) {
  const SkeletonFactor id0 =
      compress_block_rows(block, block.source(), tb, te, sb, se, side, prm);
  std::vector<int> rows(id0.k);
  for (int i = 0; i < id0.k; ++i) rows[i] = id0.J(i);
  std::vector<int> cols;
  cols.reserve(2 * (se - sb));
  for (int j = sb; j < se; ++j) {
    cols.push_back(2 * j);
    cols.push_back(2 * j + 1);
  }
  const Mat M0 = block.submatrix(rows, cols);
  const SkeletonFactor id1 = interpolatory_decomposition(M0, prm.tol);
  Mat Ah(id1.k, M0.cols());
  for (int i = 0; i < id1.k; ++i) Ah.row(i) = M0.row(id1.J(i));
  return {id0.P * id1.P, std::move(Ah)};
}

std::shared_ptr<BlockInverse::Node> build_node(const DifferenceBlock& block,
                                               int b, int n, int leaf_size,
                                               const CompressionParams& prm) {
  auto nd = std::make_shared<BlockInverse::Node>();
  nd->b = b;
  nd->n = n;
  if (n <= leaf_size) {
    const auto rows = range_rows(b, n);
    nd->lu = Eigen::PartialPivLU<Mat>(block.submatrix(rows, rows));
    return nd;
  }

  const int n1 = 2 * ((n / 2) / 2);  // split on a node-pair boundary
  const int n2 = n - n1;
  nd->c1 = build_node(block, b, n1, leaf_size, prm);
  nd->c2 = build_node(block, b + n1, n2, leaf_size, prm);

  const int tb = b / 2, tm = (b + n1) / 2, te = (b + n) / 2;
  auto [P12, A12h] = offdiag_basis(block, tb, tm, tm, te, Side::plus, prm);
  auto [P21, A21h] = offdiag_basis(block, tm, te, tb, tm, Side::minus, prm);
  const int k1 = static_cast<int>(A12h.rows());
  const int k2 = static_cast<int>(A21h.rows());

  if (10 * std::max(k1, k2) >= 9 * std::min(n1, n2)) {
    std::fprintf(stderr,
                 "qps: off-diagonal rank saturated (%d/%d of %d); factoring "
                 "the block densely\n",
                 k1, k2, std::min(n1, n2));
    nd->c1.reset();
    nd->c2.reset();
    const auto rows = range_rows(b, n);
    nd->lu = Eigen::PartialPivLU<Mat>(block.submatrix(rows, rows));
    return nd;
  }

  nd->A12h = std::move(A12h);
  nd->A21h = std::move(A21h);
  nd->E1 = node_apply(nd->c1.get(), P12);
  nd->E2 = node_apply(nd->c2.get(), P21);
  Mat M = Mat::Identity(k1 + k2, k1 + k2);
  M.block(0, k1, k1, k2) += nd->A12h * nd->E2;
  M.block(k1, 0, k2, k1) += nd->A21h * nd->E1;
  nd->M = Eigen::PartialPivLU<Mat>(M);
  return nd;
}

}  // namespace

Mat BlockInverse::apply(const Mat& X) const {
  if (X.rows() != n_) throw std::invalid_argument("BlockInverse: bad shape");
  if (root_) return node_apply(root_.get(), X);
  return lu_.solve(X);
}

Vec BlockInverse::apply(const Vec& x) const { return Vec(apply(Mat(x))); }

BlockInverse build_block_inverse(const DifferenceBlock& block,
                                 InverseMethod method, double tol,
                                 int leaf_size) {
  BlockInverse inv;
  inv.n_ = block.dim();
  if (method == InverseMethod::dense || block.dim() <= 1024) {
    inv.lu_ = Eigen::PartialPivLU<Mat>(block.dense());
    return inv;
  }
  CompressionParams prm;
  prm.tol = tol;
  inv.root_ = build_node(block, 0, block.dim(), leaf_size, prm);
  return inv;
}

BlockInverse build_block_inverse(const Mat& A) {
  BlockInverse inv;
  inv.n_ = static_cast<int>(A.rows());
  inv.lu_ = Eigen::PartialPivLU<Mat>(A);
  return inv;
}

}  // namespace qps
