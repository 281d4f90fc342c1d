#pragma once

#include <utility>
#include <vector>

#include "qps/kernels.hpp"

namespace qps {

/// Row-skeleton interpolatory decomposition M ~= P * M(J, :) with
/// P(J(i), :) = e_i exactly. Rank is picked by relative pivot magnitude.
struct SkeletonFactor {
  Mat P;
  IdxVec J;
  int k = 0;
  double tol_used = 0.0;
};

SkeletonFactor interpolatory_decomposition(const Mat& M, double tol);

struct CompressionParams {
  int n_max = 45;
  int n_proxy = 80;
  double near_radius_factor = 1.75;
  double tol = 1e-12;
  int recompress_lump = 2;
};

enum class Side { plus, minus };

/// Node-index ranges [begin, end) partitioning [0, n) into segments that
/// shrink dyadically toward the periodic copy: toward n for plus, toward
/// 0 for minus. Halving stops once the nearest segment holds < n_max
/// nodes; it is listed last.
std::vector<std::pair<int, int>> dyadic_segments(int n, Side side, int n_max);

/// Low-rank factorization of one neighbor-copy block,
///   A^p_ii ~= L R  (shift +1)  or  A^m_ii ~= L R  (shift -1),
/// both blocks in the same sqrt(w)-scaled units as DifferenceBlock.
/// R = A^side(J, :) so the factorization is exact on the skeleton rows.
struct NeighborFactor {
  Mat L;     // 2N x k, with L(J(i), :) = e_i exactly
  IdxVec J;  // row indices into the 2N interleaved system rows
  Mat R;     // k x 2N
  int shift = 0;
  // pre-recompression segment data, kept for diagnostics and tests
  std::vector<std::pair<int, int>> segments;  // node ranges
  Mat P0;                                     // 2N x k0 block-diagonal
  IdxVec J0;                                  // k0 system-row indices
};

NeighborFactor compress_neighbor(const Discretization& src, double omega_top,
                                 double omega_bot, Side side,
                                 const CompressionParams& prm);

/// Low-rank factorization of a cross-interface block and its two copies,
///   sign * pattern(omega; shift s) for s in {0, +1, -1},
/// all sharing the target-row basis L:
///   A_ij(alpha) ~= L * (R0 + alpha Rp + alpha^{-1} Rm).
/// Entries are sqrt(w)-scaled on both sides like the assembled system.
struct VerticalFactor {
  Mat L;  // 2N_i x k
  IdxVec J;
  Mat R0, Rp, Rm;  // each k x 2N_j
  bool dense_fallback = false;

  Mat R_at(Complex alpha) const { return R0 + alpha * Rp + Rm / alpha; }
};

VerticalFactor compress_vertical(const Discretization& tgt,
                                 const Discretization& src, double omega,
                                 double sign, const CompressionParams& prm);

/// Row skeleton of the sub-block of `block` with target nodes [tb, te)
/// and source nodes [sb, se), built per dyadic proxy segment shrinking
/// toward `side` (the end of the target range facing the sources). P is
/// block diagonal over the segments; no recompression pass is applied.
/// Row indices in J are global interleaved indices of `block`.
SkeletonFactor compress_block_rows(const DifferenceBlock& block,
                                   const Discretization& g, int tb, int te,
                                   int sb, int se, Side side,
                                   const CompressionParams& prm);

/// All phase-free low-rank factors of A-hat for a layer stack.
/// nb_plus[i]/nb_minus[i] compress the +-d copies of interface i's
/// self-interaction; vert_lower[i] is the block (i, i+1) at omega_{i+1}
/// (sign -1), vert_upper[i] the block (i, i-1) at omega_i (sign +1).
struct LowRankFactors {
  std::vector<NeighborFactor> nb_plus, nb_minus;
  std::vector<VerticalFactor> vert_lower;  // i = 0 .. I-2, block (i, i+1)
  std::vector<VerticalFactor> vert_upper;  // i = 1 .. I-1, block (i, i-1)
  std::vector<int> block_rows;             // 2 N_i per interface
};

LowRankFactors build_lowrank_factors(
    const std::vector<Discretization>& interfaces,
    const std::vector<double>& wavenumbers, const CompressionParams& prm);

/// Dense global factors with A-hat(alpha) = L * R(alpha). L is
/// phase-independent; R is assembled from the stored phase-free pieces
/// without touching any kernel evaluation. Column order per interface i:
/// [vert (i,i-1) | neighbor plus | neighbor minus | vert (i,i+1)].
Mat global_L(const LowRankFactors& f);
Mat global_R(const LowRankFactors& f, Complex alpha);

}  // namespace qps
