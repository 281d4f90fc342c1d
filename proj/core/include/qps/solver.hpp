#pragma once

#include "qps/assembly.hpp"
#include "qps/hinv.hpp"

namespace qps {

struct SolverOptions {
  CompressionParams compression;
  InverseMethod inverse = InverseMethod::hierarchical;
  int leaf_size = 128;
  double schur_eps = 1e-13;  // relative truncation of the Schur SVD
};

/// One low-rank factor of A-hat in global column order; the S2 blocks and
/// the cached products are indexed by this list. kind: 0 = vertical
/// (i,i-1), 1 = neighbor +d, 2 = neighbor -d, 3 = vertical (i,i+1).
struct FactorRef {
  int row = 0;   // interface carrying the L rows
  int src = 0;   // interface carrying the R columns
  int kind = 0;
  int k = 0;     // rank
  int col = 0;   // offset into the global factor index
};

/// Phase-independent heavy work: the block inverses of A0 and the
/// low-rank factors of A-hat.
struct PrecompI {
  std::vector<BlockInverse> Ainv;  // per interface
  LowRankFactors lr;
  std::vector<FactorRef> factors;  // global column order
  int k_tot = 0;
  double seconds = 0.0;
  std::uint64_t kernel_evals = 0;
};

PrecompI precompute_I(const SystemBlocks& sys, const SolverOptions& opt);

/// Phase-independent products: E_g = A0^{-1} L_g per factor, the S2
/// ingredient products R_piece E_g, and every periodizing-block product
/// needed to assemble the Schur complement by scalar phase combination.
struct PrecompII {
  std::vector<Mat> E;  // per factor, 2N_row x k

  // S2 ingredients: T[f][piece][g_local] = R_piece(f) * E_g for factors g
  // with row == src(f); pieces are (0,p,m) for vertical factors and the
  // single phase-free R for neighbor factors.
  struct S2Prod {
    int g = 0;  // global factor index
    Mat T0, Tp, Tm;
  };
  std::vector<std::vector<S2Prod>> T;  // per factor f

  Mat F_B;             // A0^{-1} B, 2N x n_c
  std::vector<Mat> U0, Up, Um;  // per factor: R_piece * F_B, k x n_c

  // periodizing traces of F_B and of the global E columns
  Mat CR_FB, CL_FB, CR_E, CL_E;  // C rows
  Mat Z0_FB, Zp_FB, Zm_FB, Z0_E, Zp_E, Zm_E;  // 4M rows

  double seconds = 0.0;
  std::uint64_t kernel_evals = 0;
};

PrecompII precompute_II(const SystemBlocks& sys, const PrecompI& pI);

/// Factored block-tridiagonal solve (Thomas algorithm on blocks).
class BlockThomas {
 public:
  BlockThomas() = default;
  /// X: diagonal blocks, Y: lower (Y[i] couples block i to i-1, i >= 1),
  /// Z: upper (Z[i] couples block i to i+1, i <= n-2).
  BlockThomas(const std::vector<Mat>& X, const std::vector<Mat>& Y,
              const std::vector<Mat>& Z);
  Mat solve(const Mat& rhs) const;
  int dim() const { return n_; }

 private:
  int n_ = 0;
  std::vector<int> off_;
  std::vector<Eigen::PartialPivLU<Mat>> lu_;  // modified diagonal blocks
  std::vector<Mat> Y_, Z_;
};

/// Convenience one-shot solve.
Mat block_thomas(const std::vector<Mat>& X, const std::vector<Mat>& Y,
                 const std::vector<Mat>& Z, const Mat& rhs);

/// Everything tied to one Bloch phase: S2 factorization, the cached
/// A^{-1}B action, and the pseudo-inverted Schur complement with the
/// extended Rayleigh-Bloch block.
struct PhaseSolver {
  Complex alpha{1.0, 0.0};
  double rep_theta = 0.0;
  int extra_orders = 0;
  Mat W;

  BlockThomas s2;
  Mat VB;  // S2^{-1} R(alpha) F_B, k_tot x n_c

  // truncated SVD of the Schur complement
  Mat Ut, Vt;
  RealVec sv;
  int svd_rank = 0;

  double seconds = 0.0;
};

PhaseSolver precompute_III(const SystemBlocks& sys, const PrecompI& pI,
                           const PrecompII& pII, Complex alpha,
                           double rep_theta, int extra_orders,
                           const SolverOptions& opt = {});

/// Woodbury fast apply of A(alpha)^{-1}.
Mat apply_A_inverse(const PrecompI& pI, const PrecompII& pII,
                    const PhaseSolver& ps, const Mat& f);

/// Assembled S2 blocks (block-tridiagonal layout) for the given phase; exposed
/// for the structure tests.
void assemble_S2(const PrecompI& pI, const PrecompII& pII, Complex alpha,
                 std::vector<Mat>& X, std::vector<Mat>& Y,
                 std::vector<Mat>& Z);

struct SolveResult {
  double theta = 0.0;
  Complex alpha{1.0, 0.0};
  Vec sigma_hat;                 // sqrt(w)-scaled interleaved densities
  std::vector<Vec> sigma, tau;   // per interface, unscaled node values
  Vec c;                         // proxy coefficients, per layer blocks
  Vec aU, aD;                    // Rayleigh-Bloch orders n = -K..K
  double flux_error = 0.0;
};

SolveResult solve(const SystemBlocks& sys, const PrecompI& pI,
                  const PrecompII& pII, const PhaseSolver& ps, double theta);

struct AngleGroup {
  double rep_theta = 0.0;  // member with smallest omega1 cos(theta)
  Complex alpha{1.0, 0.0};
  std::vector<double> angles;
  std::vector<int> shifts;  // omega1 cos(theta_j) = rep + 2 pi m_j / d
};

std::vector<AngleGroup> group_angles(const std::vector<double>& angles,
                                     double omega1, double d);

struct SweepTiming {
  double precomp1_s = 0.0, precomp2_s = 0.0;
  std::vector<double> precomp3_s;  // per group
  std::vector<double> solve_s;     // per angle
  int n_groups = 0;
  int n_phase_builds = 0;
};

std::vector<SolveResult> sweep(const SystemBlocks& sys, const PrecompI& pI,
                               const PrecompII& pII,
                               const std::vector<double>& angles,
                               const SolverOptions& opt = {},
                               SweepTiming* timing = nullptr);

/// Mutable bundle for the local-update operations.
struct SolverState {
  LayerStack stack;
  std::vector<int> panels;  // per interface
  UnitCellParams params;
  SolverOptions opt;
  SystemBlocks sys;
  PrecompI pI;
  PrecompII pII;
  std::vector<int> last_rebuilt;  // interfaces refactored by the last update
};

SolverState make_state(const LayerStack& stack, const std::vector<int>& panels,
                       const UnitCellParams& params, const SolverOptions& opt);

/// Swap one interface; rebuilds only the blocks and factors touching it.
void update_interface(SolverState& st, int i, const InterfaceGeometry& geom,
                      int n_panels);

/// Change one layer's wavenumber; rebuilds the blocks of its (at most
/// two) bounding interfaces.
void update_wavenumber(SolverState& st, int layer, double new_omega);

}  // namespace qps
