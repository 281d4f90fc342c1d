#pragma once

#include "qps/kernels.hpp"

namespace qps {

/// Index bookkeeping for the stacked unknown vector [sigma-hat; c; a].
/// Densities are interleaved per node (double-layer, single-layer) and
/// concatenated per interface; c holds P proxy coefficients per layer;
/// a holds the 2K+1+extra Rayleigh-Bloch coefficients for each of the
/// up/down expansions.
struct UnknownLayout {
  std::vector<int> sigma_offset;  // per interface, into the sigma block
  int n_sigma = 0;
  int n_c = 0;
  int n_a = 0;
  int P = 0;       // proxy sources per layer
  int modes = 0;   // RB orders per direction, 2K+1+extra

  int c_offset(int layer) const { return n_sigma + layer * P; }
  int a_offset(int updown) const { return n_sigma + n_c + updown * modes; }
  int total() const { return n_sigma + n_c + n_a; }
};

/// Every Bloch-phase-independent piece of the rectangular system. The A
/// blocks stay entry oracles (they are never materialized in the fast
/// path); the periodizing blocks are small and dense. Phase-dependent
/// blocks are stored split so any alpha can be formed by scaling.
struct SystemBlocks {
  LayerStack stack;
  std::vector<Discretization> interfaces;
  UnitCellLayout cell;
  UnitCellParams params;

  // A = A0 + A-hat pieces, per interface
  std::vector<DifferenceBlock> A_self;   // shift 0, with identities
  std::vector<DifferenceBlock> A_plus;   // +d copy
  std::vector<DifferenceBlock> A_minus;  // -d copy

  // B: per interface i, the +phi^{w_i} and -phi^{w_{i+1}} blocks
  std::vector<Mat> B_own, B_next;  // 2N_i x P

  // C: per layer l, traces at R_l + d and L_l - d of the
  // bounding interfaces' potentials; C(alpha) = alpha^{-2} C^R - alpha C^L
  std::vector<Mat> C_R_low, C_L_low;  // vs interface l   (l = 0..I-1)
  std::vector<Mat> C_R_up, C_L_up;    // vs interface l-1 (l = 1..I)

  // Q: per layer, Q(alpha) = alpha^{-1} Q^R - Q^L
  std::vector<Mat> Q_R, Q_L;  // 2M_w x P

  // Z copies: Z(alpha) = Z0 + alpha Zp + alpha^{-1} Zm
  Mat Z_U0, Z_Up, Z_Um;  // 2M x 2N_0
  Mat Z_D0, Z_Dp, Z_Dm;  // 2M x 2N_{I-1}

  // V
  Mat V_U, V_D;  // 2M x P

  int num_interfaces() const { return static_cast<int>(interfaces.size()); }
  int num_layers() const { return num_interfaces() + 1; }
};

SystemBlocks assemble_system(const LayerStack& stack,
                             const std::vector<Discretization>& interfaces,
                             const UnitCellParams& params);

UnknownLayout make_layout(const SystemBlocks& sys, int extra_orders = 0);

/// Rayleigh-Bloch matching block W for the representative angle. Columns
/// n = -K .. K+extra_orders per direction, kappa_n = omega1 cos(theta) +
/// 2 pi n / d, k_n on the positive real or positive imaginary branch.
Mat assemble_W(double theta, double omega1, double omegaI1, double d, int K,
               int extra_orders, const UnitCellLayout& cell);

double rb_kappa(double theta, double omega1, double d, int n);
Complex rb_k(double omega, double kappa);

/// Right-hand side: minus the incident trace and flux on the first
/// interface, sqrt(w)-scaled like the A rows; zero elsewhere.
Vec assemble_rhs(const SystemBlocks& sys, const IncidentWave& inc);

/// Dense materializers (small systems and tests).
Mat materialize_A(const SystemBlocks& sys, Complex alpha);
Mat materialize_B(const SystemBlocks& sys);
Mat materialize_C(const SystemBlocks& sys, Complex alpha);
Mat materialize_Q(const SystemBlocks& sys, Complex alpha);
Mat materialize_Z(const SystemBlocks& sys, Complex alpha);
Mat materialize_V(const SystemBlocks& sys);
/// The full rectangular matrix of eq. (14).
Mat materialize_full(const SystemBlocks& sys, const Mat& W, Complex alpha);

/// Dense cross block A_{ij}(alpha), |i-j| = 1, all three copies.
Mat cross_block(const SystemBlocks& sys, int i, int j, Complex alpha);

/// Rebuild the blocks touching interface i after sys.interfaces[i] (and
/// sys.stack) have been swapped: its A blocks, the B/C/Q rows of the two
/// layers it bounds, and the Z/V blocks when it is an outer interface.
/// The unit cell is rebuilt (walls and proxies of the bounded layers may
/// have moved); everything else is kept.
void reassemble_interface(SystemBlocks& sys, int i);

/// Rebuild the blocks involving layer l's wavenumber after
/// sys.stack.wavenumbers[l] changed: the A blocks of its bounding
/// interfaces and the periodizing blocks evaluated at omega_l.
void reassemble_wavenumber(SystemBlocks& sys, int l);

}  // namespace qps
