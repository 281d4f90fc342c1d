#include "qps/assembly.hpp"

#include <cmath>

namespace qps {

namespace {

// Interleaved [value; flux] proxy-basis traces at the given targets.
Mat phi_pair(const ProxyCircle& circle, double omega,
             const std::vector<Point2>& x, const std::vector<Point2>& nx) {
  const Mat val = proxy_basis_matrix(circle, omega, x, nx, false);
  const Mat der = proxy_basis_matrix(circle, omega, x, nx, true);
  Mat out(2 * val.rows(), val.cols());
  for (int m = 0; m < val.rows(); ++m) {
    out.row(2 * m) = val.row(m);
    out.row(2 * m + 1) = der.row(m);
  }
  return out;
}

Mat sqrtw_rows(Mat M, const Discretization& g) {
  for (int m = 0; m < g.size(); ++m) {
    const double sw = std::sqrt(g.weights(m));
    M.row(2 * m) *= sw;
    M.row(2 * m + 1) *= sw;
  }
  return M;
}

std::vector<Point2> shifted(const std::vector<Point2>& pts, double dx) {
  std::vector<Point2> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    out[i] = {pts[i].x + dx, pts[i].y};
  return out;
}

std::vector<Point2> const_normals(std::size_t n, Point2 nu) {
  return std::vector<Point2>(n, nu);
}

void build_A(SystemBlocks& sys, int i) {
  const auto& w = sys.stack.wavenumbers;
  sys.A_self[i] = DifferenceBlock(sys.interfaces[i], w[i], w[i + 1], 0);
  sys.A_plus[i] = DifferenceBlock(sys.interfaces[i], w[i], w[i + 1], +1);
  sys.A_minus[i] = DifferenceBlock(sys.interfaces[i], w[i], w[i + 1], -1);
}

void build_B(SystemBlocks& sys, int i) {
  const auto& w = sys.stack.wavenumbers;
  const auto& g = sys.interfaces[i];
  sys.B_own[i] =
      sqrtw_rows(phi_pair(sys.cell.proxies[i], w[i], g.nodes, g.normals), g);
  sys.B_next[i] = sqrtw_rows(
      -phi_pair(sys.cell.proxies[i + 1], w[i + 1], g.nodes, g.normals), g);
}

// C and Q rows of layer l; `up`/`low` select which column blocks.
void build_CQ(SystemBlocks& sys, int l, bool low, bool up, bool q) {
  const auto& w = sys.stack.wavenumbers;
  const int I = sys.num_interfaces();
  const double d = sys.stack.period;
  const Point2 ex{1.0, 0.0};
  const auto tR = shifted(sys.cell.wall_right[l], d);  // R_l + d
  const auto tL = shifted(sys.cell.wall_left[l], -d);  // L_l - d
  const auto nx = const_normals(tR.size(), ex);
  if (low && l < I) {
    sys.C_R_low[l] = pattern_block(w[l], tR, nx, sys.interfaces[l], 0, 1.0);
    sys.C_L_low[l] = pattern_block(w[l], tL, nx, sys.interfaces[l], 0, 1.0);
  }
  if (up && l >= 1) {
    sys.C_R_up[l - 1] =
        pattern_block(w[l], tR, nx, sys.interfaces[l - 1], 0, 1.0);
    sys.C_L_up[l - 1] =
        pattern_block(w[l], tL, nx, sys.interfaces[l - 1], 0, 1.0);
  }
  if (q) {
    const auto nR = const_normals(sys.cell.wall_right[l].size(), ex);
    sys.Q_R[l] =
        phi_pair(sys.cell.proxies[l], w[l], sys.cell.wall_right[l], nR);
    sys.Q_L[l] =
        phi_pair(sys.cell.proxies[l], w[l], sys.cell.wall_left[l], nR);
  }
}

void build_top(SystemBlocks& sys) {
  const auto& w = sys.stack.wavenumbers;
  const auto nyU = const_normals(sys.cell.top_nodes.size(), {0.0, 1.0});
  const auto& g = sys.interfaces[0];
  sys.Z_U0 = pattern_block(w[0], sys.cell.top_nodes, nyU, g, 0, 1.0);
  sys.Z_Up = pattern_block(w[0], sys.cell.top_nodes, nyU, g, 1, 1.0);
  sys.Z_Um = pattern_block(w[0], sys.cell.top_nodes, nyU, g, -1, 1.0);
  sys.V_U = phi_pair(sys.cell.proxies[0], w[0], sys.cell.top_nodes, nyU);
}

void build_bottom(SystemBlocks& sys) {
  const auto& w = sys.stack.wavenumbers;
  const int I = sys.num_interfaces();
  const auto nyD = const_normals(sys.cell.bottom_nodes.size(), {0.0, 1.0});
  const auto& g = sys.interfaces[I - 1];
  sys.Z_D0 = pattern_block(w[I], sys.cell.bottom_nodes, nyD, g, 0, 1.0);
  sys.Z_Dp = pattern_block(w[I], sys.cell.bottom_nodes, nyD, g, 1, 1.0);
  sys.Z_Dm = pattern_block(w[I], sys.cell.bottom_nodes, nyD, g, -1, 1.0);
  sys.V_D = phi_pair(sys.cell.proxies[I], w[I], sys.cell.bottom_nodes, nyD);
}

}  // namespace

SystemBlocks assemble_system(const LayerStack& stack,
                             const std::vector<Discretization>& interfaces,
                             const UnitCellParams& params) {
  stack.validate();
  SystemBlocks sys;
  sys.stack = stack;
  sys.interfaces = interfaces;
  sys.params = params;
  sys.cell = build_unit_cell(stack, params);

  const auto& w = stack.wavenumbers;
  const int I = static_cast<int>(interfaces.size());

  // bind the entry oracles to the stored copies, not the argument
  for (int i = 0; i < I; ++i) {
    sys.A_self.emplace_back(sys.interfaces[i], w[i], w[i + 1], 0);
    sys.A_plus.emplace_back(sys.interfaces[i], w[i], w[i + 1], +1);
    sys.A_minus.emplace_back(sys.interfaces[i], w[i], w[i + 1], -1);
  }

  sys.B_own.resize(I);
  sys.B_next.resize(I);
  for (int i = 0; i < I; ++i) build_B(sys, i);

  sys.C_R_low.resize(I);
  sys.C_L_low.resize(I);
  sys.C_R_up.resize(I);
  sys.C_L_up.resize(I);
  sys.Q_R.resize(I + 1);
  sys.Q_L.resize(I + 1);
  for (int l = 0; l <= I; ++l) build_CQ(sys, l, true, true, true);

  build_top(sys);
  build_bottom(sys);
  return sys;
}

void reassemble_interface(SystemBlocks& sys, int i) {
  const int I = sys.num_interfaces();
  const UnitCellLayout old = sys.cell;
  sys.cell = build_unit_cell(sys.stack, sys.params);
  const bool moved_top = std::abs(sys.cell.yU - old.yU) > 0;
  const bool moved_bot = std::abs(sys.cell.yD - old.yD) > 0;

  build_A(sys, i);
  for (int j = std::max(0, i - 1); j <= std::min(I - 1, i + 1); ++j)
    build_B(sys, j);
  // walls and proxies of the two bounded layers may have moved
  for (int l = i; l <= i + 1; ++l) build_CQ(sys, l, true, true, true);
  if (i == 0 || moved_top) build_top(sys);
  if (i == I - 1 || moved_bot) build_bottom(sys);
}

void reassemble_wavenumber(SystemBlocks& sys, int l) {
  const int I = sys.num_interfaces();
  if (l >= 1) build_A(sys, l - 1);
  if (l <= I - 1) build_A(sys, l);
  if (l <= I - 1) build_B(sys, l);    // B_own[l] carries omega_l
  if (l >= 1) build_B(sys, l - 1);    // B_next[l-1] carries omega_l
  build_CQ(sys, l, true, true, true);
  if (l == 0) build_top(sys);
  if (l == I) build_bottom(sys);
}

UnknownLayout make_layout(const SystemBlocks& sys, int extra_orders) {
  UnknownLayout lay;
  lay.sigma_offset.resize(sys.num_interfaces());
  int off = 0;
  for (int i = 0; i < sys.num_interfaces(); ++i) {
    lay.sigma_offset[i] = off;
    off += 2 * sys.interfaces[i].size();
  }
  lay.n_sigma = off;
  lay.P = sys.params.P;
  lay.n_c = lay.P * sys.num_layers();
  lay.modes = 2 * sys.params.K + 1 + extra_orders;
  lay.n_a = 2 * lay.modes;
  return lay;
}

double rb_kappa(double theta, double omega1, double d, int n) {
  return omega1 * std::cos(theta) + 2.0 * M_PI * n / d;
}

Complex rb_k(double omega, double kappa) {
  const double t = omega * omega - kappa * kappa;
  return t >= 0.0 ? Complex(std::sqrt(t), 0.0)
                  : Complex(0.0, std::sqrt(-t));
}

Mat assemble_W(double theta, double omega1, double omegaI1, double d, int K,
               int extra_orders, const UnitCellLayout& cell) {
  const int modes = 2 * K + 1 + extra_orders;
  const int M = static_cast<int>(cell.top_nodes.size());
  Mat W = Mat::Zero(4 * M, 2 * modes);
  for (int n = -K; n <= K + extra_orders; ++n) {
    const int col = n + K;
    const double kappa = rb_kappa(theta, omega1, d, n);
    const Complex kU = rb_k(omega1, kappa);
    const Complex kD = rb_k(omegaI1, kappa);
    for (int m = 0; m < M; ++m) {
      const Complex eU = std::exp(kImag * (kappa * cell.top_nodes[m].x));
      W(2 * m, col) = -eU;
      W(2 * m + 1, col) = -kImag * kU * eU;
      const Complex eD = std::exp(kImag * (kappa * cell.bottom_nodes[m].x));
      W(2 * M + 2 * m, modes + col) = -eD;
      W(2 * M + 2 * m + 1, modes + col) = kImag * kD * eD;
    }
  }
  return W;
}

Vec assemble_rhs(const SystemBlocks& sys, const IncidentWave& inc) {
  UnknownLayout lay = make_layout(sys);
  Vec f = Vec::Zero(lay.n_sigma);
  const auto& g = sys.interfaces[0];
  for (int m = 0; m < g.size(); ++m) {
    const double sw = std::sqrt(g.weights(m));
    f(2 * m) = -sw * inc.value(g.nodes[m]);
    f(2 * m + 1) = -sw * inc.normal_derivative(g.nodes[m], g.normals[m]);
  }
  return f;
}

Mat cross_block(const SystemBlocks& sys, int i, int j, Complex alpha) {
  const double sign = j == i + 1 ? -1.0 : 1.0;
  const double omega = sys.stack.wavenumbers[std::max(i, j)];
  const auto& tgt = sys.interfaces[i];
  const auto& src = sys.interfaces[j];
  Mat B = pattern_block(omega, tgt.nodes, tgt.normals, src, 0, sign) +
          alpha * pattern_block(omega, tgt.nodes, tgt.normals, src, 1, sign) +
          pattern_block(omega, tgt.nodes, tgt.normals, src, -1, sign) / alpha;
  return sqrtw_rows(std::move(B), tgt);
}

Mat materialize_A(const SystemBlocks& sys, Complex alpha) {
  const UnknownLayout lay = make_layout(sys);
  Mat A = Mat::Zero(lay.n_sigma, lay.n_sigma);
  for (int i = 0; i < sys.num_interfaces(); ++i) {
    const int o = lay.sigma_offset[i];
    const int n = sys.A_self[i].dim();
    A.block(o, o, n, n) = sys.A_self[i].dense() +
                          alpha * sys.A_plus[i].dense() +
                          sys.A_minus[i].dense() / alpha;
    for (int j : {i - 1, i + 1}) {
      if (j < 0 || j >= sys.num_interfaces()) continue;
      A.block(o, lay.sigma_offset[j], n, 2 * sys.interfaces[j].size()) =
          cross_block(sys, i, j, alpha);
    }
  }
  return A;
}

Mat materialize_B(const SystemBlocks& sys) {
  const UnknownLayout lay = make_layout(sys);
  Mat B = Mat::Zero(lay.n_sigma, lay.n_c);
  for (int i = 0; i < sys.num_interfaces(); ++i) {
    const int o = lay.sigma_offset[i];
    B.block(o, i * lay.P, sys.B_own[i].rows(), lay.P) = sys.B_own[i];
    B.block(o, (i + 1) * lay.P, sys.B_next[i].rows(), lay.P) = sys.B_next[i];
  }
  return B;
}

Mat materialize_C(const SystemBlocks& sys, Complex alpha) {
  const UnknownLayout lay = make_layout(sys);
  const int mw = 2 * sys.params.M_w;
  const Complex am2 = 1.0 / (alpha * alpha);
  Mat C = Mat::Zero(mw * sys.num_layers(), lay.n_sigma);
  for (int l = 0; l < sys.num_layers(); ++l) {
    if (l < sys.num_interfaces())
      C.block(l * mw, lay.sigma_offset[l], mw, sys.C_R_low[l].cols()) =
          am2 * sys.C_R_low[l] - alpha * sys.C_L_low[l];
    if (l >= 1)
      C.block(l * mw, lay.sigma_offset[l - 1], mw, sys.C_R_up[l - 1].cols()) =
          am2 * sys.C_R_up[l - 1] - alpha * sys.C_L_up[l - 1];
  }
  return C;
}

Mat materialize_Q(const SystemBlocks& sys, Complex alpha) {
  const UnknownLayout lay = make_layout(sys);
  const int mw = 2 * sys.params.M_w;
  Mat Q = Mat::Zero(mw * sys.num_layers(), lay.n_c);
  for (int l = 0; l < sys.num_layers(); ++l)
    Q.block(l * mw, l * lay.P, mw, lay.P) =
        sys.Q_R[l] / alpha - sys.Q_L[l];
  return Q;
}

Mat materialize_Z(const SystemBlocks& sys, Complex alpha) {
  const UnknownLayout lay = make_layout(sys);
  const int m2 = static_cast<int>(sys.Z_U0.rows());
  Mat Z = Mat::Zero(2 * m2, lay.n_sigma);
  Z.block(0, lay.sigma_offset[0], m2, sys.Z_U0.cols()) =
      sys.Z_U0 + alpha * sys.Z_Up + sys.Z_Um / alpha;
  Z.block(m2, lay.sigma_offset[sys.num_interfaces() - 1], m2,
          sys.Z_D0.cols()) = sys.Z_D0 + alpha * sys.Z_Dp + sys.Z_Dm / alpha;
  return Z;
}

Mat materialize_V(const SystemBlocks& sys) {
  const UnknownLayout lay = make_layout(sys);
  const int m2 = static_cast<int>(sys.V_U.rows());
  Mat V = Mat::Zero(2 * m2, lay.n_c);
  V.block(0, 0, m2, lay.P) = sys.V_U;
  V.block(m2, sys.num_interfaces() * lay.P, m2, lay.P) = sys.V_D;
  return V;
}

Mat materialize_full(const SystemBlocks& sys, const Mat& W, Complex alpha) {
  const UnknownLayout lay = make_layout(sys);
  const Mat C = materialize_C(sys, alpha);
  const Mat Z = materialize_Z(sys, alpha);
  const int r1 = lay.n_sigma;
  const int r2 = static_cast<int>(C.rows());
  const int r3 = static_cast<int>(Z.rows());
  const int ncols = lay.n_sigma + lay.n_c + static_cast<int>(W.cols());
  Mat F = Mat::Zero(r1 + r2 + r3, ncols);
  F.block(0, 0, r1, lay.n_sigma) = materialize_A(sys, alpha);
  F.block(0, lay.n_sigma, r1, lay.n_c) = materialize_B(sys);
  F.block(r1, 0, r2, lay.n_sigma) = C;
  F.block(r1, lay.n_sigma, r2, lay.n_c) = materialize_Q(sys, alpha);
  F.block(r1 + r2, 0, r3, lay.n_sigma) = Z;
  F.block(r1 + r2, lay.n_sigma, r3, lay.n_c) = materialize_V(sys);
  F.block(r1 + r2, lay.n_sigma + lay.n_c, r3, W.cols()) = W;
  return F;
}

}  // namespace qps
