#include "qps/solver.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

#include "qps/postproc.hpp"
#include "qps/stats.hpp"

namespace qps {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::vector<FactorRef> make_refs(const LowRankFactors& lr) {
  const int I = static_cast<int>(lr.block_rows.size());
  std::vector<FactorRef> fs;
  int col = 0;
  auto push = [&](int row, int src, int kind, int k) {
    fs.push_back({row, src, kind, k, col});
    col += k;
  };
  for (int i = 0; i < I; ++i) {
    if (i > 0) push(i, i - 1, 0, static_cast<int>(lr.vert_upper[i - 1].R0.rows()));
    push(i, i, 1, static_cast<int>(lr.nb_plus[i].R.rows()));
    push(i, i, 2, static_cast<int>(lr.nb_minus[i].R.rows()));
    if (i < I - 1) push(i, i + 1, 3, static_cast<int>(lr.vert_lower[i].R0.rows()));
  }
  return fs;
}

const Mat& factor_L(const LowRankFactors& lr, const FactorRef& f) {
  switch (f.kind) {
    case 0: return lr.vert_upper[f.row - 1].L;
    case 1: return lr.nb_plus[f.row].L;
    case 2: return lr.nb_minus[f.row].L;
    default: return lr.vert_lower[f.row].L;
  }
}

// R(alpha) pieces of a factor as (R0, Rp, Rm); unused slots are null.
struct Pieces {
  const Mat* R0 = nullptr;
  const Mat* Rp = nullptr;
  const Mat* Rm = nullptr;
};

Pieces factor_R(const LowRankFactors& lr, const FactorRef& f) {
  Pieces p;
  switch (f.kind) {
    case 0: {
      const auto& v = lr.vert_upper[f.row - 1];
      p = {&v.R0, &v.Rp, &v.Rm};
      break;
    }
    case 1: p.Rp = &lr.nb_plus[f.row].R; break;
    case 2: p.Rm = &lr.nb_minus[f.row].R; break;
    default: {
      const auto& v = lr.vert_lower[f.row];
      p = {&v.R0, &v.Rp, &v.Rm};
      break;
    }
  }
  return p;
}

std::vector<int> row_offsets(const LowRankFactors& lr) {
  std::vector<int> off(lr.block_rows.size() + 1, 0);
  for (std::size_t i = 0; i < lr.block_rows.size(); ++i)
    off[i + 1] = off[i] + lr.block_rows[i];
  return off;
}

Mat combine(const Mat& T0, const Mat& Tp, const Mat& Tm, int rows, int cols,
            Complex alpha) {
  Mat out = Mat::Zero(rows, cols);
  if (T0.size()) out += T0;
  if (Tp.size()) out += alpha * Tp;
  if (Tm.size()) out += Tm / alpha;
  return out;
}

// Q(alpha), C(alpha) x, Z(alpha) x without materializing the big blocks.
Mat apply_C(const SystemBlocks& sys, Complex alpha, const Mat& x,
            const std::vector<int>& off) {
  const int mw = 2 * sys.params.M_w;
  const int I = sys.num_interfaces();
  const Complex am2 = 1.0 / (alpha * alpha);
  Mat g = Mat::Zero(mw * (I + 1), x.cols());
  for (int l = 0; l <= I; ++l) {
    if (l < I)
      g.middleRows(l * mw, mw) +=
          am2 * (sys.C_R_low[l] * x.middleRows(off[l], off[l + 1] - off[l])) -
          alpha * (sys.C_L_low[l] * x.middleRows(off[l], off[l + 1] - off[l]));
    if (l >= 1)
      g.middleRows(l * mw, mw) +=
          am2 * (sys.C_R_up[l - 1] *
                 x.middleRows(off[l - 1], off[l] - off[l - 1])) -
          alpha * (sys.C_L_up[l - 1] *
                   x.middleRows(off[l - 1], off[l] - off[l - 1]));
  }
  return g;
}

Mat apply_Z(const SystemBlocks& sys, Complex alpha, const Mat& x,
            const std::vector<int>& off) {
  const int I = sys.num_interfaces();
  const int m2 = static_cast<int>(sys.Z_U0.rows());
  Mat g(2 * m2, x.cols());
  const Mat xu = x.middleRows(off[0], off[1] - off[0]);
  const Mat xd = x.middleRows(off[I - 1], off[I] - off[I - 1]);
  g.topRows(m2) = sys.Z_U0 * xu + alpha * (sys.Z_Up * xu) + (sys.Z_Um * xu) / alpha;
  g.bottomRows(m2) =
      sys.Z_D0 * xd + alpha * (sys.Z_Dp * xd) + (sys.Z_Dm * xd) / alpha;
  return g;
}

}  // namespace

PrecompI precompute_I(const SystemBlocks& sys, const SolverOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto e0 = stats::kernel_eval_count();
  PrecompI p;
  p.lr = build_lowrank_factors(sys.interfaces, sys.stack.wavenumbers,
                               opt.compression);
  for (int i = 0; i < sys.num_interfaces(); ++i)
    p.Ainv.push_back(build_block_inverse(sys.A_self[i], opt.inverse,
                                         opt.compression.tol, opt.leaf_size));
  p.factors = make_refs(p.lr);
  p.k_tot = 0;
  for (const auto& f : p.factors) p.k_tot += f.k;
  p.seconds = seconds_since(t0);
  p.kernel_evals = stats::kernel_eval_count() - e0;
  return p;
}

PrecompII precompute_II(const SystemBlocks& sys, const PrecompI& pI) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto e0 = stats::kernel_eval_count();
  const UnknownLayout lay = make_layout(sys);
  const auto& fs = pI.factors;
  const int nf = static_cast<int>(fs.size());
  const int I = sys.num_interfaces();
  PrecompII p;

  p.E.resize(nf);
  for (int fi = 0; fi < nf; ++fi)
    p.E[fi] = pI.Ainv[fs[fi].row].apply(factor_L(pI.lr, fs[fi]));

  p.T.resize(nf);
  for (int fi = 0; fi < nf; ++fi) {
    const Pieces rp = factor_R(pI.lr, fs[fi]);
    for (int gi = 0; gi < nf; ++gi) {
      if (fs[gi].row != fs[fi].src) continue;
      PrecompII::S2Prod pr;
      pr.g = gi;
      if (rp.R0) pr.T0 = *rp.R0 * p.E[gi];
      if (rp.Rp) pr.Tp = *rp.Rp * p.E[gi];
      if (rp.Rm) pr.Tm = *rp.Rm * p.E[gi];
      p.T[fi].push_back(std::move(pr));
    }
  }

  const Mat B = materialize_B(sys);
  p.F_B.resize(lay.n_sigma, lay.n_c);
  for (int i = 0; i < I; ++i) {
    const int o = lay.sigma_offset[i];
    const int n = 2 * sys.interfaces[i].size();
    p.F_B.middleRows(o, n) = pI.Ainv[i].apply(Mat(B.middleRows(o, n)));
  }

  p.U0.resize(nf);
  p.Up.resize(nf);
  p.Um.resize(nf);
  for (int fi = 0; fi < nf; ++fi) {
    const Pieces rp = factor_R(pI.lr, fs[fi]);
    const int o = lay.sigma_offset[fs[fi].src];
    const int n = 2 * sys.interfaces[fs[fi].src].size();
    const Mat Fs = p.F_B.middleRows(o, n);
    if (rp.R0) p.U0[fi] = *rp.R0 * Fs;
    if (rp.Rp) p.Up[fi] = *rp.Rp * Fs;
    if (rp.Rm) p.Um[fi] = *rp.Rm * Fs;
  }

  const int mw = 2 * sys.params.M_w;
  const int nq = mw * (I + 1);
  p.CR_FB = Mat::Zero(nq, lay.n_c);
  p.CL_FB = Mat::Zero(nq, lay.n_c);
  for (int l = 0; l <= I; ++l) {
    if (l < I) {
      const Mat Fl = p.F_B.middleRows(lay.sigma_offset[l],
                                      2 * sys.interfaces[l].size());
      p.CR_FB.middleRows(l * mw, mw) += sys.C_R_low[l] * Fl;
      p.CL_FB.middleRows(l * mw, mw) += sys.C_L_low[l] * Fl;
    }
    if (l >= 1) {
      const Mat Fl = p.F_B.middleRows(lay.sigma_offset[l - 1],
                                      2 * sys.interfaces[l - 1].size());
      p.CR_FB.middleRows(l * mw, mw) += sys.C_R_up[l - 1] * Fl;
      p.CL_FB.middleRows(l * mw, mw) += sys.C_L_up[l - 1] * Fl;
    }
  }

  p.CR_E = Mat::Zero(nq, pI.k_tot);
  p.CL_E = Mat::Zero(nq, pI.k_tot);
  for (int fi = 0; fi < nf; ++fi) {
    const int i = fs[fi].row;
    p.CR_E.block(i * mw, fs[fi].col, mw, fs[fi].k) = sys.C_R_low[i] * p.E[fi];
    p.CL_E.block(i * mw, fs[fi].col, mw, fs[fi].k) = sys.C_L_low[i] * p.E[fi];
    p.CR_E.block((i + 1) * mw, fs[fi].col, mw, fs[fi].k) =
        sys.C_R_up[i] * p.E[fi];
    p.CL_E.block((i + 1) * mw, fs[fi].col, mw, fs[fi].k) =
        sys.C_L_up[i] * p.E[fi];
  }

  const int m2 = static_cast<int>(sys.Z_U0.rows());
  const Mat Fu =
      p.F_B.middleRows(lay.sigma_offset[0], 2 * sys.interfaces[0].size());
  const Mat Fd = p.F_B.middleRows(lay.sigma_offset[I - 1],
                                  2 * sys.interfaces[I - 1].size());
  auto stack_z = [&](const Mat& ZU, const Mat& ZD) {
    Mat out(2 * m2, lay.n_c);
    out.topRows(m2) = ZU * Fu;
    out.bottomRows(m2) = ZD * Fd;
    return out;
  };
  p.Z0_FB = stack_z(sys.Z_U0, sys.Z_D0);
  p.Zp_FB = stack_z(sys.Z_Up, sys.Z_Dp);
  p.Zm_FB = stack_z(sys.Z_Um, sys.Z_Dm);

  p.Z0_E = Mat::Zero(2 * m2, pI.k_tot);
  p.Zp_E = Mat::Zero(2 * m2, pI.k_tot);
  p.Zm_E = Mat::Zero(2 * m2, pI.k_tot);
  for (int fi = 0; fi < nf; ++fi) {
    if (fs[fi].row == 0) {
      p.Z0_E.block(0, fs[fi].col, m2, fs[fi].k) = sys.Z_U0 * p.E[fi];
      p.Zp_E.block(0, fs[fi].col, m2, fs[fi].k) = sys.Z_Up * p.E[fi];
      p.Zm_E.block(0, fs[fi].col, m2, fs[fi].k) = sys.Z_Um * p.E[fi];
    }
    if (fs[fi].row == I - 1) {
      p.Z0_E.block(m2, fs[fi].col, m2, fs[fi].k) = sys.Z_D0 * p.E[fi];
      p.Zp_E.block(m2, fs[fi].col, m2, fs[fi].k) = sys.Z_Dp * p.E[fi];
      p.Zm_E.block(m2, fs[fi].col, m2, fs[fi].k) = sys.Z_Dm * p.E[fi];
    }
  }

  p.seconds = seconds_since(t0);
  p.kernel_evals = stats::kernel_eval_count() - e0;
  return p;
}

BlockThomas::BlockThomas(const std::vector<Mat>& X, const std::vector<Mat>& Y,
                         const std::vector<Mat>& Z) {
  n_ = static_cast<int>(X.size());
  off_.assign(n_ + 1, 0);
  for (int i = 0; i < n_; ++i)
    off_[i + 1] = off_[i] + static_cast<int>(X[i].rows());
  Y_ = Y;
  Z_ = Z;
  lu_.reserve(n_);
  Mat D = X[0];
  lu_.emplace_back(D);
  for (int i = 1; i < n_; ++i) {
    D = X[i] - Y_[i] * lu_[i - 1].solve(Z_[i - 1]);
    lu_.emplace_back(D);
  }
}

Mat BlockThomas::solve(const Mat& rhs) const {
  std::vector<Mat> u(n_);
  u[0] = rhs.middleRows(off_[0], off_[1] - off_[0]);
  for (int i = 1; i < n_; ++i)
    u[i] = rhs.middleRows(off_[i], off_[i + 1] - off_[i]) -
           Y_[i] * lu_[i - 1].solve(u[i - 1]);
  Mat x(rhs.rows(), rhs.cols());
  Mat xi = lu_[n_ - 1].solve(u[n_ - 1]);
  x.middleRows(off_[n_ - 1], off_[n_] - off_[n_ - 1]) = xi;
  for (int i = n_ - 2; i >= 0; --i) {
    const Mat t = u[i] - Z_[i] * xi;  // xi is resized by the assignment
    xi = lu_[i].solve(t);
    x.middleRows(off_[i], off_[i + 1] - off_[i]) = xi;
  }
  return x;
}

Mat block_thomas(const std::vector<Mat>& X, const std::vector<Mat>& Y,
                 const std::vector<Mat>& Z, const Mat& rhs) {
  return BlockThomas(X, Y, Z).solve(rhs);
}

void assemble_S2(const PrecompI& pI, const PrecompII& pII, Complex alpha,
                 std::vector<Mat>& X, std::vector<Mat>& Y,
                 std::vector<Mat>& Z) {
  const auto& fs = pI.factors;
  const int I = static_cast<int>(pI.lr.block_rows.size());
  // per-interface factor-group sizes and start columns
  std::vector<int> gsize(I, 0), gstart(I, 0);
  for (const auto& f : fs) gsize[f.row] += f.k;
  for (int i = 1; i < I; ++i) gstart[i] = gstart[i - 1] + gsize[i - 1];

  X.assign(I, Mat());
  Y.assign(I, Mat());
  Z.assign(I, Mat());
  for (int i = 0; i < I; ++i) {
    X[i] = Mat::Identity(gsize[i], gsize[i]);
    if (i >= 1) Y[i] = Mat::Zero(gsize[i], gsize[i - 1]);
    if (i <= I - 2) Z[i] = Mat::Zero(gsize[i], gsize[i + 1]);
  }
  for (std::size_t fi = 0; fi < fs.size(); ++fi) {
    const auto& f = fs[fi];
    const int lr_row = f.col - gstart[f.row];
    for (const auto& pr : pII.T[fi]) {
      const auto& g = fs[pr.g];
      const Mat M = combine(pr.T0, pr.Tp, pr.Tm, f.k, g.k, alpha);
      const int lc = g.col - gstart[g.row];
      if (g.row == f.row)
        X[f.row].block(lr_row, lc, f.k, g.k) += M;
      else if (g.row == f.row - 1)
        Y[f.row].block(lr_row, lc, f.k, g.k) += M;
      else
        Z[f.row].block(lr_row, lc, f.k, g.k) += M;
    }
  }
}

PhaseSolver precompute_III(const SystemBlocks& sys, const PrecompI& pI,
                           const PrecompII& pII, Complex alpha,
                           double rep_theta, int extra_orders,
                           const SolverOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const UnknownLayout lay = make_layout(sys, extra_orders);
  PhaseSolver ps;
  ps.alpha = alpha;
  ps.rep_theta = rep_theta;
  ps.extra_orders = extra_orders;

  std::vector<Mat> X, Y, Z;
  assemble_S2(pI, pII, alpha, X, Y, Z);
  ps.s2 = BlockThomas(X, Y, Z);

  Mat RFB(pI.k_tot, lay.n_c);
  for (std::size_t fi = 0; fi < pI.factors.size(); ++fi) {
    const auto& f = pI.factors[fi];
    RFB.middleRows(f.col, f.k) =
        combine(pII.U0[fi], pII.Up[fi], pII.Um[fi], f.k, lay.n_c, alpha);
  }
  ps.VB = ps.s2.solve(RFB);

  const auto& w = sys.stack.wavenumbers;
  ps.W = assemble_W(rep_theta, w.front(), w.back(), sys.stack.period,
                    sys.params.K, extra_orders, sys.cell);

  const Complex am2 = 1.0 / (alpha * alpha);
  const Mat CAinvB = am2 * (pII.CR_FB - pII.CR_E * ps.VB) -
                     alpha * (pII.CL_FB - pII.CL_E * ps.VB);
  const Mat ZAinvB = (pII.Z0_FB - pII.Z0_E * ps.VB) +
                     alpha * (pII.Zp_FB - pII.Zp_E * ps.VB) +
                     (pII.Zm_FB - pII.Zm_E * ps.VB) / alpha;

  const int nq = static_cast<int>(CAinvB.rows());
  const int nz = static_cast<int>(ZAinvB.rows());
  Mat S = Mat::Zero(nq + nz, lay.n_c + lay.n_a);
  S.block(0, 0, nq, lay.n_c) = materialize_Q(sys, alpha) - CAinvB;
  S.block(nq, 0, nz, lay.n_c) = materialize_V(sys) - ZAinvB;
  S.block(nq, lay.n_c, nz, lay.n_a) = ps.W;

  Eigen::BDCSVD<Mat> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVec& sv = svd.singularValues();
  int r = 0;
  while (r < sv.size() && sv(r) > opt.schur_eps * sv(0)) ++r;
  ps.svd_rank = r;
  ps.Ut = svd.matrixU().leftCols(r);
  ps.Vt = svd.matrixV().leftCols(r);
  ps.sv = sv.head(r);

  ps.seconds = seconds_since(t0);
  return ps;
}

Mat apply_A_inverse(const PrecompI& pI, const PrecompII& pII,
                    const PhaseSolver& ps, const Mat& f) {
  const auto off = row_offsets(pI.lr);
  const Complex alpha = ps.alpha;

  Mat t(f.rows(), f.cols());
  for (std::size_t i = 0; i < pI.lr.block_rows.size(); ++i)
    t.middleRows(off[i], pI.lr.block_rows[i]) =
        pI.Ainv[i].apply(Mat(f.middleRows(off[i], pI.lr.block_rows[i])));

  Mat u(pI.k_tot, f.cols());
  for (std::size_t fi = 0; fi < pI.factors.size(); ++fi) {
    const auto& fr = pI.factors[fi];
    const Pieces rp = factor_R(pI.lr, fr);
    const Mat ts = t.middleRows(off[fr.src], pI.lr.block_rows[fr.src]);
    Mat seg = Mat::Zero(fr.k, f.cols());
    if (rp.R0) seg += *rp.R0 * ts;
    if (rp.Rp) seg += alpha * (*rp.Rp * ts);
    if (rp.Rm) seg += (*rp.Rm * ts) / alpha;
    u.middleRows(fr.col, fr.k) = seg;
  }

  const Mat v = ps.s2.solve(u);
  for (std::size_t fi = 0; fi < pI.factors.size(); ++fi) {
    const auto& fr = pI.factors[fi];
    t.middleRows(off[fr.row], pI.lr.block_rows[fr.row]) -=
        pII.E[fi] * v.middleRows(fr.col, fr.k);
  }
  return t;
}

SolveResult solve(const SystemBlocks& sys, const PrecompI& pI,
                  const PrecompII& pII, const PhaseSolver& ps, double theta) {
  const IncidentWave inc(sys.stack, theta);
  if (std::abs(inc.bloch_alpha() - ps.alpha) > 1e-8)
    throw std::invalid_argument("solve: theta does not match the Bloch phase");

  const UnknownLayout lay = make_layout(sys, ps.extra_orders);
  const auto off = row_offsets(pI.lr);
  const Complex alpha = ps.alpha;
  const int I = sys.num_interfaces();
  const int K = sys.params.K;

  const Vec f = assemble_rhs(sys, inc);
  const Mat x = apply_A_inverse(pI, pII, ps, f);

  Vec g(ps.Ut.rows());
  g << apply_C(sys, alpha, x, off), apply_Z(sys, alpha, x, off);
  Vec y = ps.Ut.adjoint() * g;
  y.array() /= ps.sv.array();
  const Vec ca = -(ps.Vt * y);

  SolveResult res;
  res.theta = theta;
  res.alpha = alpha;
  res.c = ca.head(lay.n_c);

  // sigma-hat = A^{-1}(f - B c) reusing the cached A^{-1}B action
  Vec s = pII.F_B * res.c;
  const Vec vb = ps.VB * res.c;
  for (std::size_t fi = 0; fi < pI.factors.size(); ++fi) {
    const auto& fr = pI.factors[fi];
    s.segment(off[fr.row], pI.lr.block_rows[fr.row]) -=
        pII.E[fi] * vb.segment(fr.col, fr.k);
  }
  res.sigma_hat = x.col(0) - s;

  res.sigma.resize(I);
  res.tau.resize(I);
  for (int i = 0; i < I; ++i) {
    const auto& gi = sys.interfaces[i];
    res.sigma[i].resize(gi.size());
    res.tau[i].resize(gi.size());
    for (int m = 0; m < gi.size(); ++m) {
      const double sw = std::sqrt(gi.weights(m));
      res.tau[i](m) = res.sigma_hat(off[i] + 2 * m) / sw;
      res.sigma[i](m) = res.sigma_hat(off[i] + 2 * m + 1) / sw;
    }
  }

  // slice the extended coefficient vector back to this angle's orders
  const double d = sys.stack.period;
  const double crep = inc.omega1 * std::cos(ps.rep_theta);
  const double cth = inc.omega1 * std::cos(theta);
  const int shift = static_cast<int>(std::lround((cth - crep) * d / (2 * M_PI)));
  const Vec a = ca.tail(lay.n_a);
  res.aU.resize(2 * K + 1);
  res.aD.resize(2 * K + 1);
  for (int n = -K; n <= K; ++n) {
    res.aU(n + K) = a(n + shift + K);
    res.aD(n + K) = a(lay.modes + n + shift + K);
  }

  res.flux_error = flux_error(res.aU, res.aD, K, theta,
                              sys.stack.wavenumbers.front(),
                              sys.stack.wavenumbers.back(), d);
  return res;
}

std::vector<AngleGroup> group_angles(const std::vector<double>& angles,
                                     double omega1, double d) {
  const double per = 2.0 * M_PI / d;
  std::map<long long, AngleGroup> groups;
  for (double th : angles) {
    const double c = omega1 * std::cos(th);
    const double r = c - per * std::floor(c / per);
    long long key = std::llround(r / per * 1e12) % 1000000000000LL;
    auto& g = groups[key];
    g.angles.push_back(th);
  }
  std::vector<AngleGroup> out;
  for (auto& [key, g] : groups) {
    double cmin = omega1 * std::cos(g.angles[0]);
    double rep = g.angles[0];
    for (double th : g.angles) {
      const double c = omega1 * std::cos(th);
      if (c < cmin) {
        cmin = c;
        rep = th;
      }
    }
    g.rep_theta = rep;
    g.alpha = std::exp(kImag * (cmin * d));
    g.shifts.resize(g.angles.size());
    for (std::size_t j = 0; j < g.angles.size(); ++j)
      g.shifts[j] = static_cast<int>(std::lround(
          (omega1 * std::cos(g.angles[j]) - cmin) * d / (2.0 * M_PI)));
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<SolveResult> sweep(const SystemBlocks& sys, const PrecompI& pI,
                               const PrecompII& pII,
                               const std::vector<double>& angles,
                               const SolverOptions& opt, SweepTiming* timing) {
  const auto groups =
      group_angles(angles, sys.stack.wavenumbers.front(), sys.stack.period);

  // map each angle value back to its position(s) in the input
  std::multimap<double, std::size_t> where;
  for (std::size_t j = 0; j < angles.size(); ++j)
    where.insert({angles[j], j});

  std::vector<SolveResult> results(angles.size());
  if (timing) {
    timing->precomp1_s = pI.seconds;
    timing->precomp2_s = pII.seconds;
    timing->n_groups = static_cast<int>(groups.size());
    timing->solve_s.assign(angles.size(), 0.0);
  }
  for (const auto& g : groups) {
    int extra = 0;
    for (int s : g.shifts) extra = std::max(extra, s);
    const PhaseSolver ps =
        precompute_III(sys, pI, pII, g.alpha, g.rep_theta, extra, opt);
    if (timing) {
      timing->precomp3_s.push_back(ps.seconds);
      ++timing->n_phase_builds;
    }
    for (double th : g.angles) {
      const auto t0 = std::chrono::steady_clock::now();
      SolveResult r = solve(sys, pI, pII, ps, th);
      const auto it = where.find(th);
      const std::size_t idx = it->second;
      where.erase(it);
      if (timing) timing->solve_s[idx] = seconds_since(t0);
      results[idx] = std::move(r);
    }
  }
  return results;
}

SolverState make_state(const LayerStack& stack, const std::vector<int>& panels,
                       const UnitCellParams& params,
                       const SolverOptions& opt) {
  SolverState st;
  st.stack = stack;
  st.panels = panels;
  st.params = params;
  st.opt = opt;
  std::vector<Discretization> discs;
  for (int i = 0; i < stack.num_interfaces(); ++i)
    discs.push_back(build_discretization(stack.interfaces[i], panels[i], params));
  st.sys = assemble_system(stack, discs, params);
  st.pI = precompute_I(st.sys, opt);
  st.pII = precompute_II(st.sys, st.pI);
  return st;
}

namespace {

// rebuild the phase-free factors and inverse of one interface in place
void rebuild_interface_factors(SolverState& st, int i) {
  auto& sys = st.sys;
  auto& lr = st.pI.lr;
  const auto& w = sys.stack.wavenumbers;
  const int I = sys.num_interfaces();
  const auto& prm = st.opt.compression;

  st.pI.Ainv[i] = build_block_inverse(sys.A_self[i], st.opt.inverse, prm.tol,
                                      st.opt.leaf_size);
  lr.nb_plus[i] =
      compress_neighbor(sys.interfaces[i], w[i], w[i + 1], Side::plus, prm);
  lr.nb_minus[i] =
      compress_neighbor(sys.interfaces[i], w[i], w[i + 1], Side::minus, prm);
  // vertical blocks with rows or columns on interface i
  if (i >= 1) {
    lr.vert_lower[i - 1] = compress_vertical(sys.interfaces[i - 1],
                                             sys.interfaces[i], w[i], -1.0, prm);
    lr.vert_upper[i - 1] = compress_vertical(sys.interfaces[i],
                                             sys.interfaces[i - 1], w[i], 1.0, prm);
  }
  if (i <= I - 2) {
    lr.vert_lower[i] = compress_vertical(sys.interfaces[i],
                                         sys.interfaces[i + 1], w[i + 1], -1.0, prm);
    lr.vert_upper[i] = compress_vertical(sys.interfaces[i + 1],
                                         sys.interfaces[i], w[i + 1], 1.0, prm);
  }
  lr.block_rows[i] = 2 * sys.interfaces[i].size();
}

void refresh_refs(SolverState& st) {
  st.pI.factors = make_refs(st.pI.lr);
  st.pI.k_tot = 0;
  for (const auto& f : st.pI.factors) st.pI.k_tot += f.k;
  st.pII = precompute_II(st.sys, st.pI);
}

}  // namespace

void update_interface(SolverState& st, int i, const InterfaceGeometry& geom,
                      int n_panels) {
  st.stack.interfaces[i] = geom;
  st.panels[i] = n_panels;
  st.sys.stack = st.stack;
  st.sys.interfaces[i] = build_discretization(geom, n_panels, st.params);
  reassemble_interface(st.sys, i);
  rebuild_interface_factors(st, i);
  st.last_rebuilt = {i};
  refresh_refs(st);
}

void update_wavenumber(SolverState& st, int layer, double new_omega) {
  st.stack.wavenumbers[layer] = new_omega;
  st.sys.stack = st.stack;
  reassemble_wavenumber(st.sys, layer);

  const int I = st.sys.num_interfaces();
  auto& lr = st.pI.lr;
  const auto& w = st.sys.stack.wavenumbers;
  const auto& prm = st.opt.compression;
  st.last_rebuilt.clear();
  for (int i : {layer - 1, layer}) {
    if (i < 0 || i >= I) continue;
    st.last_rebuilt.push_back(i);
    st.pI.Ainv[i] = build_block_inverse(st.sys.A_self[i], st.opt.inverse,
                                        prm.tol, st.opt.leaf_size);
    lr.nb_plus[i] = compress_neighbor(st.sys.interfaces[i], w[i], w[i + 1],
                                      Side::plus, prm);
    lr.nb_minus[i] = compress_neighbor(st.sys.interfaces[i], w[i], w[i + 1],
                                       Side::minus, prm);
  }
  // vertical blocks evaluated at omega_layer couple interfaces
  // layer-1 and layer
  const int iu = layer - 1;
  if (iu >= 0 && iu + 1 <= I - 1) {
    lr.vert_lower[iu] = compress_vertical(st.sys.interfaces[iu],
                                          st.sys.interfaces[iu + 1],
                                          w[iu + 1], -1.0, prm);
    lr.vert_upper[iu] = compress_vertical(st.sys.interfaces[iu + 1],
                                          st.sys.interfaces[iu],
                                          w[iu + 1], 1.0, prm);
  }
  refresh_refs(st);
}

}  // namespace qps
