// End-to-end acceptance suite. Each case prints one PASS/FAIL line; run
// times range from seconds (oracle, unit checks) to minutes (scaling).
#include <chrono>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "qps/hinv.hpp"
#include "qps/postproc.hpp"
#include "qps/solver.hpp"
#include "qps/stats.hpp"

using namespace qps;

namespace {

std::mt19937 rng(0xACCE97);

Mat random_mat(int r, int c) {
  std::normal_distribution<double> N(0.0, 1.0);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = Complex(N(rng), N(rng));
  return m;
}

void report(int id, const char* label, bool ok) {
  std::printf("criterion %2d  %-58s %s\n", id, label, ok ? "PASS" : "FAIL");
  std::fflush(stdout);
  CHECK(ok);
}

LayerStack sine3(double omega1, double d = 1.0) {
  LayerStack stack;
  stack.period = d;
  stack.wavenumbers = {omega1, omega1 * std::sqrt(2.0), omega1};
  stack.interfaces = {InterfaceGeometry::fourier({1.0}, true, 0.1, d, 0.0),
                      InterfaceGeometry::fourier({1.0, 0.3}, false, 0.08, d,
                                                 -1.0)};
  return stack;
}

struct Pipeline {
  SystemBlocks sys;
  PrecompI pI;
  PrecompII pII;
  SolverOptions opt;
};

Pipeline build(const LayerStack& stack, const UnitCellParams& params,
               int panels, SolverOptions opt = {}) {
  std::vector<Discretization> discs;
  for (const auto& g : stack.interfaces)
    discs.push_back(build_discretization(g, panels, params));
  Pipeline p{assemble_system(stack, discs, params), {}, {}, opt};
  p.pI = precompute_I(p.sys, opt);
  p.pII = precompute_II(p.sys, p.pI);
  return p;
}

SolveResult run_solve(const Pipeline& p, double theta) {
  const IncidentWave inc(p.sys.stack, theta);
  const auto ps = precompute_III(p.sys, p.pI, p.pII, inc.bloch_alpha(), theta,
                                 0, p.opt);
  return solve(p.sys, p.pI, p.pII, ps, theta);
}

Vec pinv_solve(const Mat& A, const Vec& b, double eps) {
  Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVec& sv = svd.singularValues();
  int r = 0;
  while (r < sv.size() && sv(r) > eps * sv(0)) ++r;
  Vec y = svd.matrixU().leftCols(r).adjoint() * b;
  y.array() /= sv.head(r).array();
  return svd.matrixV().leftCols(r) * y;
}

// the small well-conditioned configuration shared by criteria 1, 4, 5:
// P = 14 keeps the periodization Schur complement full rank at omega = 5,
// so sigma-hat and c are determined well below the 1e-8 comparison level
Pipeline small_instance() {
  LayerStack stack;
  stack.period = 1.0;
  stack.wavenumbers = {5.0, 5.0 * std::sqrt(2.0), 5.0};
  stack.interfaces = {
      InterfaceGeometry::fourier({1.0}, true, 0.1, 1.0, 0.0),
      InterfaceGeometry::fourier({1.0}, false, 0.12, 1.0, -0.8)};
  UnitCellParams params;
  params.M_w = 40;
  params.M = 24;
  params.P = 14;
  params.K = 10;
  return build(stack, params, 10);
}

double seconds(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

double max_rank(const PrecompI& pI) {
  int r = 0;
  for (const auto& f : pI.lr.nb_plus) r = std::max<int>(r, f.L.cols());
  for (const auto& f : pI.lr.nb_minus) r = std::max<int>(r, f.L.cols());
  for (const auto& f : pI.lr.vert_lower) r = std::max<int>(r, f.L.cols());
  for (const auto& f : pI.lr.vert_upper) r = std::max<int>(r, f.L.cols());
  return r;
}

}  // namespace

TEST_CASE("criterion 1: dense-oracle equivalence") {
  const Pipeline p = small_instance();
  const auto& params = p.sys.params;
  const UnknownLayout lay = make_layout(p.sys);
  const double theta = -1.2;
  const SolveResult res = run_solve(p, theta);

  const IncidentWave inc(p.sys.stack, theta);
  const Complex alpha = inc.bloch_alpha();
  const Mat A = materialize_A(p.sys, alpha);
  const Mat B = materialize_B(p.sys);
  const Eigen::PartialPivLU<Mat> Alu(A);
  const Mat W =
      assemble_W(theta, p.sys.stack.wavenumbers.front(),
                 p.sys.stack.wavenumbers.back(), p.sys.stack.period, params.K,
                 0, p.sys.cell);
  Mat CZ(2 * params.M_w * 3 + 4 * params.M, lay.n_sigma);
  CZ << materialize_C(p.sys, alpha), materialize_Z(p.sys, alpha);
  Mat QV = Mat::Zero(CZ.rows(), lay.n_c);
  QV.topRows(2 * params.M_w * 3) = materialize_Q(p.sys, alpha);
  QV.bottomRows(4 * params.M) = materialize_V(p.sys);
  Mat S(CZ.rows(), lay.n_c + lay.n_a);
  S.leftCols(lay.n_c) = QV - CZ * Alu.solve(B);
  S.rightCols(lay.n_a).setZero();
  S.bottomRightCorner(4 * params.M, lay.n_a) = W;
  const Vec f = assemble_rhs(p.sys, inc);
  const Vec ca = -pinv_solve(S, CZ * Alu.solve(f), 1e-13);
  const Vec sig = Alu.solve(f - B * ca.head(lay.n_c));

  Vec a(lay.n_a);
  a << res.aU, res.aD;
  const double dsig = (res.sigma_hat - sig).norm() / sig.norm();
  const double dc =
      (res.c - ca.head(lay.n_c)).norm() / ca.head(lay.n_c).norm();
  const double da = (a - ca.tail(lay.n_a)).norm() / ca.tail(lay.n_a).norm();
  INFO("dsig ", dsig, " dc ", dc, " da ", da);
  report(1, "dense-oracle equivalence (sigma, c, a to 1e-8)",
         lay.total() <= 1500 && dsig < 1e-8 && dc < 1e-8 && da < 1e-8);
}

TEST_CASE("criterion 2: energy conservation at high resolution") {
  const LayerStack stack = sine3(10.0);
  const UnitCellParams params;
  const double f2560 = run_solve(build(stack, params, 160), -1.1).flux_error;
  const double f5120 = run_solve(build(stack, params, 320), -1.1).flux_error;
  INFO("flux at 2560: ", f2560, ", at 5120: ", f5120);
  report(2, "flux error 1e-5 at N_i=2560, 1e-6 at N_i=5120",
         f2560 <= 1e-5 && f5120 <= 1e-6);
}

TEST_CASE("criterion 3: uniform-medium null test") {
  LayerStack stack = sine3(3.1);
  stack.wavenumbers = {3.1, 3.1, 3.1};
  UnitCellParams params;
  params.M_w = 40;
  params.M = 24;
  params.P = 40;
  params.K = 8;
  const SolveResult res = run_solve(build(stack, params, 12), -0.9);
  const double spur = res.aU.cwiseAbs().maxCoeff();
  const double trans = std::abs(std::abs(res.aD(params.K)) - 1.0);
  INFO("max |aU| ", spur, ", |a0D|-1 ", trans, ", flux ", res.flux_error);
  report(3, "all orders null except unit zeroth transmission",
         spur <= 1e-8 && trans <= 1e-8 && res.flux_error <= 1e-8);
}

TEST_CASE("criterion 4: quasi-periodicity and wall matching") {
  // full reference cell parameters: the wall mismatch is limited by the
  // Rayleigh-Bloch truncation, so K = 20 is needed to reach 1e-6 max|u|
  LayerStack stack;
  stack.period = 1.0;
  stack.wavenumbers = {5.0, 5.0 * std::sqrt(2.0), 5.0};
  stack.interfaces = {
      InterfaceGeometry::fourier({1.0}, true, 0.1, 1.0, 0.0),
      InterfaceGeometry::fourier({1.0}, false, 0.12, 1.0, -0.8)};
  const Pipeline p = build(stack, UnitCellParams{}, 12);
  const double theta = -1.2;
  const SolveResult res = run_solve(p, theta);
  const double d = p.sys.stack.period;
  const double yU = p.sys.cell.yU, yD = p.sys.cell.yD;

  // 100 random points, rejecting the inaccurate near-interface strip
  std::uniform_real_distribution<double> ux(-d / 2, d / 2);
  std::uniform_real_distribution<double> uy(yD - 0.3, yU + 0.3);
  std::vector<Point2> pts;
  while (pts.size() < 100) {
    const Point2 q{ux(rng), uy(rng)};
    bool ok = true;
    for (const auto& g : p.sys.stack.interfaces)
      for (int j = 0; j <= 40; ++j) {
        const Point2 y = g.position(j / 40.0);
        if (std::hypot(q.x - y.x, q.y - y.y) < 0.05) ok = false;
      }
    if (ok) pts.push_back(q);
  }
  std::vector<Point2> shifted;
  for (const auto& q : pts) shifted.push_back({q.x + d, q.y});
  const auto base = evaluate_field(p.sys, res, pts, false);
  const auto moved = evaluate_field(p.sys, res, shifted, false);
  const double umax = base.values.cwiseAbs().maxCoeff();
  double qp = 0.0;
  for (int i = 0; i < base.values.size(); ++i)
    qp = std::max(qp, std::abs(moved.values(i) - res.alpha * base.values(i)));

  // interior representation vs Rayleigh-Bloch expansions on the walls
  const auto top = evaluate_field(p.sys, res, p.sys.cell.top_nodes, false);
  const auto bot = evaluate_field(p.sys, res, p.sys.cell.bottom_nodes, false);
  const int K = p.sys.params.K;
  double mismatch = 0.0;
  for (int t = 0; t < static_cast<int>(p.sys.cell.top_nodes.size()); ++t) {
    Complex up = 0.0, dn = 0.0;
    for (int n = -K; n <= K; ++n) {
      const double kap =
          rb_kappa(theta, p.sys.stack.wavenumbers.front(), d, n);
      up += res.aU(n + K) *
            std::exp(kImag * kap * p.sys.cell.top_nodes[t].x);
      dn += res.aD(n + K) *
            std::exp(kImag * kap * p.sys.cell.bottom_nodes[t].x);
    }
    mismatch = std::max(mismatch, std::abs(top.values(t) - up));
    mismatch = std::max(mismatch, std::abs(bot.values(t) - dn));
  }
  INFO("qp defect ", qp, ", wall mismatch ", mismatch, ", max|u| ", umax);
  report(4, "quasi-periodicity and Rayleigh-Bloch matching to 1e-6 max|u|",
         qp <= 1e-6 * umax && mismatch <= 1e-6 * umax);
}

TEST_CASE("criterion 5: Woodbury and compression correctness") {
  const Pipeline p = small_instance();
  const double tol = p.opt.compression.tol;

  bool apply_ok = true;
  for (double ang : {0.7, 1.9, -2.3}) {
    const Complex alpha = std::exp(Complex(0.0, ang));
    const auto ps =
        precompute_III(p.sys, p.pI, p.pII, alpha, -1.2, 0, p.opt);
    const Mat A = materialize_A(p.sys, alpha);
    const Vec f = random_mat(A.rows(), 1);
    const Vec x = apply_A_inverse(p.pI, p.pII, ps, f);
    apply_ok = apply_ok && (A * x - f).norm() / f.norm() <= 1e-8;
  }

  // dense A-hat(alpha) against the global low-rank factorization
  bool lr_ok = true;
  for (double ang : {0.4, -1.1}) {
    const Complex alpha = std::exp(Complex(0.0, ang));
    Mat Ahat = materialize_A(p.sys, alpha);
    int off = 0;
    for (int i = 0; i < p.sys.num_interfaces(); ++i) {
      const int n = p.sys.A_self[i].dim();
      Ahat.block(off, off, n, n) -= p.sys.A_self[i].dense();
      off += n;
    }
    const Mat LR = global_L(p.pI.lr) * global_R(p.pI.lr, alpha);
    lr_ok = lr_ok && (Ahat - LR).norm() <= 10.0 * tol * Ahat.norm();
  }
  report(5, "fast apply to 1e-8; A-hat factorization to 10*tol", // --
         apply_ok && lr_ok);
}

TEST_CASE("criterion 6: precomputation I scaling trend") {
  const LayerStack stack = sine3(10.0);
  const UnitCellParams params;
  std::vector<double> times;
  std::vector<double> ranks;
  for (int panels : {80, 80, 160, 320, 640}) {  // first run warms caches
    std::vector<Discretization> discs;
    for (const auto& g : stack.interfaces)
      discs.push_back(build_discretization(g, panels, params));
    const auto sys = assemble_system(stack, discs, params);
    const auto t0 = std::chrono::steady_clock::now();
    const auto pI = precompute_I(sys, SolverOptions{});
    times.push_back(seconds(t0));
    ranks.push_back(max_rank(pI));
  }
  times.erase(times.begin());  // drop the warm-up pass
  ranks.erase(ranks.begin());
  const double time_ratio = std::cbrt(times[3] / times[0]);
  const double rank_ratio = std::cbrt(ranks[3] / ranks[0]);
  INFO("times ", times[0], " ", times[1], " ", times[2], " ", times[3],
       "; per-doubling time ratio ", time_ratio, ", rank ratio ", rank_ratio);
  report(6, "precomp I time ratio <= 2.6 and rank growth <= 1.3 per doubling",
         time_ratio <= 2.6 && rank_ratio <= 1.3);
}

TEST_CASE("criterion 7: Bloch-phase reuse across a sweep") {
  // period 2 at omega1 = 10: kappa shifts of pi keep five angles per
  // group inside the propagating range
  const LayerStack stack = sine3(10.0, 2.0);
  const UnitCellParams params;
  const Pipeline p = build(stack, params, 80);

  std::vector<double> angles;
  for (int g = 0; g < 8; ++g)
    for (int m = 0; m < 5; ++m)
      angles.push_back(-std::acos((-9.7 + 0.22 * g + M_PI * m) / 10.0));

  SweepTiming timing;
  auto t0 = std::chrono::steady_clock::now();
  const auto results = sweep(p.sys, p.pI, p.pII, angles, p.opt, &timing);
  const double swept = seconds(t0);

  t0 = std::chrono::steady_clock::now();
  for (double th : angles) run_solve(p, th);
  const double independent = seconds(t0);

  double worst = 0.0;
  for (const auto& r : results) worst = std::max(worst, r.flux_error);
  INFO("groups ", timing.n_groups, ", builds ", timing.n_phase_builds,
       ", sweep ", swept, "s vs independent ", independent, "s, worst flux ",
       worst);
  report(7, "40 angles, <= 8 phase builds, sweep <= 0.5x independent",
         timing.n_groups <= 8 && timing.n_phase_builds == timing.n_groups &&
             swept <= 0.5 * independent && worst <= 1e-6);
}

TEST_CASE("criterion 8: local geometry and wavenumber updates") {
  LayerStack stack;
  stack.period = 1.0;
  stack.wavenumbers = {6.0, 8.0, 7.0, 9.0, 6.5};
  stack.interfaces = {
      InterfaceGeometry::fourier({1.0}, true, 0.08, 1.0, 0.0),
      InterfaceGeometry::fourier({1.0, 0.2}, false, 0.07, 1.0, -0.7),
      InterfaceGeometry::fourier({1.0}, true, 0.06, 1.0, -1.4),
      InterfaceGeometry::fourier({0.8, 0.1}, false, 0.07, 1.0, -2.1)};
  UnitCellParams params;
  params.M_w = 60;
  params.M = 30;
  params.P = 60;
  params.K = 12;
  const SolverOptions opt;
  const std::vector<int> panels(4, 20);

  stats::reset_kernel_evals();
  auto st = make_state(stack, panels, params, opt);
  const auto scratch_evals = stats::kernel_eval_count();

  const auto g2 = InterfaceGeometry::fourier({0.5, 0.3}, true, 0.09, 1.0,
                                             -1.4);
  stats::reset_kernel_evals();
  update_interface(st, 2, g2, 20);
  const auto update_evals = stats::kernel_eval_count();

  // from-scratch reference with the replaced interface
  LayerStack swapped = stack;
  swapped.interfaces[2] = g2;
  auto fresh = make_state(swapped, panels, params, opt);
  const double theta = -1.3;
  const auto upd = sweep(st.sys, st.pI, st.pII, {theta}, opt).front();
  const auto ref = sweep(fresh.sys, fresh.pI, fresh.pII, {theta}, opt)
                       .front();
  const double dsol = std::max(
      (upd.sigma_hat - ref.sigma_hat).norm() / ref.sigma_hat.norm(),
      std::max((upd.aU - ref.aU).norm() / ref.aU.norm(),
               (upd.aD - ref.aD).norm() / ref.aD.norm()));

  update_wavenumber(st, 2, 7.4);
  const bool wn_ok = st.last_rebuilt == std::vector<int>{1, 2};

  INFO("update evals ", update_evals, " of ", scratch_evals, " (",
       100.0 * update_evals / scratch_evals, "%), solution diff ", dsol);
  report(8, "update <= 50% kernel evals, matches scratch to 1e-9",
         2 * update_evals <= scratch_evals && dsol <= 1e-9 && wn_ok);
}

TEST_CASE("criterion 9: Wood's anomaly") {
  const LayerStack stack = sine3(10.0);
  const Pipeline p = build(stack, UnitCellParams{}, 40);
  // k_1 = 0 exactly: 10 cos(theta) + 2 pi = 10
  const double theta = -std::acos((10.0 - 2.0 * M_PI) / 10.0);
  const double k1 =
      std::abs(rb_k(10.0, rb_kappa(theta, 10.0, 1.0, 1)));
  const SolveResult res = run_solve(p, theta);
  INFO("|k_1| ", k1, ", flux ", res.flux_error);
  report(9, "solve completes at the anomaly with flux error <= 1e-5",
         k1 == 0.0 && std::isfinite(res.flux_error) &&
             res.flux_error <= 1e-5);
}

TEST_CASE("criterion 10: block Thomas and S2 structure") {
  // random well-conditioned block tridiagonal vs dense
  const std::vector<int> sizes = {9, 13, 7, 11};
  std::vector<Mat> X, Y(4), Z(4);
  int n = 0;
  for (int s : sizes) n += s;
  for (size_t i = 0; i < sizes.size(); ++i) {
    X.push_back(random_mat(sizes[i], sizes[i]) +
                5.0 * Mat::Identity(sizes[i], sizes[i]));
    if (i > 0) Y[i] = random_mat(sizes[i], sizes[i - 1]);
    if (i + 1 < sizes.size()) Z[i] = random_mat(sizes[i], sizes[i + 1]);
  }
  Mat D = Mat::Zero(n, n);
  for (size_t i = 0, r = 0; i < sizes.size(); r += sizes[i++]) {
    size_t c = 0;
    for (size_t j = 0; j < i; ++j) c += sizes[j];
    D.block(r, c, sizes[i], sizes[i]) = X[i];
    if (i > 0) D.block(r, c - sizes[i - 1], sizes[i], sizes[i - 1]) = Y[i];
    if (i + 1 < sizes.size())
      D.block(r, c + sizes[i], sizes[i], sizes[i + 1]) = Z[i];
  }
  const Vec rhs = random_mat(n, 1);
  const Vec x = block_thomas(X, Y, Z, rhs);
  const double dthomas =
      (x - Eigen::PartialPivLU<Mat>(D).solve(rhs)).norm() / rhs.norm();

  // appendix block structure on a real system
  const Pipeline p = small_instance();
  std::vector<Mat> SX, SY, SZ;
  assemble_S2(p.pI, p.pII, std::exp(Complex(0.0, 0.8)), SX, SY, SZ);
  bool structure = SY.size() == SX.size() && SZ.size() == SX.size();
  // the vertical-factor rows of X are identity rows; Y couples only
  // through the upper vertical block, Z only through the lower one
  std::vector<std::vector<const FactorRef*>> by_row(SX.size());
  for (const auto& f : p.pI.factors) by_row[f.row].push_back(&f);
  for (size_t i = 0; i < SX.size() && structure; ++i) {
    for (const auto* f : by_row[i]) {
      const int k = f->col - by_row[i].front()->col;
      if (f->kind == 0 || f->kind == 3) {
        const Mat rows = SX[i].middleRows(k, f->k);
        Mat ident = Mat::Zero(f->k, SX[i].cols());
        ident.middleCols(k, f->k).setIdentity();
        structure = structure && (rows - ident).norm() == 0.0;
        if (i > 0 && f->kind == 3)
          structure = structure && SY[i].middleRows(k, f->k).norm() == 0.0;
        if (i + 1 < SX.size() && f->kind == 0)
          structure = structure && SZ[i].middleRows(k, f->k).norm() == 0.0;
      }
    }
  }
  INFO("thomas vs dense ", dthomas);
  report(10, "block Thomas to 1e-11; capacitance block structure holds",
         dthomas <= 1e-11 && structure);
}
