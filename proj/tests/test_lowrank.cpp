#include "qps/lowrank.hpp"

#include <random>

#include "doctest.h"
#include "qps/stats.hpp"

using namespace qps;

namespace {

std::mt19937 rng(0x10c4a7u);

Mat gaussian(int r, int c) {
  std::normal_distribution<double> N(0.0, 1.0);
  Mat M(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) M(i, j) = Complex(N(rng), N(rng));
  return M;
}

Discretization disc_of(const InterfaceGeometry& g, int panels) {
  UnitCellParams prm;
  return build_discretization(g, panels, prm);
}

// Dense cross block sign * sqrt(w_i) pattern(omega, shift) sqrt(w_j).
Mat dense_vertical(const Discretization& tgt, const Discretization& src,
                   double omega, int shift, double sign) {
  Mat B = pattern_block(omega, tgt.nodes, tgt.normals, src, shift, sign);
  for (int m = 0; m < tgt.size(); ++m) {
    const double sw = std::sqrt(tgt.weights(m));
    B.row(2 * m) *= sw;
    B.row(2 * m + 1) *= sw;
  }
  return B;
}

}  // namespace

TEST_CASE("interpolatory decomposition basics") {
  Mat M(2, 2);
  M << 1.0, 2.0, 2.0, 4.0;
  auto f = interpolatory_decomposition(M, 1e-12);
  CHECK(f.k == 1);
  CHECK((M - f.P * M(f.J, Eigen::all)).norm() <= 1e-14 * M.norm());
  CHECK(f.P(f.J(0), 0) == Complex(1.0, 0.0));

  auto id5 = interpolatory_decomposition(Mat::Identity(5, 5), 1e-12);
  CHECK(id5.k == 5);
  CHECK((id5.P * id5.P.adjoint() - Mat::Identity(5, 5)).norm() == 0.0);

  auto z = interpolatory_decomposition(Mat::Zero(4, 3), 1e-12);
  CHECK(z.k == 0);
  CHECK(z.P.cols() == 0);
}

TEST_CASE("interpolatory decomposition recovers constructed rank") {
  const Mat M = gaussian(200, 7) * gaussian(7, 50);
  auto f = interpolatory_decomposition(M, 1e-10);
  CHECK(f.k == 7);
  CHECK((M - f.P * M(f.J, Eigen::all)).norm() <= 1e-9 * M.norm());
  // identity rows are exact, not approximate
  for (int i = 0; i < f.k; ++i)
    for (int j = 0; j < f.k; ++j)
      CHECK(f.P(f.J(i), j) == Complex(i == j ? 1.0 : 0.0, 0.0));
}

TEST_CASE("dyadic segment partition") {
  auto segs = dyadic_segments(1024, Side::plus, 45);
  REQUIRE(segs.size() == 6);  // 5 halvings
  CHECK(segs[0] == std::pair(0, 512));
  CHECK(segs[1] == std::pair(512, 768));
  CHECK(segs[4] == std::pair(960, 992));
  CHECK(segs[5] == std::pair(992, 1024));  // touching, < n_max nodes
  CHECK(segs[5].second - segs[5].first < 45);

  auto m = dyadic_segments(1024, Side::minus, 45);
  REQUIRE(m.size() == 6);
  CHECK(m[0] == std::pair(512, 1024));
  CHECK(m[5] == std::pair(0, 32));

  CHECK(dyadic_segments(30, Side::plus, 45).size() == 1);
}

TEST_CASE("neighbor copy compression reconstructs the block") {
  const auto geom = InterfaceGeometry::fourier({0.3, 0.1}, true, 0.3, 1.0);
  const auto disc = disc_of(geom, 28);  // 448 nodes
  const double wt = 2.0, wb = 5.0;
  CompressionParams prm;

  for (Side side : {Side::plus, Side::minus}) {
    const int shift = side == Side::plus ? +1 : -1;
    const auto f = compress_neighbor(disc, wt, wb, side, prm);
    CHECK(f.segments.size() >= 4);

    // interpolation rows are exact unit rows
    for (int i = 0; i < f.J.size(); ++i)
      CHECK(f.L(f.J(i), i) == Complex(1.0, 0.0));

    const Mat A = neighbor_difference_block(disc, wt, wb, shift);
    const double err = (A - f.L * f.R).norm() / A.norm();
    CHECK(err <= 10 * prm.tol);
    CHECK(f.J.size() <= 140);  // far from full rank 896
  }
}

TEST_CASE("segment skeletons shield arbitrary exterior sources") {
  const auto geom = InterfaceGeometry::fourier({0.2}, false, 0.4, 1.0);
  const auto disc = disc_of(geom, 24);
  CompressionParams prm;
  const auto f = compress_neighbor(disc, 3.0, 1.5, Side::plus, prm);

  std::uniform_real_distribution<double> U(-0.5, 0.5);
  for (int trial = 0; trial < 5; ++trial) {
    const Point2 s{U(rng), 3.0 + U(rng)};  // well outside every proxy circle
    const Point2 sn{0.0, 1.0};
    Vec v(2 * disc.size());
    for (int m = 0; m < disc.size(); ++m) {
      const auto k = kernel_values_all(3.0, disc.nodes[m], s,
                                       disc.normals[m], sn);
      const double sw = std::sqrt(disc.weights(m));
      v(2 * m) = sw * k.s;
      v(2 * m + 1) = sw * k.dstar;
    }
    const Vec r = v - f.P0 * v(f.J0);
    CHECK(r.norm() <= 10 * prm.tol * v.norm());
  }
}

TEST_CASE("vertical compression with shielding ellipse") {
  const double d = 1.0;
  const auto top = InterfaceGeometry::fourier({0.1}, true, 0.5, d, 0.0);
  const auto bot = InterfaceGeometry::fourier({0.08}, false, 0.5, d, -1.0);
  const auto tdisc = disc_of(top, 20);
  const auto bdisc = disc_of(bot, 20);
  const double omega = 2.5;
  CompressionParams prm;

  const auto f = compress_vertical(tdisc, bdisc, omega, -1.0, prm);
  REQUIRE_FALSE(f.dense_fallback);
  CHECK(f.J.size() <= 60);

  const Mat B0 = dense_vertical(tdisc, bdisc, omega, 0, -1.0);
  const Mat Bp = dense_vertical(tdisc, bdisc, omega, +1, -1.0);
  const Mat Bm = dense_vertical(tdisc, bdisc, omega, -1, -1.0);

  std::uniform_real_distribution<double> U(0.0, 2.0 * M_PI);
  for (int trial = 0; trial < 3; ++trial) {
    const Complex alpha = std::exp(Complex(0.0, U(rng)));
    const Mat B = B0 + alpha * Bp + Bm / alpha;
    CHECK((B - f.L * f.R_at(alpha)).norm() <= 10 * prm.tol * B.norm());
  }
}

TEST_CASE("vertical compression falls back to dense when too close") {
  const double d = 1.0;
  const auto top = InterfaceGeometry::fourier({0.3}, true, 1.0, d, 0.0);
  const auto bot = InterfaceGeometry::fourier({0.3}, true, 1.0, d, -0.4);
  const auto tdisc = disc_of(top, 10);
  const auto bdisc = disc_of(bot, 10);
  CompressionParams prm;

  const auto f = compress_vertical(tdisc, bdisc, 2.0, -1.0, prm);
  REQUIRE(f.dense_fallback);
  const Mat B0 = dense_vertical(tdisc, bdisc, 2.0, 0, -1.0);
  CHECK((f.L * f.R0 - B0).norm() <= 1e-14 * B0.norm());
  CHECK((f.R_at(1.0) - (f.R0 + f.Rp + f.Rm)).norm() == 0.0);
}

TEST_CASE("global factors realize A-hat for a two-interface stack") {
  const double d = 1.0;
  std::vector<Discretization> discs{
      disc_of(InterfaceGeometry::fourier({0.1}, true, 0.4, d, 0.0), 14),
      disc_of(InterfaceGeometry::fourier({0.1}, false, 0.4, d, -1.2), 14)};
  const std::vector<double> omegas{1.5, 3.0, 2.2};
  CompressionParams prm;

  const auto f = build_lowrank_factors(discs, omegas, prm);
  REQUIRE(f.nb_plus.size() == 2);
  REQUIRE(f.vert_lower.size() == 1);
  REQUIRE(f.vert_upper.size() == 1);

  const Mat L = global_L(f);
  std::uniform_real_distribution<double> U(0.0, 2.0 * M_PI);
  const int n0 = 2 * discs[0].size(), n1 = 2 * discs[1].size();
  for (int trial = 0; trial < 2; ++trial) {
    const Complex alpha = std::exp(Complex(0.0, U(rng)));
    Mat Ahat = Mat::Zero(n0 + n1, n0 + n1);
    for (int i = 0; i < 2; ++i) {
      const auto& dc = discs[i];
      const int off = i == 0 ? 0 : n0;
      const int n = 2 * dc.size();
      Ahat.block(off, off, n, n) =
          alpha * neighbor_difference_block(dc, omegas[i], omegas[i + 1], 1) +
          neighbor_difference_block(dc, omegas[i], omegas[i + 1], -1) / alpha;
    }
    for (int s = -1; s <= 1; ++s) {
      const Complex ph = s == 0 ? 1.0 : (s > 0 ? alpha : 1.0 / alpha);
      Ahat.block(0, n0, n0, n1) +=
          ph * dense_vertical(discs[0], discs[1], omegas[1], s, -1.0);
      Ahat.block(n0, 0, n1, n0) +=
          ph * dense_vertical(discs[1], discs[0], omegas[1], s, +1.0);
    }
    const Mat R = global_R(f, alpha);
    CHECK((Ahat - L * R).norm() <= 10 * prm.tol * Ahat.norm());
  }

  // a new Bloch phase touches no kernel evaluations
  stats::reset_kernel_evals();
  const Mat R2 = global_R(f, std::exp(Complex(0.0, 0.7)));
  CHECK(stats::kernel_eval_count() == 0);
  CHECK(R2.rows() == L.cols());
}
