#include "qps/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace qps {

SkeletonFactor interpolatory_decomposition(const Mat& M, double tol) {
  const int n = static_cast<int>(M.rows());
  const int c = static_cast<int>(M.cols());
  SkeletonFactor f;
  f.tol_used = tol;
  if (n == 0 || c == 0 || M.norm() == 0.0) {
    f.P = Mat::Zero(n, 0);
    f.J = IdxVec();
    f.k = 0;
    return f;
  }

  Eigen::ColPivHouseholderQR<Mat> qr(M.transpose());
  const Mat& QR = qr.matrixQR();
  const auto& piv = qr.colsPermutation().indices();

  const int kmax = std::min(c, n);
  const double r0 = std::abs(QR(0, 0));
  int k = 0;
  while (k < kmax && std::abs(QR(k, k)) > tol * r0) ++k;
  if (k == 0) k = 1;  // nonzero matrix keeps at least one row

  f.k = k;
  f.J = IdxVec(k);
  for (int i = 0; i < k; ++i) f.J(i) = piv(i);

  f.P = Mat::Zero(n, k);
  for (int i = 0; i < k; ++i) f.P(piv(i), i) = 1.0;
  if (k < n) {
    Mat T = QR.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(
        Mat(QR.block(0, k, k, n - k)));
    for (int j = 0; j < n - k; ++j) f.P.row(piv(k + j)) = T.col(j).transpose();
  }
  return f;
}

std::vector<std::pair<int, int>> dyadic_segments(int n, Side side, int n_max) {
  std::vector<std::pair<int, int>> segs;
  if (n <= 0) return segs;
  int lo = 0, hi = n;
  while (hi - lo >= n_max && hi - lo >= 2) {
    const int near_len = (hi - lo) / 2;
    if (side == Side::plus) {
      segs.emplace_back(lo, hi - near_len);  // far half, away from the copy
      lo = hi - near_len;
    } else {
      segs.emplace_back(lo + near_len, hi);
      hi = lo + near_len;
    }
  }
  segs.emplace_back(lo, hi);  // touching segment, listed last
  return segs;
}

namespace {

struct Targets {
  std::vector<Point2> x, nu;
  std::vector<double> sw;  // sqrt(weight) row scaling
};

Targets segment_targets(const Discretization& g, int b, int e) {
  Targets t;
  t.x.reserve(e - b);
  for (int m = b; m < e; ++m) {
    t.x.push_back(g.nodes[m]);
    t.nu.push_back(g.normals[m]);
    t.sw.push_back(std::sqrt(g.weights(m)));
  }
  return t;
}

// Value/flux traces of monopole + dipole fields from each source, one
// column pair per source per wavenumber; rows interleaved and
// sqrt(w)-scaled like the system blocks.
Mat trace_matrix(const Targets& t, const std::vector<Point2>& sx,
                 const std::vector<Point2>& sn,
                 const std::vector<double>& omegas) {
  const int m = static_cast<int>(t.x.size());
  const int p = static_cast<int>(sx.size());
  const int no = static_cast<int>(omegas.size());
  Mat M(2 * m, 2 * p * no);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    for (int o = 0; o < no; ++o) {
      for (int q = 0; q < p; ++q) {
        const KernelValues4 k =
            kernel_values_all(omegas[o], t.x[i], sx[q], t.nu[i], sn[q]);
        const int col = 2 * (o * p + q);
        M(2 * i, col) = t.sw[i] * k.s;
        M(2 * i, col + 1) = t.sw[i] * k.d;
        M(2 * i + 1, col) = t.sw[i] * k.dstar;
        M(2 * i + 1, col + 1) = t.sw[i] * k.t;
      }
    }
  }
  return M;
}

void circle_sources(Point2 center, double radius, int p,
                    std::vector<Point2>& pts, std::vector<Point2>& nrm) {
  pts.resize(p);
  nrm.resize(p);
  for (int q = 0; q < p; ++q) {
    const double th = 2.0 * M_PI * q / p;
    nrm[q] = {std::cos(th), std::sin(th)};
    pts[q] = center + radius * nrm[q];
  }
}

// Rows `rows` (interleaved indices) of sign * sqrt(w_i) pattern(omega,
// shift) sqrt(w_j), computed entry-wise.
Mat scaled_pattern_rows(const std::vector<int>& rows,
                        const Discretization& tgt, const Discretization& src,
                        double omega, int shift, double sign) {
  const int ns = src.size();
  const double dx = shift * src.period;
  Mat out(static_cast<int>(rows.size()), 2 * ns);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    const int node = rows[r] / 2;
    const bool flux = rows[r] & 1;
    const double swi = std::sqrt(tgt.weights(node));
    for (int j = 0; j < ns; ++j) {
      const Point2 y{src.nodes[j].x + dx, src.nodes[j].y};
      const KernelValues4 k = kernel_values_all(omega, tgt.nodes[node], y,
                                                tgt.normals[node],
                                                src.normals[j]);
      const double s = sign * swi * std::sqrt(src.weights(j));
      out(r, 2 * j) = s * (flux ? k.t : k.d);
      out(r, 2 * j + 1) = s * (flux ? k.dstar : k.s);
    }
  }
  return out;
}

std::vector<int> iota_rows(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

NeighborFactor compress_neighbor(const Discretization& src, double omega_top,
                                 double omega_bot, Side side,
                                 const CompressionParams& prm) {
  const int n = src.size();
  const int n2 = 2 * n;
  const int shift = side == Side::plus ? +1 : -1;
  const DifferenceBlock block(src, omega_top, omega_bot, shift);

  NeighborFactor f;
  f.shift = shift;
  f.segments = dyadic_segments(n, side, prm.n_max);

  // Per-segment skeletons against proxy circles (plus explicit near-copy
  // columns for the touching segment).
  const SkeletonFactor id0 =
      compress_block_rows(block, src, 0, n, 0, n, side, prm);
  f.P0 = id0.P;
  f.J0 = id0.J;
  Mat Pg = id0.P;

  // Regroup the concatenated skeleton by owning segment for the merge.
  std::vector<std::vector<int>> segSkel(f.segments.size());
  for (int i = 0; i < id0.k; ++i) {
    const int node = id0.J(i) / 2;
    for (std::size_t si = 0; si < f.segments.size(); ++si)
      if (node >= f.segments[si].first && node < f.segments[si].second) {
        segSkel[si].push_back(id0.J(i));
        break;
      }
  }

  // Recompression: merge segment skeletons `recompress_lump` at a time
  // against the true block rows until one group remains.
  const std::vector<int> allcols = iota_rows(n2);
  std::vector<std::vector<int>> groups = segSkel;
  while (groups.size() > 1) {
    std::vector<Mat> nextP;
    std::vector<std::vector<int>> nextG;
    int c = 0;
    for (std::size_t g = 0; g < groups.size();
         g += static_cast<std::size_t>(prm.recompress_lump)) {
      const std::size_t gend =
          std::min(g + prm.recompress_lump, groups.size());
      std::vector<int> rows;
      int kc = 0;
      for (std::size_t h = g; h < gend; ++h) {
        rows.insert(rows.end(), groups[h].begin(), groups[h].end());
        kc += static_cast<int>(groups[h].size());
      }
      if (gend == g + 1) {
        nextP.push_back(Pg.middleCols(c, kc));
        nextG.push_back(rows);
      } else {
        const Mat M = block.submatrix(rows, allcols);
        const SkeletonFactor id = interpolatory_decomposition(M, prm.tol);
        nextP.push_back(Pg.middleCols(c, kc) * id.P);
        std::vector<int> sk(id.k);
        for (int i = 0; i < id.k; ++i) sk[i] = rows[id.J(i)];
        nextG.push_back(std::move(sk));
      }
      c += kc;
    }
    int knew = 0;
    for (const Mat& P : nextP) knew += static_cast<int>(P.cols());
    Pg.resize(n2, knew);
    c = 0;
    for (const Mat& P : nextP) {
      Pg.middleCols(c, P.cols()) = P;
      c += static_cast<int>(P.cols());
    }
    groups = std::move(nextG);
  }

  const std::vector<int>& skel = groups.front();
  f.L = Pg;
  f.J = IdxVec(static_cast<int>(skel.size()));
  for (int i = 0; i < f.J.size(); ++i) f.J(i) = skel[i];
  f.R = block.submatrix(skel, allcols);
  return f;
}

SkeletonFactor compress_block_rows(const DifferenceBlock& block,
                                   const Discretization& g, int tb, int te,
                                   int sb, int se, Side side,
                                   const CompressionParams& prm) {
  const double wt = block.omega_top(), wb = block.omega_bot();
  const double dx = block.shift() * g.period;

  std::vector<Point2> srcx(se - sb);
  for (int j = sb; j < se; ++j)
    srcx[j - sb] = {g.nodes[j].x + dx, g.nodes[j].y};

  auto segs = dyadic_segments(te - tb, side, prm.n_max);
  std::vector<Mat> segP;
  std::vector<std::vector<int>> segSkel;
  for (std::size_t si = 0; si < segs.size(); ++si) {
    const int b = tb + segs[si].first, e = tb + segs[si].second;
    const Targets t = segment_targets(g, b, e);

    Point2 lo = t.x[0], hi = t.x[0];
    for (const Point2& p : t.x) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    const Point2 center = 0.5 * (lo + hi);
    double circ = 0.0;
    for (const Point2& p : t.x) circ = std::max(circ, norm(p - center));

    std::vector<int> rows;
    for (int m = b; m < e; ++m) {
      rows.push_back(2 * m);
      rows.push_back(2 * m + 1);
    }

    std::vector<Point2> px, pn;
    Mat T;
    if (si + 1 == segs.size()) {
      const double rad = prm.near_radius_factor * circ;
      std::vector<int> nearcols;
      for (int j = 0; j < se - sb; ++j)
        if (norm(srcx[j] - center) <= rad) {
          nearcols.push_back(2 * (sb + j));
          nearcols.push_back(2 * (sb + j) + 1);
        }
      circle_sources(center, rad, prm.n_proxy, px, pn);
      const Mat Tp = trace_matrix(t, px, pn, {wt, wb});
      if (nearcols.empty()) {
        T = Tp;
      } else {
        const Mat Tn = block.submatrix(rows, nearcols);
        T.resize(Tn.rows(), Tn.cols() + Tp.cols());
        T << Tn, Tp;
      }
    } else {
      double dist = norm(srcx[0] - center);
      for (const Point2& p : srcx) dist = std::min(dist, norm(p - center));
      circle_sources(center, std::max(0.95 * dist, 1.02 * circ), prm.n_proxy,
                     px, pn);
      T = trace_matrix(t, px, pn, {wt, wb});
    }

    const SkeletonFactor id = interpolatory_decomposition(T, prm.tol);
    segP.push_back(id.P);
    std::vector<int> sk(id.k);
    for (int i = 0; i < id.k; ++i) sk[i] = rows[id.J(i)];
    segSkel.push_back(std::move(sk));
  }

  SkeletonFactor out;
  out.tol_used = prm.tol;
  int k0 = 0;
  for (const Mat& P : segP) k0 += static_cast<int>(P.cols());
  out.k = k0;
  out.P = Mat::Zero(2 * (te - tb), k0);
  out.J = IdxVec(k0);
  int c = 0;
  for (std::size_t si = 0; si < segP.size(); ++si) {
    out.P.block(2 * segs[si].first, c, 2 * (segs[si].second - segs[si].first),
                segP[si].cols()) = segP[si];
    for (int i = 0; i < static_cast<int>(segSkel[si].size()); ++i)
      out.J(c + i) = segSkel[si][i];
    c += static_cast<int>(segP[si].cols());
  }
  return out;
}

VerticalFactor compress_vertical(const Discretization& tgt,
                                 const Discretization& src, double omega,
                                 double sign, const CompressionParams& prm) {
  const int nt = tgt.size();
  const int n2 = 2 * nt;
  const double d = tgt.period;
  VerticalFactor f;

  double ty0 = tgt.nodes[0].y, ty1 = ty0;
  for (const Point2& p : tgt.nodes) {
    ty0 = std::min(ty0, p.y);
    ty1 = std::max(ty1, p.y);
  }
  double sy0 = src.nodes[0].y, sy1 = sy0;
  for (const Point2& p : src.nodes) {
    sy0 = std::min(sy0, p.y);
    sy1 = std::max(sy1, p.y);
  }
  const bool src_below = 0.5 * (sy0 + sy1) < 0.5 * (ty0 + ty1);
  const double gap = src_below ? ty0 - sy1 : sy0 - ty1;

  const Point2 center{0.0, 0.5 * (ty0 + ty1)};
  const double ax = 0.75 * d;
  const double ay = 0.5 * (ty1 - ty0) + 0.5 * gap;
  auto level = [&](Point2 p) {
    const double u = (p.x - center.x) / ax;
    const double v = (p.y - center.y) / ay;
    return u * u + v * v;
  };

  bool shields = gap > 0.0;
  if (shields)
    for (const Point2& p : tgt.nodes) shields = shields && level(p) < 0.99;
  if (shields)
    for (int s = -1; s <= 1; ++s)
      for (const Point2& p : src.nodes)
        shields = shields && level({p.x + s * d, p.y}) > 1.01;

  if (!shields) {
    std::fprintf(stderr,
                 "qps: vertical compression ellipse cannot shield the "
                 "interfaces; keeping the block dense\n");
    f.dense_fallback = true;
    f.L = Mat::Identity(n2, n2);
    f.J = IdxVec::LinSpaced(n2, 0, n2 - 1);
    const std::vector<int> rows = iota_rows(n2);
    f.R0 = scaled_pattern_rows(rows, tgt, src, omega, 0, sign);
    f.Rp = scaled_pattern_rows(rows, tgt, src, omega, +1, sign);
    f.Rm = scaled_pattern_rows(rows, tgt, src, omega, -1, sign);
    return f;
  }

  std::vector<Point2> px(prm.n_proxy), pn(prm.n_proxy);
  for (int q = 0; q < prm.n_proxy; ++q) {
    const double th = 2.0 * M_PI * q / prm.n_proxy;
    px[q] = {center.x + ax * std::cos(th), center.y + ay * std::sin(th)};
    const Point2 g{std::cos(th) / ax, std::sin(th) / ay};
    pn[q] = (1.0 / norm(g)) * g;
  }
  const Targets t = segment_targets(tgt, 0, nt);
  const SkeletonFactor id1 =
      interpolatory_decomposition(trace_matrix(t, px, pn, {omega}), prm.tol);

  std::vector<int> rows1(id1.k);
  for (int i = 0; i < id1.k; ++i) rows1[i] = id1.J(i);
  const Mat R0h = scaled_pattern_rows(rows1, tgt, src, omega, 0, sign);
  const Mat Rph = scaled_pattern_rows(rows1, tgt, src, omega, +1, sign);
  const Mat Rmh = scaled_pattern_rows(rows1, tgt, src, omega, -1, sign);

  Mat M2(id1.k, R0h.cols() * 3);
  M2 << R0h, Rph, Rmh;
  const SkeletonFactor id2 = interpolatory_decomposition(M2, prm.tol);

  f.L = id1.P * id2.P;
  f.J = IdxVec(id2.k);
  f.R0 = Mat(id2.k, R0h.cols());
  f.Rp = Mat(id2.k, R0h.cols());
  f.Rm = Mat(id2.k, R0h.cols());
  for (int i = 0; i < id2.k; ++i) {
    f.J(i) = id1.J(id2.J(i));
    f.R0.row(i) = R0h.row(id2.J(i));
    f.Rp.row(i) = Rph.row(id2.J(i));
    f.Rm.row(i) = Rmh.row(id2.J(i));
  }
  return f;
}

LowRankFactors build_lowrank_factors(
    const std::vector<Discretization>& interfaces,
    const std::vector<double>& wavenumbers, const CompressionParams& prm) {
  const int I = static_cast<int>(interfaces.size());
  LowRankFactors f;
  f.block_rows.resize(I);
  for (int i = 0; i < I; ++i) f.block_rows[i] = 2 * interfaces[i].size();
  f.nb_plus.reserve(I);
  f.nb_minus.reserve(I);
  for (int i = 0; i < I; ++i) {
    f.nb_plus.push_back(compress_neighbor(interfaces[i], wavenumbers[i],
                                          wavenumbers[i + 1], Side::plus,
                                          prm));
    f.nb_minus.push_back(compress_neighbor(interfaces[i], wavenumbers[i],
                                           wavenumbers[i + 1], Side::minus,
                                           prm));
  }
  for (int i = 0; i + 1 < I; ++i)
    f.vert_lower.push_back(compress_vertical(
        interfaces[i], interfaces[i + 1], wavenumbers[i + 1], -1.0, prm));
  for (int i = 1; i < I; ++i)
    f.vert_upper.push_back(compress_vertical(
        interfaces[i], interfaces[i - 1], wavenumbers[i], +1.0, prm));
  return f;
}

namespace {

// Shared column walk of the global factors; order per interface i is
// [vert (i,i-1) | nb plus | nb minus | vert (i,i+1)].
template <typename F>
void walk_blocks(const LowRankFactors& f, F&& visit) {
  const int I = static_cast<int>(f.block_rows.size());
  std::vector<int> off(I + 1, 0);
  for (int i = 0; i < I; ++i) off[i + 1] = off[i] + f.block_rows[i];
  int c = 0;
  for (int i = 0; i < I; ++i) {
    if (i > 0) {
      const VerticalFactor& v = f.vert_upper[i - 1];
      visit(off[i], off[i - 1], c, &v, nullptr, 0);
      c += static_cast<int>(v.J.size());
    }
    visit(off[i], off[i], c, nullptr, &f.nb_plus[i], +1);
    c += static_cast<int>(f.nb_plus[i].J.size());
    visit(off[i], off[i], c, nullptr, &f.nb_minus[i], -1);
    c += static_cast<int>(f.nb_minus[i].J.size());
    if (i + 1 < I) {
      const VerticalFactor& v = f.vert_lower[i];
      visit(off[i], off[i + 1], c, &v, nullptr, 0);
      c += static_cast<int>(v.J.size());
    }
  }
}

int total_rank(const LowRankFactors& f) {
  int k = 0;
  walk_blocks(f, [&](int, int, int c, const VerticalFactor* v,
                     const NeighborFactor* nb, int) {
    k = c + static_cast<int>((v ? v->J : nb->J).size());
  });
  return k;
}

}  // namespace

Mat global_L(const LowRankFactors& f) {
  const int n = std::accumulate(f.block_rows.begin(), f.block_rows.end(), 0);
  Mat L = Mat::Zero(n, total_rank(f));
  walk_blocks(f, [&](int r, int, int c, const VerticalFactor* v,
                     const NeighborFactor* nb, int) {
    const Mat& B = v ? v->L : nb->L;
    L.block(r, c, B.rows(), B.cols()) = B;
  });
  return L;
}

Mat global_R(const LowRankFactors& f, Complex alpha) {
  const int n = std::accumulate(f.block_rows.begin(), f.block_rows.end(), 0);
  Mat R = Mat::Zero(total_rank(f), n);
  walk_blocks(f, [&](int, int cc, int c, const VerticalFactor* v,
                     const NeighborFactor* nb, int side) {
    if (v) {
      const Mat B = v->R_at(alpha);
      R.block(c, cc, B.rows(), B.cols()) = B;
    } else {
      R.block(c, cc, nb->R.rows(), nb->R.cols()) =
          (side > 0 ? alpha : 1.0 / alpha) * nb->R;
    }
  });
  return R;
}

}  // namespace qps
