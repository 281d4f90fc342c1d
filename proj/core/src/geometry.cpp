#include "qps/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qps/quadrature.hpp"

namespace qps {
namespace {

constexpr double kPi = 3.14159265358979323846264338;

double wrap01(double t) {
  t = t - std::floor(t);
  return t;
}

// Cyclic tridiagonal solve for periodic cubic spline second derivatives:
// sig[k-1] + 4 sig[k] + sig[k+1] = rhs[k] (indices mod n).
std::vector<double> periodic_spline_d2(const std::vector<double>& y,
                                       double h) {
  const int n = static_cast<int>(y.size());
  RealMat A = RealMat::Zero(n, n);
  RealVec b(n);
  for (int k = 0; k < n; ++k) {
    A(k, (k + n - 1) % n) += 1.0;
    A(k, k) += 4.0;
    A(k, (k + 1) % n) += 1.0;
    b[k] = 6.0 * (y[(k + n - 1) % n] - 2.0 * y[k] + y[(k + 1) % n]) / (h * h);
  }
  const RealVec s = A.partialPivLu().solve(b);
  return std::vector<double>(s.data(), s.data() + n);
}

// Segment intersection test used by the self-intersection guard.
bool segments_cross(Point2 a, Point2 b, Point2 c, Point2 d) {
  const auto orient = [](Point2 p, Point2 q, Point2 r) {
    return (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
  };
  const double o1 = orient(a, b, c), o2 = orient(a, b, d);
  const double o3 = orient(c, d, a), o4 = orient(c, d, b);
  return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0));
}

}  // namespace

InterfaceGeometry InterfaceGeometry::fourier(std::vector<double> coeffs,
                                             bool cosine, double scale,
                                             double period, double y0) {
  if (coeffs.empty())
    throw std::invalid_argument("fourier interface: empty coefficient list");
  if (period <= 0.0)
    throw std::invalid_argument("fourier interface: period must be positive");
  InterfaceGeometry g;
  g.kind_ = Kind::Fourier;
  g.d_ = period;
  g.coeffs_ = std::move(coeffs);
  g.cosine_ = cosine;
  g.scale_ = scale;
  g.y0_ = y0;
  return g;
}

InterfaceGeometry InterfaceGeometry::polyline(std::vector<Point2> vertices,
                                              double period) {
  if (vertices.size() < 2)
    throw std::invalid_argument("polyline interface: need >= 2 vertices");
  if (period <= 0.0)
    throw std::invalid_argument("polyline interface: period must be positive");
  const Point2 close{vertices.front().x + period, vertices.front().y};
  if (std::abs(vertices.back().x - close.x) > 1e-12 * period ||
      std::abs(vertices.back().y - close.y) > 1e-12 * period)
    vertices.push_back(close);
  for (size_t k = 0; k + 1 < vertices.size(); ++k)
    if (vertices[k + 1].x <= vertices[k].x)
      throw std::invalid_argument(
          "polyline interface: vertex x must be strictly increasing");

  InterfaceGeometry g;
  g.kind_ = Kind::Polyline;
  g.d_ = period;
  g.vertices_ = std::move(vertices);

  const int m = static_cast<int>(g.vertices_.size()) - 1;
  std::vector<double> cum(m + 1, 0.0);
  for (int k = 0; k < m; ++k)
    cum[k + 1] = cum[k] + norm(g.vertices_[k + 1] - g.vertices_[k]);
  g.vparam_.resize(m + 1);
  for (int k = 0; k <= m; ++k) g.vparam_[k] = cum[k] / cum[m];

  const auto tangent = [&](int seg) {
    const Point2 t = g.vertices_[seg + 1] - g.vertices_[seg];
    return (1.0 / norm(t)) * t;
  };
  for (int k = 1; k < m; ++k) {
    const Point2 ta = tangent(k - 1), tb = tangent(k);
    if (std::abs(ta.x * tb.y - ta.y * tb.x) > 1e-12)
      g.corners_.push_back(g.vparam_[k]);
  }
  {
    const Point2 ta = tangent(m - 1), tb = tangent(0);
    if (std::abs(ta.x * tb.y - ta.y * tb.x) > 1e-12)
      g.corners_.insert(g.corners_.begin(), 0.0);
  }
  return g;
}

InterfaceGeometry InterfaceGeometry::sampled(std::vector<Point2> points,
                                             double period) {
  if (points.size() < 4)
    throw std::invalid_argument("sampled interface: need >= 4 points");
  if (period <= 0.0)
    throw std::invalid_argument("sampled interface: period must be positive");
  InterfaceGeometry g;
  g.kind_ = Kind::Sampled;
  g.d_ = period;
  const int n = static_cast<int>(points.size());
  const double h = 1.0 / n;
  // spline the periodic residual u(t) = position(t) - (t d, 0)
  g.samp_.resize(n);
  std::vector<double> ux(n), uy(n);
  for (int k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / n;
    g.samp_[k] = {points[k].x - t * period, points[k].y};
    ux[k] = g.samp_[k].x;
    uy[k] = g.samp_[k].y;
  }
  const auto d2x = periodic_spline_d2(ux, h);
  const auto d2y = periodic_spline_d2(uy, h);
  g.samp_d2_.resize(n);
  for (int k = 0; k < n; ++k) g.samp_d2_[k] = {d2x[k], d2y[k]};
  return g;
}

Point2 InterfaceGeometry::position(double t) const {
  switch (kind_) {
    case Kind::Fourier: {
      double y = 0.0;
      for (size_t j = 0; j < coeffs_.size(); ++j) {
        const double arg = 2.0 * kPi * (j + 1) * t;
        y += coeffs_[j] * (cosine_ ? std::cos(arg) : std::sin(arg));
      }
      return {t * d_ - 0.5 * d_, y0_ + scale_ * y};
    }
    case Kind::Polyline: {
      const double tw = std::clamp(t, 0.0, 1.0);
      const auto it =
          std::upper_bound(vparam_.begin(), vparam_.end(), tw);
      int seg = static_cast<int>(it - vparam_.begin()) - 1;
      seg = std::clamp(seg, 0, static_cast<int>(vertices_.size()) - 2);
      const double u =
          (tw - vparam_[seg]) / (vparam_[seg + 1] - vparam_[seg]);
      return vertices_[seg] + u * (vertices_[seg + 1] - vertices_[seg]);
    }
    case Kind::Sampled: {
      const int n = static_cast<int>(samp_.size());
      const double h = 1.0 / n;
      const double tw = wrap01(t);
      int k = std::min(static_cast<int>(tw * n), n - 1);
      const double a = (static_cast<double>(k + 1) / n - tw) / h;
      const double b = 1.0 - a;
      const Point2 pk = samp_[k], pk1 = samp_[(k + 1) % n];
      const Point2 sk = samp_d2_[k], sk1 = samp_d2_[(k + 1) % n];
      const double cA = (a * a * a - a) * h * h / 6.0;
      const double cB = (b * b * b - b) * h * h / 6.0;
      Point2 u = a * pk + b * pk1 + cA * sk + cB * sk1;
      return {u.x + t * d_, u.y};
    }
  }
  throw std::logic_error("position: bad kind");
}

Point2 InterfaceGeometry::derivative(double t) const {
  switch (kind_) {
    case Kind::Fourier: {
      double dy = 0.0;
      for (size_t j = 0; j < coeffs_.size(); ++j) {
        const double f = 2.0 * kPi * (j + 1);
        const double arg = f * t;
        dy += coeffs_[j] * f * (cosine_ ? -std::sin(arg) : std::cos(arg));
      }
      return {d_, scale_ * dy};
    }
    case Kind::Polyline: {
      const double tw = std::clamp(t, 0.0, 1.0);
      auto it = std::upper_bound(vparam_.begin(), vparam_.end(), tw);
      int seg = static_cast<int>(it - vparam_.begin()) - 1;
      seg = std::clamp(seg, 0, static_cast<int>(vertices_.size()) - 2);
      const double dt = vparam_[seg + 1] - vparam_[seg];
      return (1.0 / dt) * (vertices_[seg + 1] - vertices_[seg]);
    }
    case Kind::Sampled: {
      const int n = static_cast<int>(samp_.size());
      const double h = 1.0 / n;
      const double tw = wrap01(t);
      int k = std::min(static_cast<int>(tw * n), n - 1);
      const double a = (static_cast<double>(k + 1) / n - tw) / h;
      const double b = 1.0 - a;
      const Point2 pk = samp_[k], pk1 = samp_[(k + 1) % n];
      const Point2 sk = samp_d2_[k], sk1 = samp_d2_[(k + 1) % n];
      const double cA = -(3.0 * a * a - 1.0) * h / 6.0;
      const double cB = (3.0 * b * b - 1.0) * h / 6.0;
      Point2 du = (1.0 / h) * (pk1 - pk) + cA * sk + cB * sk1;
      return {du.x + d_, du.y};
    }
  }
  throw std::logic_error("derivative: bad kind");
}

void LayerStack::validate() const {
  if (interfaces.empty())
    throw std::invalid_argument("stack: need at least one interface");
  if (wavenumbers.size() != interfaces.size() + 1)
    throw std::invalid_argument("stack: need one wavenumber per layer");
  for (double w : wavenumbers)
    if (!(w > 0.0))
      throw std::invalid_argument("stack: wavenumbers must be positive");
  for (const auto& g : interfaces)
    if (std::abs(g.period() - period) > 1e-12 * period)
      throw std::invalid_argument("stack: interface/stack period mismatch");
  // vertical ordering, sampled; also catches touching interfaces
  const int ns = 256;
  for (size_t i = 0; i + 1 < interfaces.size(); ++i) {
    for (int j = 0; j < ns; ++j) {
      const double t = (j + 0.5) / ns;
      if (interfaces[i].position(t).y <= interfaces[i + 1].position(t).y)
        throw std::invalid_argument("stack: interfaces out of order or crossing");
    }
  }
}

IncidentWave::IncidentWave(const LayerStack& stack, double theta_inc)
    : theta(theta_inc),
      omega1(stack.wavenumbers.empty() ? 0.0 : stack.wavenumbers.front()),
      period(stack.period) {
  if (!(theta > -kPi && theta < 0.0))
    throw std::invalid_argument("incident angle must lie in (-pi, 0)");
}

Discretization build_discretization(const InterfaceGeometry& geom,
                                    int panels_per_period,
                                    const UnitCellParams& params) {
  if (panels_per_period < 2)
    throw std::invalid_argument("build_discretization: need >= 2 panels");

  // breakpoints: corners plus a uniform fill of each smooth arc
  std::vector<double> corner_ts = geom.corners();
  std::vector<double> brk = {0.0, 1.0};
  for (double c : corner_ts)
    if (c > 0.0 && c < 1.0) brk.push_back(c);
  std::sort(brk.begin(), brk.end());

  std::vector<std::pair<double, bool>> pts;  // breakpoint, adjacent-to-corner
  const bool corner_at_wrap =
      !corner_ts.empty() && corner_ts.front() == 0.0;
  const auto is_corner_param = [&](double t) {
    if (t == 0.0 || t == 1.0) return corner_at_wrap;
    for (double c : corner_ts)
      if (std::abs(c - t) < 1e-14) return true;
    return false;
  };

  std::vector<double> edges;  // final panel edges before refinement
  for (size_t a = 0; a + 1 < brk.size(); ++a) {
    const double t0 = brk[a], t1 = brk[a + 1];
    const int n = std::max(1, static_cast<int>(std::lround(
                                  panels_per_period * (t1 - t0))));
    for (int j = 0; j < n; ++j) edges.push_back(t0 + (t1 - t0) * j / n);
  }
  edges.push_back(1.0);

  // dyadic refinement: replace the panel touching each corner side with
  // corner_levels+1 panels shrinking geometrically toward the corner
  std::vector<double> refined;
  std::vector<std::pair<double, double>> refined_spans;
  const int L = params.corner_levels;
  const auto refine_toward_left = [&](double t0, double h) {
    for (int l = L; l >= 1; --l) refined.push_back(t0 + h / std::pow(2.0, l));
    refined_spans.emplace_back(t0, t0 + h);
  };
  const auto refine_toward_right = [&](double t1, double h) {
    for (int l = 1; l <= L; ++l) refined.push_back(t1 - h / std::pow(2.0, l));
    refined_spans.emplace_back(t1 - h, t1);
  };
  for (size_t a = 0; a + 1 < edges.size(); ++a) {
    const double t0 = edges[a], t1 = edges[a + 1];
    refined.push_back(t0);
    const double h = t1 - t0;
    const bool c0 = is_corner_param(t0) && L > 0;
    const bool c1 = is_corner_param(t1) && L > 0;
    if (c0 && c1) {
      const double mid = 0.5 * (t0 + t1);
      refine_toward_left(t0, 0.5 * h);
      refined.push_back(mid);
      refine_toward_right(t1, 0.5 * h);
    } else if (c0) {
      refine_toward_left(t0, h);
    } else if (c1) {
      refine_toward_right(t1, h);
    }
  }
  refined.push_back(1.0);
  std::sort(refined.begin(), refined.end());

  const QuadRule rule = gauss_legendre(16);
  Discretization disc;
  disc.period = geom.period();
  const int npan = static_cast<int>(refined.size()) - 1;
  disc.nodes.reserve(16 * npan);
  disc.normals.reserve(16 * npan);
  disc.weights.resize(16 * npan);
  disc.speeds.resize(16 * npan);
  disc.params.resize(16 * npan);
  for (int pidx = 0; pidx < npan; ++pidx) {
    const double a = refined[pidx], b = refined[pidx + 1];
    disc.panels.push_back({a, b, 16 * pidx, false});
    for (int j = 0; j < 16; ++j) {
      const double t = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[j];
      const Point2 p = geom.position(t);
      const Point2 dp = geom.derivative(t);
      const double speed = norm(dp);
      const int idx = 16 * pidx + j;
      disc.nodes.push_back(p);
      disc.normals.push_back((1.0 / speed) * Point2{dp.y, -dp.x});
      disc.speeds[idx] = speed;
      disc.params[idx] = t;
      disc.weights[idx] = 0.5 * (b - a) * rule.weights[j] * speed;
    }
  }

  // mark panels produced by corner refinement
  for (auto& pan : disc.panels)
    for (const auto& [s0, s1] : refined_spans)
      if (pan.t0 >= s0 - 1e-14 && pan.t1 <= s1 + 1e-14) pan.corner = true;

  // coarse self-intersection guard on a polyline shadow of the curve
  {
    const int ns = 256;
    std::vector<Point2> poly(ns + 1);
    for (int j = 0; j <= ns; ++j)
      poly[j] = geom.position(static_cast<double>(j) / ns);
    for (int i = 0; i < ns; ++i) {
      for (int j = i + 2; j < ns; ++j) {
        if (i == 0 && j == ns - 1) continue;
        if (segments_cross(poly[i], poly[i + 1], poly[j], poly[j + 1]))
          throw std::invalid_argument(
              "build_discretization: interface self-intersects");
      }
    }
  }
  return disc;
}

UnitCellLayout build_unit_cell(const LayerStack& stack,
                               const UnitCellParams& params) {
  stack.validate();
  const double d = stack.period;
  const int I = stack.num_interfaces();
  UnitCellLayout cell;
  cell.xL = -0.5 * d;
  cell.xR = 0.5 * d;

  // vertical extents of each interface, plus wall heights at x = +-d/2
  std::vector<double> ymin(I), ymax(I), ywall(I);
  for (int i = 0; i < I; ++i) {
    double lo = 1e300, hi = -1e300;
    for (int j = 0; j <= 512; ++j) {
      const double y = stack.interfaces[i].position(j / 512.0).y;
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
    ymin[i] = lo;
    ymax[i] = hi;
    ywall[i] = stack.interfaces[i].position(0.0).y;
  }
  cell.yU = ymax[0] + 0.1 * d;
  cell.yD = ymin[I - 1] - 0.1 * d;

  // wall collocation nodes: one Gauss rule per layer per side
  const QuadRule wall_rule = gauss_legendre(params.M_w);
  cell.wall_left.resize(I + 1);
  cell.wall_right.resize(I + 1);
  for (int l = 0; l <= I; ++l) {
    const double ytop = (l == 0) ? cell.yU : ywall[l - 1];
    const double ybot = (l == I) ? cell.yD : ywall[l];
    if (!(ytop > ybot))
      throw std::invalid_argument("build_unit_cell: degenerate wall segment");
    for (int j = 0; j < params.M_w; ++j) {
      const double y =
          0.5 * (ytop + ybot) + 0.5 * (ytop - ybot) * wall_rule.nodes[j];
      cell.wall_left[l].push_back({cell.xL, y});
      cell.wall_right[l].push_back({cell.xR, y});
    }
  }

  // top/bottom matching grids: M equispaced nodes on an offset grid
  for (int j = 0; j < params.M; ++j) {
    const double x = cell.xL + (j + 0.5) * d / params.M;
    cell.top_nodes.push_back({x, cell.yU});
    cell.bottom_nodes.push_back({x, cell.yD});
  }

  // proxy circles: one per layer, centered on the vertical centerline at
  // the layer's vertical midpoint, radius 1.75 d
  for (int l = 0; l <= I; ++l) {
    const double ytop = (l == 0) ? cell.yU : 0.5 * (ymin[l - 1] + ymax[l - 1]);
    const double ybot = (l == I) ? cell.yD : 0.5 * (ymin[l] + ymax[l]);
    ProxyCircle pc;
    pc.center = {0.0, 0.5 * (ytop + ybot)};
    pc.radius = 1.75 * d;
    for (int j = 0; j < params.P; ++j) {
      const double a = 2.0 * kPi * j / params.P;
      const Point2 n{std::cos(a), std::sin(a)};
      pc.normals.push_back(n);
      pc.points.push_back(pc.center + pc.radius * n);
    }
    cell.proxies.push_back(std::move(pc));
  }
  return cell;
}

}  // namespace qps
