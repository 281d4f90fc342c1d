#include "qps/postproc.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace qps {

double flux_error(const Vec& aU, const Vec& aD, int K, double theta,
                  double omega1, double omegaI1, double d) {
  double out = 0.0;
  for (int n = -K; n <= K; ++n) {
    const double kappa = rb_kappa(theta, omega1, d, n);
    const Complex kU = rb_k(omega1, kappa);
    const Complex kD = rb_k(omegaI1, kappa);
    if (kU.imag() == 0.0) out += kU.real() * std::norm(aU(n + K));
    if (kD.imag() == 0.0) out += kD.real() * std::norm(aD(n + K));
  }
  return std::abs(out / (omega1 * std::abs(std::sin(theta))) - 1.0);
}

BraggTable bragg_efficiencies(const SolveResult& res, double omega1,
                              double omegaI1, double d, int K) {
  BraggTable tab;
  tab.K = K;
  tab.R = RealVec::Zero(2 * K + 1);
  tab.T = RealVec::Zero(2 * K + 1);
  tab.prop_up.assign(2 * K + 1, false);
  tab.prop_down.assign(2 * K + 1, false);
  const double inc = omega1 * std::abs(std::sin(res.theta));
  for (int n = -K; n <= K; ++n) {
    const double kappa = rb_kappa(res.theta, omega1, d, n);
    const Complex kU = rb_k(omega1, kappa);
    const Complex kD = rb_k(omegaI1, kappa);
    if (kU.imag() == 0.0) {
      tab.prop_up[n + K] = true;
      tab.R(n + K) = kU.real() * std::norm(res.aU(n + K)) / inc;
    }
    if (kD.imag() == 0.0) {
      tab.prop_down[n + K] = true;
      tab.T(n + K) = kD.real() * std::norm(res.aD(n + K)) / inc;
    }
  }
  return tab;
}

namespace {

// y of the (graph-type) interface at abscissa x via bisection in the
// parameter; x(t) is monotone for all supported geometry kinds.
double interface_height(const InterfaceGeometry& g, double x) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g.position(mid).x < x ? lo : hi) = mid;
  }
  return g.position(0.5 * (lo + hi)).y;
}

}  // namespace

FieldGrid evaluate_field(const SystemBlocks& sys, const SolveResult& res,
                         const std::vector<Point2>& points, bool total) {
  const int I = sys.num_interfaces();
  const int K = sys.params.K;
  const double d = sys.stack.period;
  const auto& w = sys.stack.wavenumbers;
  const UnknownLayout lay = make_layout(sys);
  const IncidentWave inc(sys.stack, res.theta);
  const Complex alpha = res.alpha;

  FieldGrid out;
  out.points = points;
  out.total = total;
  out.values.resize(points.size());
  out.region.resize(points.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(points.size());
       ++pi) {
    const Point2 p = points[pi];
    // wrap into the unit strip; each period to the right costs alpha
    const int m = static_cast<int>(std::floor((p.x + 0.5 * d) / d));
    const Point2 q{p.x - m * d, p.y};
    const Complex phase = std::pow(alpha, m);

    Complex u = 0.0;
    int region;
    if (p.y > sys.cell.yU) {
      region = -1;
      for (int n = -K; n <= K; ++n) {
        const double kappa = rb_kappa(res.theta, w.front(), d, n);
        const Complex kU = rb_k(w.front(), kappa);
        u += res.aU(n + K) * std::exp(kImag * (kappa * p.x)) *
             std::exp(kImag * kU * (p.y - sys.cell.yU));
      }
    } else if (p.y < sys.cell.yD) {
      region = -2;
      for (int n = -K; n <= K; ++n) {
        const double kappa = rb_kappa(res.theta, w.front(), d, n);
        const Complex kD = rb_k(w.back(), kappa);
        u += res.aD(n + K) * std::exp(kImag * (kappa * p.x)) *
             std::exp(-kImag * kD * (p.y - sys.cell.yD));
      }
    } else {
      int layer = 0;
      bool bad = false;
      for (int i = 0; i < I; ++i) {
        const double yi = interface_height(sys.stack.interfaces[i], q.x);
        if (std::abs(q.y - yi) < 1e-8 * d) bad = true;
        if (yi > q.y) ++layer;
      }
      region = layer;
      if (bad) {
        std::fprintf(stderr,
                     "evaluate_field: point (%g, %g) too close to an "
                     "interface, returning NaN\n",
                     p.x, p.y);
        out.values(pi) = Complex(std::numeric_limits<double>::quiet_NaN(),
                                 std::numeric_limits<double>::quiet_NaN());
        out.region[pi] = region;
        continue;
      }
      // periodized single/double layer terms of the bounding interfaces
      for (int i : {layer - 1, layer}) {
        if (i < 0 || i >= I) continue;
        const auto& g = sys.interfaces[i];
        const int o = lay.sigma_offset[i];
        for (int s = -1; s <= 1; ++s) {
          const Complex as = s == 0 ? 1.0 : (s == 1 ? alpha : 1.0 / alpha);
          Complex acc = 0.0;
          for (int j = 0; j < g.size(); ++j) {
            const Point2 y{g.nodes[j].x + s * d, g.nodes[j].y};
            const double sw = std::sqrt(g.weights(j));
            acc += kernel_values(KernelKind::D, w[layer], q, y, {}, g.normals[j]) *
                       sw * res.sigma_hat(o + 2 * j) +
                   kernel_values(KernelKind::S, w[layer], q, y, {}, {}) * sw *
                       res.sigma_hat(o + 2 * j + 1);
          }
          u += as * acc;
        }
      }
      const Mat phi = proxy_basis_matrix(sys.cell.proxies[layer], w[layer],
                                         {q}, {{0.0, 1.0}}, false);
      u += (phi * res.c.segment(layer * lay.P, lay.P))(0);
      u *= phase;
    }
    // only the top layer splits off the incident wave; below the stack the
    // downward expansion already carries the full transmitted field
    if (total && (region == 0 || region == -1)) u += inc.value(p);
    out.values(pi) = u;
    out.region[pi] = region;
  }
  return out;
}

}  // namespace qps
