#pragma once

#include <complex>
#include <vector>

#include "qps/types.hpp"

namespace qps {

/// Discretization and unit-cell knobs. Defaults follow the reference
/// configuration: 120 wall collocation nodes per layer per side, 60
/// top/bottom matching nodes, 160 proxy sources, Rayleigh-Bloch
/// truncation at 20 modes, 5 levels of dyadic corner refinement.
struct UnitCellParams {
  int M_w = 120;
  int M = 60;
  int P = 160;
  int K = 20;
  int corner_levels = 5;
};

/// One material interface, parametrized over t in [0,1] traversing a
/// single period left to right: position(1) = position(0) + (d, 0) and
/// position(0).x = -d/2. Corners are parameter values with a tangent
/// discontinuity (parameter 0 counts if the curve wraps with a kink).
class InterfaceGeometry {
 public:
  /// Trigonometric graph y(t) = y0 + scale * sum_j c_j trig(2 pi j t),
  /// j >= 1.
  static InterfaceGeometry fourier(std::vector<double> coeffs, bool cosine,
                                   double scale, double period,
                                   double y0 = 0.0);
  /// Piecewise-linear graph through vertices with strictly increasing x,
  /// first vertex at x = -d/2. The closing vertex (first + (d,0)) is
  /// appended automatically if missing.
  static InterfaceGeometry polyline(std::vector<Point2> vertices,
                                    double period);
  /// Smooth closed-form-free interface: periodic cubic spline through
  /// equispaced-in-parameter samples (first sample at x = -d/2).
  static InterfaceGeometry sampled(std::vector<Point2> points, double period);

  Point2 position(double t) const;
  Point2 derivative(double t) const;
  const std::vector<double>& corners() const { return corners_; }
  double period() const { return d_; }

 private:
  InterfaceGeometry() = default;
  enum class Kind { Fourier, Polyline, Sampled };
  Kind kind_ = Kind::Fourier;
  double d_ = 1.0;
  std::vector<double> corners_;
  // fourier
  std::vector<double> coeffs_;
  bool cosine_ = false;
  double scale_ = 1.0;
  double y0_ = 0.0;
  // polyline
  std::vector<Point2> vertices_;
  std::vector<double> vparam_;  // parameter of each vertex, arclength-based
  // sampled: periodic cubic spline of u(t) = position(t) - (t d, 0)
  std::vector<Point2> samp_;
  std::vector<Point2> samp_d2_;
};

/// Periodic layered medium: I interfaces separate I+1 layers, listed
/// top-down; wavenumbers[i] belongs to the layer above interfaces[i].
struct LayerStack {
  double period = 1.0;
  std::vector<double> wavenumbers;
  std::vector<InterfaceGeometry> interfaces;

  int num_interfaces() const { return static_cast<int>(interfaces.size()); }
  int num_layers() const { return static_cast<int>(wavenumbers.size()); }
  void validate() const;  // throws std::invalid_argument on bad stacks
};

/// Downward-traveling plane wave exp(i k . x) in the top layer.
struct IncidentWave {
  double theta = 0.0;   // in (-pi, 0)
  double omega1 = 0.0;  // top-layer wavenumber
  double period = 0.0;

  IncidentWave(const LayerStack& stack, double theta_inc);

  Point2 k() const {
    return {omega1 * std::cos(theta), omega1 * std::sin(theta)};
  }
  Complex bloch_alpha() const {
    return std::exp(kImag * (omega1 * period * std::cos(theta)));
  }
  Complex value(Point2 x) const {
    const Point2 kv = k();
    return std::exp(kImag * (kv.x * x.x + kv.y * x.y));
  }
  Complex normal_derivative(Point2 x, Point2 nu) const {
    const Point2 kv = k();
    return kImag * dot(kv, nu) * value(x);
  }
};

/// Composite-Gauss Nystrom discretization of one interface.
struct Discretization {
  struct Panel {
    double t0, t1;  // parameter range
    int begin;      // first node index (16 nodes per panel)
    bool corner;    // produced by dyadic corner refinement
  };

  std::vector<Point2> nodes;
  std::vector<Point2> normals;  // unit, oriented into the lower layer
  RealVec weights;              // speed-weighted; sums to arc length
  RealVec speeds;
  RealVec params;  // parameter t per node
  std::vector<Panel> panels;
  double period = 0.0;

  int size() const { return static_cast<int>(nodes.size()); }
  /// Panel owning node i (16 nodes per panel).
  const Panel& panel_of(int i) const { return panels[i / 16]; }
};

Discretization build_discretization(const InterfaceGeometry& geom,
                                    int panels_per_period,
                                    const UnitCellParams& params);

/// Proxy circle for one layer: P equispaced sources with outward normals.
struct ProxyCircle {
  Point2 center;
  double radius = 0.0;
  std::vector<Point2> points;
  std::vector<Point2> normals;
};

/// Walls, top/bottom matching grids, and proxy circles of the unit cell
/// [-d/2, d/2]. Wall nodes are one Gauss rule per layer per side.
struct UnitCellLayout {
  double xL = 0.0, xR = 0.0;
  double yU = 0.0, yD = 0.0;
  std::vector<std::vector<Point2>> wall_left;   // [layer][node]
  std::vector<std::vector<Point2>> wall_right;  // nodes shifted by (d, 0)
  std::vector<Point2> top_nodes;                // on y = yU
  std::vector<Point2> bottom_nodes;             // on y = yD
  std::vector<ProxyCircle> proxies;             // one per layer
};

UnitCellLayout build_unit_cell(const LayerStack& stack,
                               const UnitCellParams& params);

}  // namespace qps
