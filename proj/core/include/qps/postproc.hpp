#pragma once

#include "qps/solver.hpp"

namespace qps {

/// Energy-balance defect of the Rayleigh-Bloch coefficients: outgoing
/// power of the propagating orders over incident power, minus one.
/// aU/aD hold orders n = -K..K.
double flux_error(const Vec& aU, const Vec& aD, int K, double theta,
                  double omega1, double omegaI1, double d);

/// Per-order grating efficiencies. Entries for evanescent orders are
/// zero and masked off.
struct BraggTable {
  int K = 0;
  RealVec R, T;  // 2K+1 each, order n at index n+K
  std::vector<bool> prop_up, prop_down;
  double sum() const { return R.sum() + T.sum(); }
};

BraggTable bragg_efficiencies(const SolveResult& res, double omega1,
                              double omegaI1, double d, int K);

struct FieldGrid {
  std::vector<Point2> points;
  Vec values;
  std::vector<int> region;  // layer index; -1 above y_U, -2 below y_D
  bool total = false;
};

/// Evaluate the solution at arbitrary points: layer representation
/// inside the cell (periodized three-copy operators + proxy terms),
/// Rayleigh-Bloch expansions above y_U / below y_D, alpha-scaling for
/// points outside the unit strip. Points within 1e-8 d of an interface
/// get NaN. total = true adds the incident wave in the top layer.
FieldGrid evaluate_field(const SystemBlocks& sys, const SolveResult& res,
                         const std::vector<Point2>& points, bool total);

}  // namespace qps
