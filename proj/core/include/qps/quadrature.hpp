#pragma once

#include "qps/types.hpp"

namespace qps {

/// Nodes and weights on [-1, 1].
struct QuadRule {
  RealVec nodes;
  RealVec weights;
};

/// n-point Gauss-Legendre rule (Newton iteration on P_n).
QuadRule gauss_legendre(int n);

/// Legendre functions of the second kind Q_0(c) .. Q_kmax(c), |c| != 1.
/// Principal-value definition on (-1, 1). Forward recurrence inside the
/// interval; Miller's backward recurrence outside, where Q is the
/// minimal solution.
RealVec legendre_q(int kmax, double c);

/// Product-integration weights for a logarithmic factor: returns v such
/// that  sum_j v_j p(t_j) = int_{-1}^{1} p(t) ln|t - c| dt  exactly for
/// all polynomials p of degree < n, where t_j are the nodes of `rule`.
/// Valid for any c with |c| != 1, inside or outside the interval.
RealVec log_weights(const QuadRule& rule, double c);

/// Same on a panel [a, b] with singular point s0: weights u at the
/// mapped nodes s_j = (a+b)/2 + (b-a)/2 t_j with
///   sum_j u_j p(s_j) = int_a^b p(s) ln|s - s0| ds.
RealVec log_weights_scaled(const QuadRule& rule, double a, double b, double s0);

}  // namespace qps
