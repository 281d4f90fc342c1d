#pragma once

#include <utility>

#include "qps/types.hpp"

namespace qps {

/// First-kind and second-kind Bessel values of orders 0 and 1 at x > 0.
struct Bessel01 {
  double j0, y0, j1, y1;
};

/// Evaluates J0, Y0, J1, Y1 for x > 0 with relative accuracy ~1e-14.
/// Power series for small arguments, Steed continued fractions in the
/// intermediate range, Hankel asymptotics for large arguments.
/// Throws std::domain_error for x <= 0.
Bessel01 bessel01(double x);

/// (H0^(1)(x), H1^(1)(x)) for x > 0.
std::pair<Complex, Complex> hankel01(double x);

/// Free-space Helmholtz Green's function (i/4) H0^(1)(omega*|x-y|).
Complex greens(double omega, Point2 x, Point2 y);

enum class KernelKind { S, D, Dstar, T };

/// Closed-form layer-potential kernels:
///   S  = G
///   D  = dG/dnu_y
///   D* = dG/dnu_x
///   T  = d^2 G / dnu_x dnu_y
Complex kernel_values(KernelKind kind, double omega, Point2 x, Point2 y,
                      Point2 nu_x, Point2 nu_y);

/// Kernel split K = log_coeff * ln(r) + singular + smooth, where
/// "singular" is the omega-independent part (0 for S, a 1/r term for
/// D and D*, a 1/r^2 term for T) that cancels exactly when two wave
/// numbers are subtracted on the same curve. Only log_coeff and smooth
/// are returned; difference kernels are assembled as
///   K_w1 - K_w2 = (A1 - A2) ln r + (B1 - B2).
struct KernelSplit {
  Complex log_coeff;
  Complex smooth;
};

KernelSplit kernel_split(KernelKind kind, double omega, Point2 x, Point2 y,
                         Point2 nu_x, Point2 nu_y);

/// r -> 0 limit of kernel_split on a smooth curve (nu_x == nu_y).
KernelSplit kernel_split_diagonal(KernelKind kind, double omega);

/// All four kernels (or splits) for one point pair, sharing a single
/// Hankel evaluation. The assembly inner loops live on these.
struct KernelValues4 {
  Complex s, d, dstar, t;
};
struct KernelSplit4 {
  KernelSplit s, d, dstar, t;
};
KernelValues4 kernel_values_all(double omega, Point2 x, Point2 y, Point2 nu_x,
                                Point2 nu_y);
KernelSplit4 kernel_split_all(double omega, Point2 x, Point2 y, Point2 nu_x,
                              Point2 nu_y);
KernelSplit4 kernel_split_diagonal_all(double omega);

}  // namespace qps
