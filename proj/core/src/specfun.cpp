#include "qps/specfun.hpp"

#include <cmath>
#include <stdexcept>

#include "qps/stats.hpp"

namespace qps {
namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209;
constexpr double kPi = 3.14159265358979323846264338;
constexpr double kSeriesMax = 8.0;   // ascending series below this
constexpr double kSteedMax = 17.0;   // Steed CF between, asymptotics above
constexpr double kSplitSeries = 2.0; // series form of the regularized parts

// Ascending-series building blocks at z:
//   j0  = J0(z)
//   j1z = J1(z)/z
//   s0  = sum_{k>=1} (-1)^{k+1} H_k u^k / (k!)^2,           u = z^2/4
//   s1z = (1/2) sum_{k>=0} (-1)^k (H_k + H_{k+1}) u^k / (k!(k+1)!)
// so that  Y0 = (2/pi)[(ln(z/2)+g) j0 + s0]
//          Y1 = (2/pi)(ln(z/2)+g) J1 - 2/(pi z) - (s1z * z)/pi.
struct SeriesParts {
  double j0, j1z, s0, s1z;
};

SeriesParts series_parts(double z) {
  const double u = 0.25 * z * z;
  double t0 = 1.0, t1 = 0.5;
  double j0 = 1.0, j1z = 0.5;
  double s0 = 0.0, s1z = 0.5;  // k=0: H_0 + H_1 = 1
  double hk = 0.0;
  for (int k = 1; k < 80; ++k) {
    t0 *= u / (static_cast<double>(k) * k);
    t1 *= u / (static_cast<double>(k) * (k + 1));
    hk += 1.0 / k;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    j0 += sign * t0;
    j1z += sign * t1;
    s0 -= sign * hk * t0;
    s1z += sign * (2.0 * hk + 1.0 / (k + 1)) * t1;
    if (t0 < 1e-18 && t1 < 1e-18) break;
  }
  return {j0, j1z, s0, s1z};
}

Bessel01 bessel_series(double x) {
  const SeriesParts p = series_parts(x);
  const double lg = std::log(0.5 * x) + kEulerGamma;
  const double j1 = p.j1z * x;
  return {p.j0,
          (2.0 / kPi) * (lg * p.j0 + p.s0),
          j1,
          (2.0 / kPi) * lg * j1 - 2.0 / (kPi * x) - p.s1z * x / kPi};
}

// Steed's method (CF1 + complex CF2) for order 0; J1 = -J0', Y1 = -Y0'.
Bessel01 bessel_steed(double x) {
  constexpr double EPS = 1e-16;
  constexpr double FPMIN = 1e-300;
  constexpr int MAXIT = 10000;
  const double xi = 1.0 / x;
  const double xi2 = 2.0 * xi;
  const double w = xi2 / kPi;

  // CF1 for f = J0'/J0, tracking the sign of J0.
  double isign = 1.0;
  double h = FPMIN;
  double b = 0.0, d = 0.0, c = h;
  for (int i = 1; i <= MAXIT; ++i) {
    b += xi2;
    d = b - d;
    if (std::abs(d) < FPMIN) d = FPMIN;
    c = b - 1.0 / c;
    if (std::abs(c) < FPMIN) c = FPMIN;
    d = 1.0 / d;
    const double del = c * d;
    h *= del;
    if (d < 0.0) isign = -isign;
    if (std::abs(del - 1.0) < EPS) break;
  }
  const double rjl = isign * FPMIN;
  const double f = h;

  // CF2 for p + i q = (J0' + i Y0')/(J0 + i Y0).
  double a = 0.25;
  double p = -0.5 * xi, q = 1.0;
  double br = 2.0 * x, bi = 2.0;
  double fact = a * xi / (p * p + q * q);
  double cr = br + q * fact, ci = bi + p * fact;
  double den = br * br + bi * bi;
  double dr = br / den, di = -bi / den;
  double dlr = cr * dr - ci * di, dli = cr * di + ci * dr;
  double temp = p * dlr - q * dli;
  q = p * dli + q * dlr;
  p = temp;
  for (int i = 2; i <= MAXIT; ++i) {
    a += 2 * (i - 1);
    bi += 2.0;
    dr = a * dr + br;
    di = a * di + bi;
    if (std::abs(dr) + std::abs(di) < FPMIN) dr = FPMIN;
    fact = a / (cr * cr + ci * ci);
    cr = br + cr * fact;
    ci = bi - ci * fact;
    if (std::abs(cr) + std::abs(ci) < FPMIN) cr = FPMIN;
    den = dr * dr + di * di;
    dr = dr / den;
    di = -di / den;
    dlr = cr * dr - ci * di;
    dli = cr * di + ci * dr;
    temp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = temp;
    if (std::abs(dlr - 1.0) + std::abs(dli) < EPS) break;
  }
  const double gam = (p - f) / q;
  double j0 = std::sqrt(w / ((p - f) * gam + q));
  j0 = std::copysign(j0, rjl);
  const double y0 = gam * j0;
  const double y0p = y0 * (p + q / gam);
  const double j0p = f * j0;
  return {j0, y0, -j0p, -y0p};
}

// Hankel asymptotic expansions; accurate to ~e^{-2x} relative.
Bessel01 bessel_asymptotic(double x) {
  const Complex iox(0.0, 1.0 / x);
  Complex s0(1.0, 0.0), s1(1.0, 0.0);
  Complex t0(1.0, 0.0), t1(1.0, 0.0);
  double prev0 = 1.0, prev1 = 1.0;
  bool done0 = false, done1 = false;
  for (int k = 0; k < 60 && !(done0 && done1); ++k) {
    const double m = 2.0 * k + 1.0;
    if (!done0) {
      t0 *= iox * (-(m * m)) / (8.0 * (k + 1.0));
      const double mag = std::abs(t0);
      if (mag > prev0 || mag < 1e-18) {
        done0 = true;
      } else {
        s0 += t0;
        prev0 = mag;
      }
    }
    if (!done1) {
      t1 *= iox * (4.0 - m * m) / (8.0 * (k + 1.0));
      const double mag = std::abs(t1);
      if (mag > prev1 || mag < 1e-18) {
        done1 = true;
      } else {
        s1 += t1;
        prev1 = mag;
      }
    }
  }
  const double amp = std::sqrt(2.0 / (kPi * x));
  // e^{i(x - pi/4)} via libm's sin/cos: their internal argument reduction
  // is exact, while forming x - pi/4 first loses ~x*eps of phase.
  const double rhalf = std::sqrt(0.5);
  const Complex eix(std::cos(x), std::sin(x));
  const Complex e0 = eix * Complex(rhalf, -rhalf);
  const Complex e1 = eix * Complex(-rhalf, -rhalf);
  const Complex h0 = amp * e0 * s0;
  const Complex h1 = amp * e1 * s1;
  return {h0.real(), h0.imag(), h1.real(), h1.imag()};
}

// Regularized Hankel parts used by the kernel splits:
//   H0(z) = (2i/pi) J0(z) ln(r) + h0r
//   H1(z) = (2i/pi) J1(z) ln(r) - 2i/(pi z) + z * h1rz
// with z = omega * r. Both h0r and h1rz are smooth in r near 0.
struct RegularParts {
  Complex h0r;
  Complex h1rz;
  double j0;
  double j1z;  // J1(z)/z
};

RegularParts regular_parts(double omega, double r);

}  // namespace

Bessel01 bessel01(double x) {
  if (!(x > 0.0)) throw std::domain_error("bessel01: argument must be positive");
  stats::count_kernel_eval();
  if (x < kSeriesMax) return bessel_series(x);
  if (x < kSteedMax) return bessel_steed(x);
  return bessel_asymptotic(x);
}

std::pair<Complex, Complex> hankel01(double x) {
  const Bessel01 b = bessel01(x);
  return {Complex(b.j0, b.y0), Complex(b.j1, b.y1)};
}

Complex greens(double omega, Point2 x, Point2 y) {
  const double r = norm(x - y);
  if (r == 0.0) throw std::domain_error("greens: coincident points");
  const auto [h0, h1] = hankel01(omega * r);
  (void)h1;
  return 0.25 * kImag * h0;
}

KernelValues4 kernel_values_all(double omega, Point2 x, Point2 y, Point2 nu_x,
                                Point2 nu_y) {
  const Point2 rv = x - y;
  const double r = norm(rv);
  if (r == 0.0) throw std::domain_error("kernel_values: coincident points");
  const auto [h0, h1] = hankel01(omega * r);
  const Complex iw4 = 0.25 * kImag * omega;
  const double cx = dot(nu_x, rv) / r;
  const double cy = dot(nu_y, rv) / r;
  const double qq = dot(nu_x, nu_y) - 2.0 * cx * cy;
  KernelValues4 k;
  k.s = 0.25 * kImag * h0;                    // G
  k.d = iw4 * h1 * cy;                        // dG/dnu_y
  k.dstar = -iw4 * h1 * cx;                   // dG/dnu_x
  k.t = iw4 * (omega * h0 * cx * cy + h1 * qq / r);
  return k;
}

Complex kernel_values(KernelKind kind, double omega, Point2 x, Point2 y,
                      Point2 nu_x, Point2 nu_y) {
  const KernelValues4 k = kernel_values_all(omega, x, y, nu_x, nu_y);
  switch (kind) {
    case KernelKind::S:
      return k.s;
    case KernelKind::D:
      return k.d;
    case KernelKind::Dstar:
      return k.dstar;
    case KernelKind::T:
      return k.t;
  }
  throw std::logic_error("kernel_values: bad kind");
}

namespace {

RegularParts regular_parts(double omega, double r) {
  const double z = omega * r;
  if (z < kSplitSeries) {
    stats::count_kernel_eval();
    const SeriesParts p = series_parts(z);
    const double lw = std::log(0.5 * omega) + kEulerGamma;
    const Complex h0r(p.j0, (2.0 / kPi) * (lw * p.j0 + p.s0));
    const Complex h1rz(p.j1z, (2.0 / kPi) * lw * p.j1z - p.s1z / kPi);
    return {h0r, h1rz, p.j0, p.j1z};
  }
  const Bessel01 b = bessel01(z);
  const double lr = std::log(r);
  const Complex h0r(b.j0, b.y0 - (2.0 / kPi) * b.j0 * lr);
  const Complex h1r(b.j1,
                    b.y1 + 2.0 / (kPi * z) - (2.0 / kPi) * b.j1 * lr);
  return {h0r, h1r / z, b.j0, b.j1 / z};
}

}  // namespace

KernelSplit4 kernel_split_all(double omega, Point2 x, Point2 y, Point2 nu_x,
                              Point2 nu_y) {
  const Point2 rv = x - y;
  const double r = norm(rv);
  if (r == 0.0) return kernel_split_diagonal_all(omega);
  const double z = omega * r;
  const RegularParts rp = regular_parts(omega, r);
  const double j1 = rp.j1z * z;
  const double cx = dot(nu_x, rv) / r;
  const double cy = dot(nu_y, rv) / r;
  const double qq = dot(nu_x, nu_y) - 2.0 * cx * cy;
  const double w2 = omega * omega;
  KernelSplit4 k;
  k.s = {Complex(-rp.j0 / (2.0 * kPi), 0.0), 0.25 * kImag * rp.h0r};
  k.d = {Complex(-omega * j1 * cy / (2.0 * kPi), 0.0),
         0.25 * kImag * omega * cy * (rp.h1rz * z)};
  k.dstar = {Complex(omega * j1 * cx / (2.0 * kPi), 0.0),
             -0.25 * kImag * omega * cx * (rp.h1rz * z)};
  k.t = {Complex(-(w2 / (2.0 * kPi)) * (rp.j0 * cx * cy + rp.j1z * qq), 0.0),
         0.25 * kImag * w2 * (rp.h0r * cx * cy + rp.h1rz * qq)};
  return k;
}

KernelSplit kernel_split(KernelKind kind, double omega, Point2 x, Point2 y,
                         Point2 nu_x, Point2 nu_y) {
  const KernelSplit4 k = kernel_split_all(omega, x, y, nu_x, nu_y);
  switch (kind) {
    case KernelKind::S:
      return k.s;
    case KernelKind::D:
      return k.d;
    case KernelKind::Dstar:
      return k.dstar;
    case KernelKind::T:
      return k.t;
  }
  throw std::logic_error("kernel_split: bad kind");
}

KernelSplit4 kernel_split_diagonal_all(double omega) {
  const double lw = std::log(0.5 * omega) + kEulerGamma;
  const Complex h0r0(1.0, (2.0 / kPi) * lw);
  const Complex h1rz0(0.5, lw / kPi - 0.5 / kPi);
  const double w2 = omega * omega;
  KernelSplit4 k;
  k.s = {Complex(-1.0 / (2.0 * kPi), 0.0), 0.25 * kImag * h0r0};
  k.d = {Complex(0.0, 0.0), Complex(0.0, 0.0)};
  k.dstar = {Complex(0.0, 0.0), Complex(0.0, 0.0)};
  // on a smooth curve cx, cy -> 0 and q -> nu_x . nu_y = 1 at the diagonal
  k.t = {Complex(-w2 / (4.0 * kPi), 0.0), 0.25 * kImag * w2 * h1rz0};
  return k;
}

KernelSplit kernel_split_diagonal(KernelKind kind, double omega) {
  const KernelSplit4 k = kernel_split_diagonal_all(omega);
  switch (kind) {
    case KernelKind::S:
      return k.s;
    case KernelKind::D:
      return k.d;
    case KernelKind::Dstar:
      return k.dstar;
    case KernelKind::T:
      return k.t;
  }
  throw std::logic_error("kernel_split_diagonal: bad kind");
}

}  // namespace qps
