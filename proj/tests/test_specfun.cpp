#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "qps/specfun.hpp"
#include "qps/stats.hpp"

using qps::Complex;
using qps::KernelKind;
using qps::Point2;

namespace {

constexpr double kPi = 3.14159265358979323846264338;

struct Ref {
  double x, j0, y0, j1, y1;
};

// Reference values computed with 50-digit arithmetic (mpmath) and frozen.
// Points straddle the series/continued-fraction/asymptotic handoffs at
// x = 8 and x = 17; the last entry is the first zero of J1.
const std::vector<Ref> kRef = {
    {0.001, 0.999999750000015625, -4.47141661137592326, 0.000499999937500002615, -636.622167231139415},
    {0.01, 0.999975000156249566, -3.00545563708364594, 0.00499993750026041623, -63.678596282060655},
    {0.1, 0.997501562066040032, -1.53423865135036681, 0.0499375260362420003, -6.45895109470202664},
    {0.5, 0.938469807240812904, -0.444518733506706557, 0.242268457674873886, -1.47147239267024307},
    {1.0, 0.765197686557966551, 0.088256964215676958, 0.440050585744933516, -0.781212821300288717},
    {2.0, 0.223890779141235668, 0.51037567264974512, 0.576724807756873387, -0.107032431540937547},
    {4.0, -0.397149809863847372, -0.0169407393250649919, -0.0660433280235491361, 0.397925710557100005},
    {7.5, 0.266339657880378397, 0.117313286148208631, 0.135248427579705505, -0.259128510486116252},
    {7.9, 0.19436184484127824, 0.206520948144375769, 0.219179399921751203, -0.181721077280573128},
    {8.1, 0.14751745404437767, 0.238091328702234809, 0.247607766981592877, -0.133148795952495926},
    {9.0, -0.0903336111828761343, 0.249936698285024676, 0.245311786573325272, 0.104314575196715888},
    {12.0, 0.0476893107968335366, -0.225237312634361434, -0.223447104490627612, -0.0570992182608965211},
    {16.9, -0.178783387891219217, -0.0754315475558028469, -0.08074925425014197, 0.176631443090127178},
    {17.1, -0.159285331532265307, -0.108819047300429989, -0.113518848291435135, 0.156173913148364855},
    {20.0, 0.167024664340583155, 0.0626405968093838312, 0.0668331241758500456, -0.165511614362521296},
    {50.0, 0.055812327669251815, -0.098064995470077079, -0.0975118281251751377, -0.0567956685620147679},
    {100.0, 0.0199858503042231224, -0.0772443133650831523, -0.077145352014112158, -0.0203723120027597933},
    {500.0, -0.0341005568807319983, 0.0105067087398313741, 0.0104726134703722928, 0.0341110806291371359},
    {1000.0, 0.0247866861524201746, 0.0047159179776228134, 0.00472831190708952392, -0.0247843312923517789},
    {5000.0, -0.00664898425144834789, -0.00911674076964396263, -0.00911740571364615948, 0.00664807261062541942},
    {10000.0, -0.00709616035338880148, 0.00364780555898660589, 0.00364745075552958034, 0.00709634275253649514},
    {3.8317059702075125, -0.402759395702552972, 0.0513976730994109, -6.14980735699490609e-17, 0.412517395158825759},
};

// Central second differences of the Green's function on a 5-point stencil.
Complex fd_laplacian(double omega, Point2 x, Point2 y, double h) {
  const Complex c = qps::greens(omega, x, y);
  const Complex xp = qps::greens(omega, {x.x + h, x.y}, y);
  const Complex xm = qps::greens(omega, {x.x - h, x.y}, y);
  const Complex yp = qps::greens(omega, {x.x, x.y + h}, y);
  const Complex ym = qps::greens(omega, {x.x, x.y - h}, y);
  return (xp + xm + yp + ym - 4.0 * c) / (h * h);
}

Complex dir_deriv_x(double omega, Point2 x, Point2 y, Point2 nu, double h) {
  const Complex p = qps::greens(omega, {x.x + h * nu.x, x.y + h * nu.y}, y);
  const Complex m = qps::greens(omega, {x.x - h * nu.x, x.y - h * nu.y}, y);
  return (p - m) / (2.0 * h);
}

Complex dir_deriv_y(double omega, Point2 x, Point2 y, Point2 nu, double h) {
  const Complex p = qps::greens(omega, x, {y.x + h * nu.x, y.y + h * nu.y});
  const Complex m = qps::greens(omega, x, {y.x - h * nu.x, y.y - h * nu.y});
  return (p - m) / (2.0 * h);
}

// The omega-independent singular parts that kernel_split omits.
Complex omitted_singular(KernelKind kind, Point2 x, Point2 y, Point2 nu_x,
                         Point2 nu_y) {
  const Point2 rv = x - y;
  const double r = norm(rv);
  switch (kind) {
    case KernelKind::S:
      return 0.0;
    case KernelKind::D:
      return dot(nu_y, rv) / r / (2.0 * kPi * r);
    case KernelKind::Dstar:
      return -dot(nu_x, rv) / r / (2.0 * kPi * r);
    case KernelKind::T: {
      const double cx = dot(nu_x, rv) / r;
      const double cy = dot(nu_y, rv) / r;
      return (dot(nu_x, nu_y) - 2.0 * cx * cy) / (2.0 * kPi * r * r);
    }
  }
  return 0.0;
}

}  // namespace

TEST_CASE("hankel01 matches high-precision references to 1e-13") {
  for (const Ref& r : kRef) {
    const auto [h0, h1] = qps::hankel01(r.x);
    const Complex e0 = h0 - Complex(r.j0, r.y0);
    const Complex e1 = h1 - Complex(r.j1, r.y1);
    CAPTURE(r.x);
    CHECK(std::abs(e0) / std::abs(Complex(r.j0, r.y0)) <= 1e-13);
    CHECK(std::abs(e1) / std::abs(Complex(r.j1, r.y1)) <= 1e-13);
  }
}

TEST_CASE("Wronskian J1 Y0 - J0 Y1 = 2/(pi x)") {
  for (double lx = -3.0; lx <= 3.0; lx += 0.03125) {
    const double x = std::pow(10.0, lx);
    const qps::Bessel01 b = qps::bessel01(x);
    const double w = b.j1 * b.y0 - b.j0 * b.y1;
    const double expect = 2.0 / (kPi * x);
    CAPTURE(x);
    CHECK(std::abs(w - expect) / expect <= 1e-12);
  }
}

TEST_CASE("pinned H0(1) and Green's function values") {
  const auto [h0, h1] = qps::hankel01(1.0);
  CHECK(h0.real() == doctest::Approx(0.7651976866).epsilon(1e-9));
  CHECK(h0.imag() == doctest::Approx(0.0882569642).epsilon(1e-9));
  const Complex g = qps::greens(1.0, {0.0, 0.0}, {1.0, 0.0});
  CHECK(g.real() == doctest::Approx(-0.0220642411).epsilon(1e-8));
  CHECK(g.imag() == doctest::Approx(0.1912994217).epsilon(1e-8));
  CHECK(std::abs(h1) > 0.0);
  CHECK_THROWS_AS(qps::bessel01(0.0), std::domain_error);
  CHECK_THROWS_AS(qps::bessel01(-1.0), std::domain_error);
}

TEST_CASE("Green's function satisfies the Helmholtz equation") {
  const Point2 y{0.3, -0.1};
  for (double omega : {0.7, 2.5, 11.0}) {
    for (Point2 x : {Point2{1.1, 0.4}, Point2{-0.5, 1.9}}) {
      const double h = 1e-4;
      const Complex lap = fd_laplacian(omega, x, y, h);
      const Complex res = lap + omega * omega * qps::greens(omega, x, y);
      CAPTURE(omega);
      // O(h^2) stencil error dominates; scale tolerance with omega^4 h^2
      CHECK(std::abs(res) <= 5e-4 * (1.0 + std::pow(omega, 4)));
    }
  }
}

TEST_CASE("kernel_values matches finite differences of greens") {
  const double omega = 1.8;
  const Point2 x{0.9, 0.2}, y{-0.3, -0.4};
  const Point2 nx{0.6, 0.8}, ny{-0.8, 0.6};
  const double h = 1e-5;

  const Complex d = qps::kernel_values(KernelKind::D, omega, x, y, nx, ny);
  CHECK(std::abs(d - dir_deriv_y(omega, x, y, ny, h)) <= 1e-9);

  const Complex ds = qps::kernel_values(KernelKind::Dstar, omega, x, y, nx, ny);
  CHECK(std::abs(ds - dir_deriv_x(omega, x, y, nx, h)) <= 1e-9);

  // T via nested central differences in the target direction of D
  const auto dk = [&](Point2 xx) {
    return qps::kernel_values(KernelKind::D, omega, xx, y, nx, ny);
  };
  const Complex tp = dk({x.x + h * nx.x, x.y + h * nx.y});
  const Complex tm = dk({x.x - h * nx.x, x.y - h * nx.y});
  const Complex t = qps::kernel_values(KernelKind::T, omega, x, y, nx, ny);
  CHECK(std::abs(t - (tp - tm) / (2.0 * h)) <= 1e-8);

  const Complex s = qps::kernel_values(KernelKind::S, omega, x, y, nx, ny);
  CHECK(std::abs(s - qps::greens(omega, x, y)) == 0.0);
}

TEST_CASE("kernel_split recombines to the full kernel") {
  const Point2 x{0.05, 0.12}, nx{0.28, 0.96}, ny{-0.6, 0.8};
  for (double omega : {0.9, 6.3}) {
    for (double r : {1e-6, 1e-3, 0.3, 2.0}) {
      const Point2 y{x.x - r * 0.6, x.y - r * 0.8};
      for (KernelKind k :
           {KernelKind::S, KernelKind::D, KernelKind::Dstar, KernelKind::T}) {
        const auto sp = qps::kernel_split(k, omega, x, y, nx, ny);
        const Complex rebuilt = sp.log_coeff * std::log(r) + sp.smooth +
                                omitted_singular(k, x, y, nx, ny);
        const Complex full = qps::kernel_values(k, omega, x, y, nx, ny);
        CAPTURE(omega);
        CAPTURE(r);
        CAPTURE(static_cast<int>(k));
        const double scale = std::max(std::abs(full), 1.0);
        CHECK(std::abs(rebuilt - full) / scale <= 1e-12);
      }
    }
  }
}

TEST_CASE("difference kernels stay finite and consistent as r -> 0") {
  // K_{w1} - K_{w2} on the same curve: singular parts cancel identically,
  // so the split reconstruction must agree for arbitrarily small r.
  const double w1 = 2.0, w2 = 3.7;
  const Point2 x{0.0, 0.0}, nu{0.0, 1.0};
  for (double r : {1e-9, 1e-5, 1e-2}) {
    const Point2 y{r, 0.0};  // flat-boundary geometry, nu_x == nu_y
    for (KernelKind k :
         {KernelKind::S, KernelKind::D, KernelKind::Dstar, KernelKind::T}) {
      const auto s1 = qps::kernel_split(k, w1, x, y, nu, nu);
      const auto s2 = qps::kernel_split(k, w2, x, y, nu, nu);
      const Complex diff =
          (s1.log_coeff - s2.log_coeff) * std::log(r) + (s1.smooth - s2.smooth);
      CHECK(std::isfinite(diff.real()));
      CHECK(std::isfinite(diff.imag()));
      if (r >= 1e-5) {
        const Complex k1 = qps::kernel_values(k, w1, x, y, nu, nu);
        const Complex k2 = qps::kernel_values(k, w2, x, y, nu, nu);
        // the direct difference cancels catastrophically for small r;
        // its own error floor is eps * |K|, which sets the tolerance
        const double tol = 1e-12 * (std::abs(k1) + std::abs(k2) + 1.0);
        CAPTURE(r);
        CAPTURE(static_cast<int>(k));
        CHECK(std::abs(diff - (k1 - k2)) <= tol);
      }
    }
  }
}

TEST_CASE("kernel_split_diagonal is the r -> 0 limit on a flat boundary") {
  const double omega = 1.3;
  const Point2 x{0.0, 0.0}, nu{0.0, 1.0};
  for (KernelKind k :
       {KernelKind::S, KernelKind::D, KernelKind::Dstar, KernelKind::T}) {
    const auto lim = qps::kernel_split_diagonal(k, omega);
    const auto near = qps::kernel_split(k, omega, x, {1e-7, 0.0}, nu, nu);
    CAPTURE(static_cast<int>(k));
    CHECK(std::abs(near.log_coeff - lim.log_coeff) <= 1e-10);
    CHECK(std::abs(near.smooth - lim.smooth) <= 1e-10);
  }
  // S diagonal difference reproduces -ln(w1/w2)/(2 pi), purely real
  const auto a = qps::kernel_split_diagonal(KernelKind::S, 2.0);
  const auto b = qps::kernel_split_diagonal(KernelKind::S, 5.0);
  const Complex d = a.smooth - b.smooth;
  CHECK(d.real() ==
        doctest::Approx(-std::log(2.0 / 5.0) / (2.0 * kPi)).epsilon(1e-12));
  CHECK(std::abs(d.imag()) <= 1e-15);
}

TEST_CASE("kernel evaluation counter advances") {
  qps::stats::reset_kernel_evals();
  (void)qps::hankel01(1.0);
  (void)qps::greens(2.0, {0.0, 0.0}, {1.0, 0.0});
  CHECK(qps::stats::kernel_eval_count() == 2);
}
