#include "qps/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace qps {
namespace {

constexpr double kPi = 3.14159265358979323846264338;

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre_p(int n, double x) {
  double pm1 = 0.0, p = 1.0;
  for (int k = 0; k < n; ++k) {
    const double pnew = ((2 * k + 1) * x * p - k * pm1) / (k + 1);
    pm1 = p;
    p = pnew;
  }
  const double dp = n * (x * p - pm1) / (x * x - 1.0);
  return {p, dp};
}

}  // namespace

QuadRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  QuadRule rule{RealVec(n), RealVec(n)};
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const auto [p, d] = legendre_p(n, x);
      dp = d;
      const double dx = p / d;
      x -= dx;
      if (std::abs(dx) < 1e-15) {
        dp = legendre_p(n, x).second;
        break;
      }
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

RealVec legendre_q(int kmax, double c) {
  if (kmax < 0) throw std::invalid_argument("legendre_q: kmax must be >= 0");
  const double ac = std::abs(c);
  if (ac == 1.0) throw std::domain_error("legendre_q: |c| = 1 is singular");
  RealVec q(kmax + 1);

  if (ac < 1.0) {
    q[0] = 0.5 * std::log((1.0 + c) / (1.0 - c));
    if (kmax >= 1) q[1] = c * q[0] - 1.0;
    for (int k = 1; k < kmax; ++k)
      q[k + 1] = ((2 * k + 1) * c * q[k] - k * q[k - 1]) / (k + 1);
    return q;
  }

  const double q0 = 0.5 * std::log1p(2.0 / (c - 1.0));
  const double a = std::acosh(ac);
  if (a < 0.15) {
    // near the endpoint the dominant solution P_k barely grows, so the
    // forward recurrence keeps full accuracy and avoids a long Miller run
    q[0] = q0;
    if (kmax >= 1) q[1] = c * q0 - 1.0;
    for (int k = 1; k < kmax; ++k)
      q[k + 1] = ((2 * k + 1) * c * q[k] - k * q[k - 1]) / (k + 1);
    return q;
  }

  // Miller: descend from well above kmax, then normalize with Q_0.
  const int M = kmax + static_cast<int>(std::ceil(40.0 / a)) + 10;
  double qk1 = 0.0;          // q_{k+1}
  double qk = 1e-200;        // q_k, arbitrary small seed
  for (int k = M; k >= 1; --k) {
    const double qkm1 = ((2 * k + 1) * c * qk - (k + 1) * qk1) / k;
    qk1 = qk;
    qk = qkm1;
    if (k - 1 <= kmax) q[k - 1] = qkm1;
  }
  const double scale = q0 / q[0];
  for (int k = 0; k <= kmax; ++k) q[k] *= scale;
  return q;
}

RealVec log_weights(const QuadRule& rule, double c) {
  const int n = static_cast<int>(rule.nodes.size());
  // moments m_k = int P_k(t) ln|t - c| dt
  RealVec m(n);
  m[0] = (1.0 - c) * std::log(std::abs(1.0 - c)) +
         (1.0 + c) * std::log(std::abs(1.0 + c)) - 2.0;
  if (n > 1) {
    const RealVec q = legendre_q(n, c);
    for (int k = 1; k < n; ++k)
      m[k] = 2.0 / (2 * k + 1) * (q[k + 1] - q[k - 1]);
  }
  // Vandermonde in the Legendre basis: rows P_k at the nodes
  RealMat P(n, n);
  for (int j = 0; j < n; ++j) {
    const double t = rule.nodes[j];
    double pm1 = 0.0, p = 1.0;
    P(0, j) = 1.0;
    for (int k = 0; k + 1 < n; ++k) {
      const double pnew = ((2 * k + 1) * t * p - k * pm1) / (k + 1);
      pm1 = p;
      p = pnew;
      P(k + 1, j) = p;
    }
  }
  return P.colPivHouseholderQr().solve(m);
}

RealVec log_weights_scaled(const QuadRule& rule, double a, double b,
                           double s0) {
  const double half = 0.5 * (b - a);
  const double c = (s0 - 0.5 * (a + b)) / half;
  const RealVec v = log_weights(rule, c);
  // ln|s - s0| = ln|t - c| + ln(half) under the affine map
  return half * (v + std::log(half) * rule.weights);
}

}  // namespace qps
