#include "qps/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include "qps/quadrature.hpp"

namespace qps {
namespace {

Complex pick(const KernelValues4& k, KernelKind kind) {
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
  throw std::logic_error("bad kernel kind");
}

const QuadRule& panel_rule() {
  static const QuadRule rule = gauss_legendre(16);
  return rule;
}

std::int64_t pair_key(int i, int j, int n) {
  return static_cast<std::int64_t>(i) * n + j;
}

// Difference of the two split kernels recombined with ln r; valid for
// r > 0. The omega-independent singular parts cancel exactly.
KernelValues4 difference_values(double wt, double wb, Point2 x, Point2 y,
                                Point2 nux, Point2 nuy) {
  const KernelSplit4 a = kernel_split_all(wt, x, y, nux, nuy);
  const KernelSplit4 b = kernel_split_all(wb, x, y, nux, nuy);
  const double lr = std::log(norm(x - y));
  KernelValues4 k;
  k.s = (a.s.log_coeff - b.s.log_coeff) * lr + (a.s.smooth - b.s.smooth);
  k.d = (a.d.log_coeff - b.d.log_coeff) * lr + (a.d.smooth - b.d.smooth);
  k.dstar = (a.dstar.log_coeff - b.dstar.log_coeff) * lr +
            (a.dstar.smooth - b.dstar.smooth);
  k.t = (a.t.log_coeff - b.t.log_coeff) * lr + (a.t.smooth - b.t.smooth);
  return k;
}

}  // namespace

Mat potential_matrix(KernelKind kind, double omega,
                     const std::vector<Point2>& targets,
                     const std::vector<Point2>& target_normals,
                     const Discretization& src, int shift) {
  const int nt = static_cast<int>(targets.size());
  const int ns = src.size();
  const double dx = shift * src.period;
  Mat out(nt, ns);
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < nt; ++i) {
    const Point2 nux =
        target_normals.empty() ? Point2{0.0, 0.0} : target_normals[i];
    for (int j = 0; j < ns; ++j) {
      const Point2 y{src.nodes[j].x + dx, src.nodes[j].y};
      const KernelValues4 k =
          kernel_values_all(omega, targets[i], y, nux, src.normals[j]);
      out(i, j) = pick(k, kind) * std::sqrt(src.weights[j]);
    }
  }
  return out;
}

Mat pattern_block(double omega, const std::vector<Point2>& targets,
                  const std::vector<Point2>& target_normals,
                  const Discretization& src, int shift, double sign) {
  const int nt = static_cast<int>(targets.size());
  const int ns = src.size();
  const double dx = shift * src.period;
  Mat out(2 * nt, 2 * ns);
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j < ns; ++j) {
      const Point2 y{src.nodes[j].x + dx, src.nodes[j].y};
      const KernelValues4 k = kernel_values_all(omega, targets[i], y,
                                                target_normals[i],
                                                src.normals[j]);
      const double sw = sign * std::sqrt(src.weights[j]);
      out(2 * i, 2 * j) = k.d * sw;
      out(2 * i, 2 * j + 1) = k.s * sw;
      out(2 * i + 1, 2 * j) = k.t * sw;
      out(2 * i + 1, 2 * j + 1) = k.dstar * sw;
    }
  }
  return out;
}

DifferenceBlock::DifferenceBlock(const Discretization& src, double omega_top,
                                 double omega_bot, int shift)
    : src_(&src), wt_(omega_top), wb_(omega_bot), shift_(shift) {
  const int n = src.size();
  const double dx = shift * src.period;
  const QuadRule& rule = panel_rule();

  // collect (target node, near source panel) tasks
  struct Task {
    int i;
    int panel;
  };
  std::vector<Task> tasks;
  for (int i = 0; i < n; ++i) {
    const double ti = src.params[i];
    const double lt = src.panel_of(i).t1 - src.panel_of(i).t0;
    for (int p = 0; p < static_cast<int>(src.panels.size()); ++p) {
      const double a = src.panels[p].t0 + shift;
      const double b = src.panels[p].t1 + shift;
      const double dist = std::max({a - ti, ti - b, 0.0});
      if (dist <= std::max(lt, b - a)) tasks.push_back({i, p});
    }
  }

  std::vector<std::vector<std::pair<std::int64_t, KernelValues4>>> results(
      tasks.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (size_t t = 0; t < tasks.size(); ++t) {
    const int i = tasks[t].i;
    const auto& pan = src.panels[tasks[t].panel];
    const double a = pan.t0 + shift, b = pan.t1 + shift;
    const double ti = src.params[i];
    const RealVec v = log_weights_scaled(rule, a, b, ti);
    for (int q = 0; q < 16; ++q) {
      const int j = pan.begin + q;
      const Point2 y{src.nodes[j].x + dx, src.nodes[j].y};
      const bool diag = (i == j && shift == 0);
      const KernelSplit4 ka = diag ? kernel_split_diagonal_all(wt_)
                                   : kernel_split_all(wt_, src_->nodes[i], y,
                                                      src_->normals[i],
                                                      src_->normals[j]);
      const KernelSplit4 kb = diag ? kernel_split_diagonal_all(wb_)
                                   : kernel_split_all(wb_, src_->nodes[i], y,
                                                      src_->normals[i],
                                                      src_->normals[j]);
      // smooth-ratio factor ln(|x-y| / |t_j - t_i|); speed at the diagonal
      const double ratio =
          diag ? src.speeds[i]
               : norm(src.nodes[i] - y) / std::abs(src.params[j] + shift - ti);
      const double wq = src.weights[j];
      const double vq = v[q] * src.speeds[j];
      const auto corrected = [&](const KernelSplit& s1, const KernelSplit& s2) {
        const Complex dA = s1.log_coeff - s2.log_coeff;
        const Complex dB = s1.smooth - s2.smooth;
        return dB * wq + dA * (std::log(ratio) * wq + vq);
      };
      KernelValues4 c;
      c.s = corrected(ka.s, kb.s);
      c.d = corrected(ka.d, kb.d);
      c.dstar = corrected(ka.dstar, kb.dstar);
      c.t = corrected(ka.t, kb.t);
      results[t].push_back({pair_key(i, j, n), c});
    }
  }
  near_.reserve(tasks.size() * 16);
  for (const auto& chunk : results)
    for (const auto& [key, val] : chunk) near_[key] = val;
}

Complex DifferenceBlock::entry(int row, int col) const {
  const int n = src_->size();
  const int i = row / 2, j = col / 2;
  const bool flux_row = row % 2;
  const bool tau_col = col % 2;
  const double sw = std::sqrt(src_->weights[i] / src_->weights[j]);
  Complex val;
  const auto it = near_.find(pair_key(i, j, n));
  if (it != near_.end()) {
    // corrected quadrature contribution already includes w_j
    const KernelValues4& k = it->second;
    val = sw * (flux_row ? (tau_col ? k.dstar : k.t)
                         : (tau_col ? k.s : k.d));
  } else {
    const Point2 y{src_->nodes[j].x + shift_ * src_->period, src_->nodes[j].y};
    const KernelValues4 k = difference_values(
        wt_, wb_, src_->nodes[i], y, src_->normals[i], src_->normals[j]);
    const double ww = std::sqrt(src_->weights[i] * src_->weights[j]);
    val = ww * (flux_row ? (tau_col ? k.dstar : k.t)
                         : (tau_col ? k.s : k.d));
  }
  if (shift_ == 0 && row == col) val += flux_row ? 1.0 : -1.0;
  return val;
}

Mat DifferenceBlock::dense() const {
  const int n = src_->size();
  Mat out(2 * n, 2 * n);
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto it = near_.find(pair_key(i, j, n));
      KernelValues4 k;
      double scale;
      if (it != near_.end()) {
        k = it->second;
        scale = std::sqrt(src_->weights[i] / src_->weights[j]);
      } else {
        const Point2 y{src_->nodes[j].x + shift_ * src_->period,
                       src_->nodes[j].y};
        k = difference_values(wt_, wb_, src_->nodes[i], y, src_->normals[i],
                              src_->normals[j]);
        scale = std::sqrt(src_->weights[i] * src_->weights[j]);
      }
      out(2 * i, 2 * j) = scale * k.d;
      out(2 * i, 2 * j + 1) = scale * k.s;
      out(2 * i + 1, 2 * j) = scale * k.t;
      out(2 * i + 1, 2 * j + 1) = scale * k.dstar;
    }
    if (shift_ == 0) {
      out(2 * i, 2 * i) -= 1.0;
      out(2 * i + 1, 2 * i + 1) += 1.0;
    }
  }
  return out;
}

Mat DifferenceBlock::submatrix(const std::vector<int>& rows,
                               const std::vector<int>& cols) const {
  Mat out(rows.size(), cols.size());
#pragma omp parallel for schedule(dynamic, 16) if (rows.size() > 32)
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < cols.size(); ++c)
      out(r, c) = entry(rows[r], cols[c]);
  return out;
}

Mat self_difference_block(const Discretization& src, double omega_top,
                          double omega_bot) {
  return DifferenceBlock(src, omega_top, omega_bot, 0).dense();
}

Mat neighbor_difference_block(const Discretization& src, double omega_top,
                              double omega_bot, int shift) {
  if (shift != 1 && shift != -1)
    throw std::invalid_argument("neighbor_difference_block: shift must be +-1");
  return DifferenceBlock(src, omega_top, omega_bot, shift).dense();
}

Mat proxy_basis_matrix(const ProxyCircle& circle, double omega,
                       const std::vector<Point2>& targets,
                       const std::vector<Point2>& target_normals,
                       bool with_normal_derivative) {
  const int nt = static_cast<int>(targets.size());
  const int np = static_cast<int>(circle.points.size());
  Mat out(nt, np);
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < nt; ++i) {
    const Point2 nux = with_normal_derivative ? target_normals[i]
                                              : Point2{0.0, 0.0};
    for (int j = 0; j < np; ++j) {
      const KernelValues4 k = kernel_values_all(
          omega, targets[i], circle.points[j], nux, circle.normals[j]);
      out(i, j) = with_normal_derivative ? k.t + kImag * omega * k.dstar
                                         : k.d + kImag * omega * k.s;
    }
  }
  return out;
}

}  // namespace qps
