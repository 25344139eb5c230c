#ifndef SHADOWPROBE_TESTS_ORACLES_SVM_DUAL_H_
#define SHADOWPROBE_TESTS_ORACLES_SVM_DUAL_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace shadowprobe::oracles {

using KernelFn = std::function<double(const std::vector<double>&, const std::vector<double>&)>;

struct DualSolution {
  std::vector<double> alpha;
  double objective = 0.0;
  std::size_t iterations = 0;
};

inline double DualValue(const std::vector<double>& a, const std::vector<std::vector<double>>& q) {
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    lin += a[i];
    for (std::size_t j = 0; j < a.size(); ++j) quad += a[i] * a[j] * q[i][j];
  }
  return lin - 0.5 * quad;
}

// Euclidean projection onto {0 <= a <= c, sum a_i y_i = 0}: a_i(l) =
// clip(v_i - l y_i) is monotone in l, so l is found by bisection.
inline std::vector<double> ProjectFeasible(const std::vector<double>& v, const std::vector<int>& y,
                                           double c) {
  auto at = [&](double l) {
    std::vector<double> a(v.size());
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      a[i] = std::clamp(v[i] - l * y[i], 0.0, c);
      s += a[i] * y[i];
    }
    return std::pair{a, s};
  };
  double lo = -1.0, hi = 1.0;
  while (at(lo).second < 0.0) lo *= 2.0;
  while (at(hi).second > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (at(mid).second > 0.0 ? lo : hi) = mid;
  }
  return at(0.5 * (lo + hi)).first;
}

// Accelerated projected gradient ascent on the SVM dual with adaptive
// restart. Stops once the gradient mapping at the iterate, |a - P(a + s g)| / s,
// falls below `residual_tol`. Plain steps are always accepted, so rounding
// noise in the objective cannot stall the iteration.
inline DualSolution SolveDual(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                              const KernelFn& kernel, double c, std::size_t max_iters = 2000000,
                              double residual_tol = 1e-9) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> q(n, std::vector<double>(n));
  double lipschitz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      q[i][j] = y[i] * y[j] * kernel(x[i], x[j]);
      row += std::fabs(q[i][j]);
    }
    lipschitz = std::max(lipschitz, row);
  }
  const double step = 1.0 / lipschitz;
  auto ascend = [&](const std::vector<double>& from) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      double g = 1.0;
      for (std::size_t j = 0; j < n; ++j) g -= q[i][j] * from[j];
      v[i] = from[i] + step * g;
    }
    return ProjectFeasible(v, y, c);
  };
  std::vector<double> a(n, 0.0), prev = a, z = a;
  double t = 1.0;
  double value = DualValue(a, q);
  DualSolution s;
  for (std::size_t it = 0; it < max_iters; ++it) {
    s.iterations = it + 1;
    if (it % 50 == 0) {
      const std::vector<double> mapped = ascend(a);
      double residual = 0.0;
      for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::fabs(mapped[i] - a[i]));
      if (residual / step < residual_tol) break;
    }
    prev = a;
    a = ascend(z);
    const double next_value = DualValue(a, q);
    if (next_value < value && t > 1.0) {
      // Momentum overshot: restart from the last iterate.
      t = 1.0;
      z = prev;
      a = prev;
      continue;
    }
    value = next_value;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < n; ++i) z[i] = a[i] + (t - 1.0) / t_next * (a[i] - prev[i]);
    t = t_next;
  }
  s.alpha = a;
  s.objective = DualValue(a, q);
  return s;
}

}  // namespace shadowprobe::oracles

#endif  // SHADOWPROBE_TESTS_ORACLES_SVM_DUAL_H_
