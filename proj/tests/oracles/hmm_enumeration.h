#ifndef SHADOWPROBE_TESTS_ORACLES_HMM_ENUMERATION_H_
#define SHADOWPROBE_TESTS_ORACLES_HMM_ENUMERATION_H_

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

namespace shadowprobe::oracles {

struct HmmParams {
  std::vector<std::vector<double>> trans;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> vars;
};

struct EnumerationResult {
  std::vector<std::size_t> best_path;
  double best_log_prob = -std::numeric_limits<double>::infinity();
  double log_likelihood = -std::numeric_limits<double>::infinity();
  // posteriors[t][i] = P(state_t = i | frames).
  std::vector<std::vector<double>> posteriors;
  std::size_t feasible_paths = 0;
};

inline double GaussianDensity(const std::vector<double>& mean,
                              const std::vector<double>& var,
                              const std::vector<double>& x) {
  double p = 1.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double z = x[d] - mean[d];
    p *= std::exp(-z * z / (2.0 * var[d])) / std::sqrt(2.0 * std::numbers::pi * var[d]);
  }
  return p;
}

// Walks every state sequence that starts in state 0 and ends in the last
// state, multiplying probabilities directly (no log-domain recurrences).
inline EnumerationResult EnumeratePaths(const HmmParams& hmm,
                                        const std::vector<std::vector<double>>& frames) {
  const std::size_t n = hmm.trans.size();
  const std::size_t t_len = frames.size();
  EnumerationResult r;
  r.posteriors.assign(t_len, std::vector<double>(n, 0.0));
  std::vector<std::size_t> path(t_len, 0);
  std::vector<std::pair<std::vector<std::size_t>, double>> feasible;
  double total = 0.0;
  std::size_t combos = 1;
  for (std::size_t t = 1; t < t_len; ++t) combos *= n;
  for (std::size_t code = 0; code < combos; ++code) {
    std::size_t c = code;
    path[0] = 0;
    for (std::size_t t = 1; t < t_len; ++t) {
      path[t] = c % n;
      c /= n;
    }
    if (path.back() != n - 1) continue;
    double p = GaussianDensity(hmm.means[0], hmm.vars[0], frames[0]);
    for (std::size_t t = 1; t < t_len && p > 0.0; ++t) {
      p *= hmm.trans[path[t - 1]][path[t]];
      p *= GaussianDensity(hmm.means[path[t]], hmm.vars[path[t]], frames[t]);
    }
    if (p <= 0.0) continue;
    feasible.emplace_back(path, p);
    total += p;
    const double lp = std::log(p);
    if (lp > r.best_log_prob) {
      r.best_log_prob = lp;
      r.best_path = path;
    }
  }
  r.feasible_paths = feasible.size();
  if (total > 0.0) {
    r.log_likelihood = std::log(total);
    for (const auto& [q, p] : feasible) {
      for (std::size_t t = 0; t < t_len; ++t) r.posteriors[t][q[t]] += p / total;
    }
  }
  return r;
}

}  // namespace shadowprobe::oracles

#endif  // SHADOWPROBE_TESTS_ORACLES_HMM_ENUMERATION_H_
