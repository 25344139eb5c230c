#include "shadowprobe/kmeans.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "shadowprobe/error.h"

namespace shadowprobe {
namespace {

std::size_t CheckPoints(std::span<const Vector> points, std::size_t k) {
  if (points.empty()) throw ContractError("k-means: no points");
  if (k == 0) throw ContractError("k-means: k must be >= 1");
  if (k > points.size()) {
    throw ContractError("k-means: k = " + std::to_string(k) + " exceeds " +
                        std::to_string(points.size()) + " points");
  }
  const std::size_t dim = points[0].size();
  if (dim == 0) throw ContractError("k-means: zero-dimensional points");
  for (const Vector& p : points) {
    if (p.size() != dim) throw ContractError("k-means: ragged point dimensions");
  }
  return dim;
}

std::size_t Nearest(const std::vector<Vector>& centroids,
                    std::span<const double> x, double* distance = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = SquaredDistance(centroids[c], x);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (distance) *distance = best_d;
  return best;
}

double AssignAll(const std::vector<Vector>& centroids,
                 std::span<const Vector> points,
                 std::vector<std::size_t>& assignment) {
  double objective = 0.0;
  assignment.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double d = 0.0;
    assignment[i] = Nearest(centroids, points[i], &d);
    objective += d;
  }
  return objective;
}

void ReseedEmpty(std::vector<Vector>& centroids, std::span<const Vector> points,
                 const std::vector<std::size_t>& counts) {
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double d = 0.0;
      Nearest(centroids, points[i], &d);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    centroids[c] = points[far];
  }
}

struct ExactUpdate {
  void operator()(std::vector<Vector>& centroids, std::span<const Vector> points,
                  const std::vector<std::size_t>& assignment) const {
    const std::size_t dim = points[0].size();
    std::vector<Vector> sums(centroids.size(), Vector(dim, 0.0));
    std::vector<std::size_t> counts(centroids.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::size_t c = assignment[i];
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) {
        centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
      }
    }
    ReseedEmpty(centroids, points, counts);
  }
};

struct NoisyUpdate {
  const SulqParams* params;
  RandomSource* rng;

  void operator()(std::vector<Vector>& centroids, std::span<const Vector> points,
                  const std::vector<std::size_t>& assignment) const {
    const std::size_t dim = points[0].size();
    std::vector<Vector> sums(centroids.size(), Vector(dim, 0.0));
    std::vector<std::size_t> counts(centroids.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::size_t c = assignment[i];
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) {
        const auto [lo, hi] = params->clamp[d];
        sums[c][d] += std::clamp(points[i][d], lo, hi);
      }
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (counts[c] == 0) continue;
      Vector noisy(dim);
      for (std::size_t d = 0; d < dim; ++d) {
        noisy[d] = sums[c][d] + rng->Normal(0.0, params->sigma);
      }
      const double count = std::max(
          1.0, static_cast<double>(counts[c]) + rng->Normal(0.0, params->sigma));
      for (std::size_t d = 0; d < dim; ++d) centroids[c][d] = noisy[d] / count;
    }
    ReseedEmpty(centroids, points, counts);
  }
};

template <typename Update>
KMeansModel Lloyd(std::span<const Vector> points, std::size_t k,
                  std::size_t max_iters, RandomSource& rng, const Update& update,
                  bool check_monotone) {
  KMeansModel model;
  model.k = k;
  for (std::size_t idx : rng.SampleWithoutReplacement(points.size(), k)) {
    model.centroids.push_back(points[idx]);
  }
  std::vector<std::size_t> assignment;
  std::vector<std::size_t> next;
  model.objective_trace.push_back(AssignAll(model.centroids, points, assignment));
  for (std::size_t it = 1; it <= max_iters; ++it) {
    update(model.centroids, points, assignment);
    const double objective = AssignAll(model.centroids, points, next);
    model.iterations_run = it;
    const double previous = model.objective_trace.back();
    if (check_monotone &&
        objective > previous + 1e-9 * std::max(1.0, std::abs(previous))) {
      throw InvariantViolation("k-means: within-cluster objective increased");
    }
    model.objective_trace.push_back(objective);
    const bool stable = next == assignment;
    assignment.swap(next);
    if (stable) {
      model.converged = true;
      break;
    }
  }
  return model;
}

}  // namespace

void SulqParams::Validate(std::size_t dim) const {
  if (!(sigma > 0.0)) throw ContractError("SuLQ: sigma must be > 0");
  if (!clamp.empty() && clamp.size() != dim) {
    throw ContractError("SuLQ: clamp must have one range per dimension");
  }
  for (const auto& [lo, hi] : clamp) {
    if (!(lo < hi)) throw ContractError("SuLQ: clamp low must be < high");
  }
}

std::size_t Assign(const KMeansModel& model, std::span<const double> x) {
  if (model.centroids.empty()) throw ContractError("Assign: empty model");
  if (x.size() != model.dim()) {
    throw ContractError("Assign: dimension " + std::to_string(x.size()) +
                        " does not match model " + std::to_string(model.dim()));
  }
  return Nearest(model.centroids, x);
}

double WithinClusterObjective(const KMeansModel& model,
                              std::span<const Vector> points) {
  std::vector<std::size_t> assignment;
  for (const Vector& p : points) {
    if (p.size() != model.dim()) throw ContractError("objective: dimension mismatch");
  }
  return AssignAll(model.centroids, points, assignment);
}

KMeansModel KMeansTrain(std::span<const Vector> points, std::size_t k,
                        std::size_t max_iters, RandomSource& rng) {
  CheckPoints(points, k);
  return Lloyd(points, k, max_iters, rng, ExactUpdate{}, true);
}

KMeansModel SulqKMeansTrain(std::span<const Vector> points, std::size_t k,
                            std::size_t max_iters, const SulqParams& params,
                            RandomSource& rng) {
  const std::size_t dim = CheckPoints(points, k);
  params.Validate(dim);
  SulqParams resolved = params;
  if (resolved.clamp.empty()) {
    for (std::size_t d = 0; d < dim; ++d) {
      double lo = points[0][d];
      double hi = points[0][d];
      for (const Vector& p : points) {
        lo = std::min(lo, p[d]);
        hi = std::max(hi, p[d]);
      }
      if (!(lo < hi)) hi = lo + 1.0;
      resolved.clamp.emplace_back(lo, hi);
    }
  }
  return Lloyd(points, k, max_iters, rng, NoisyUpdate{&resolved, &rng}, false);
}

std::vector<Vector> CanonicalCentroids(const KMeansModel& model) {
  std::vector<Vector> sorted = model.centroids;
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

}  // namespace shadowprobe
