#ifndef SHADOWPROBE_KMEANS_H_
#define SHADOWPROBE_KMEANS_H_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "shadowprobe/matrix.h"
#include "shadowprobe/random.h"

namespace shadowprobe {

inline constexpr std::size_t kDefaultKMeansIters = 100;

struct KMeansModel {
  std::vector<Vector> centroids;
  std::size_t k = 0;
  bool converged = false;
  std::size_t iterations_run = 0;
  // Within-cluster sum of squared distances for the initial assignment and
  // after every iteration.
  std::vector<double> objective_trace;

  std::size_t dim() const { return centroids.empty() ? 0 : centroids[0].size(); }
  bool operator==(const KMeansModel&) const = default;
};

struct SulqParams {
  // Standard deviation of the Gaussian noise added to every aggregate.
  double sigma = 1.0;
  // Per-dimension [low, high] applied to every coordinate before it enters a
  // noisy sum. Empty means the observed range of the training points.
  std::vector<std::pair<double, double>> clamp;

  void Validate(std::size_t dim) const;
};

// Index of the nearest centroid; ties go to the lowest index.
std::size_t Assign(const KMeansModel& model, std::span<const double> x);

// Sum over points of the squared distance to the nearest centroid.
double WithinClusterObjective(const KMeansModel& model,
                              std::span<const Vector> points);

// Lloyd iterations from k distinct points sampled uniformly without
// replacement. Stops when assignments no longer change or after max_iters.
// A cluster left empty by an update is reseeded at the point farthest from
// its nearest centroid.
KMeansModel KMeansTrain(std::span<const Vector> points, std::size_t k,
                        std::size_t max_iters, RandomSource& rng);

// Same initialization and loop, but each update divides a noisy clamped sum by
// a noisy count: sum_d + N(0, sigma) over max(1, count + N(0, sigma)).
KMeansModel SulqKMeansTrain(std::span<const Vector> points, std::size_t k,
                            std::size_t max_iters, const SulqParams& params,
                            RandomSource& rng);

// Centroids sorted lexicographically, so models can be compared regardless of
// cluster numbering.
std::vector<Vector> CanonicalCentroids(const KMeansModel& model);

}  // namespace shadowprobe

#endif  // SHADOWPROBE_KMEANS_H_
