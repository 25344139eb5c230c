#include "shadowprobe/kmeans.h"

#include <cmath>

#include <gtest/gtest.h>

#include "kmeans_enumeration.h"
#include "shadowprobe/attack.h"
#include "shadowprobe/error.h"

namespace shadowprobe {
namespace {

std::vector<Vector> RandomPoints(std::size_t n, std::size_t dim, RandomSource& rng) {
  std::vector<Vector> pts(n, Vector(dim));
  for (auto& p : pts) {
    for (double& v : p) v = rng.Uniform(-5, 5);
  }
  return pts;
}

std::vector<Vector> TwoBlobs(std::size_t n, RandomSource& rng) {
  std::vector<Vector> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = i % 2 ? 10.0 : -10.0;
    pts.push_back({rng.Normal(c, 1.0), rng.Normal(c, 1.0)});
  }
  return pts;
}

TEST(KMeansTrainTest, KEqualsPointCountGivesZeroObjective) {
  RandomSource rng(1);
  const auto pts = RandomPoints(6, 2, rng);
  const KMeansModel m = KMeansTrain(pts, 6, 50, rng);
  EXPECT_EQ(WithinClusterObjective(m, pts), 0.0);
}

TEST(KMeansTrainTest, SingleClusterIsGlobalMean) {
  RandomSource rng(2);
  const auto pts = RandomPoints(40, 3, rng);
  const KMeansModel m = KMeansTrain(pts, 1, 50, rng);
  for (std::size_t d = 0; d < 3; ++d) {
    double s = 0.0;
    for (const auto& p : pts) s += p[d];
    EXPECT_NEAR(m.centroids[0][d], s / 40.0, 1e-12);
  }
  EXPECT_TRUE(m.converged);
}

TEST(KMeansTrainTest, SomeRestartReachesTheEnumerationOptimum) {
  for (std::uint64_t set = 1; set <= 5; ++set) {
    RandomSource gen(set);
    const auto pts = RandomPoints(8, 2, gen);
    const double optimum = oracles::OptimalKMeansObjective(pts, 2);
    bool hit = false;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      RandomSource rng(seed);
      const KMeansModel m = KMeansTrain(pts, 2, 100, rng);
      const double obj = WithinClusterObjective(m, pts);
      EXPECT_GE(obj, optimum - 1e-9);
      hit = hit || std::fabs(obj - optimum) < 1e-9;
    }
    EXPECT_TRUE(hit) << "point set " << set;
  }
}

TEST(KMeansTrainTest, ObjectiveTraceIsNonIncreasing) {
  RandomSource rng(3);
  const auto pts = RandomPoints(200, 2, rng);
  const KMeansModel m = KMeansTrain(pts, 5, 100, rng);
  for (std::size_t i = 1; i < m.objective_trace.size(); ++i) {
    EXPECT_LE(m.objective_trace[i], m.objective_trace[i - 1] + 1e-9);
  }
}

TEST(AssignTest, ExactCentroidAndTies) {
  KMeansModel m;
  m.k = 4;
  m.centroids = {{-1.0, 0.0}, {1.0, 0.0}, {5.0, 5.0}, {9.0, 9.0}};
  EXPECT_EQ(Assign(m, Vector{9.0, 9.0}), 3u);
  EXPECT_EQ(Assign(m, Vector{0.0, 0.0}), 0u);
  EXPECT_THROW(Assign(m, Vector{1.0}), ContractError);
}

TEST(AssignTest, MatchesLinearScan) {
  RandomSource rng(4);
  KMeansModel m;
  m.centroids = RandomPoints(7, 3, rng);
  m.k = 7;
  for (const auto& p : RandomPoints(200, 3, rng)) {
    EXPECT_EQ(Assign(m, p), oracles::LinearScanAssign(m.centroids, p));
  }
}

TEST(SulqKMeansTest, VanishingNoiseMatchesNoiseless) {
  RandomSource gen(5);
  const auto pts = RandomPoints(300, 2, gen);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RandomSource a(seed), b(seed);
    const KMeansModel plain = KMeansTrain(pts, 3, 100, a);
    SulqParams p;
    p.sigma = 1e-12;
    const KMeansModel noisy = SulqKMeansTrain(pts, 3, 100, p, b);
    ASSERT_EQ(plain.centroids.size(), noisy.centroids.size());
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t d = 0; d < 2; ++d) EXPECT_NEAR(plain.centroids[j][d], noisy.centroids[j][d], 1e-6);
    }
  }
}

TEST(SulqKMeansTest, UnitNoiseDisplacementIsSmall) {
  int within = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomSource gen(1000 + seed);
    const auto pts = TwoBlobs(1000, gen);
    RandomSource a(seed), b(seed);
    const KMeansModel plain = KMeansTrain(pts, 2, 100, a);
    const KMeansModel noisy = SulqKMeansTrain(pts, 2, 100, {}, b);
    within += MatchedCentroidDistance(plain.centroids, noisy.centroids) <= 0.5;
  }
  EXPECT_GE(within, 95);
}

TEST(SulqKMeansTest, SameSeedSameModel) {
  RandomSource gen(6);
  const auto pts = RandomPoints(100, 2, gen);
  RandomSource a(3), b(3);
  EXPECT_EQ(SulqKMeansTrain(pts, 3, 100, {}, a), SulqKMeansTrain(pts, 3, 100, {}, b));
}

TEST(SulqKMeansTest, RejectsBadParameters) {
  RandomSource rng(7);
  const auto pts = RandomPoints(10, 2, rng);
  SulqParams p;
  p.sigma = -1.0;
  EXPECT_THROW(SulqKMeansTrain(pts, 2, 10, p, rng), ContractError);
  p.sigma = 1.0;
  p.clamp = {{0.0, 1.0}};
  EXPECT_THROW(SulqKMeansTrain(pts, 2, 10, p, rng), ContractError);
  EXPECT_THROW(KMeansTrain(pts, 11, 10, rng), ContractError);
}

TEST(CanonicalCentroidsTest, SortsLexicographically) {
  KMeansModel m;
  m.centroids = {{2.0, 0.0}, {1.0, 5.0}, {1.0, 2.0}};
  EXPECT_EQ(CanonicalCentroids(m), (std::vector<Vector>{{1.0, 2.0}, {1.0, 5.0}, {2.0, 0.0}}));
}

}  // namespace
}  // namespace shadowprobe
