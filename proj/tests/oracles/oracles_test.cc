#include <cmath>

#include <gtest/gtest.h>

#include "exact_entropy.h"
#include "hmm_enumeration.h"
#include "kl_quadrature.h"
#include "kmeans_enumeration.h"
#include "svm_dual.h"

namespace shadowprobe::oracles {
namespace {

TEST(OracleSelfCheck, QuadratureMatchesClosedFormKl) {
  const double mp = 0.3, vp = 0.7, mq = -1.1, vq = 2.2;
  const double closed = 0.5 * std::log(vq / vp) + (vp + (mp - mq) * (mp - mq)) / (2 * vq) - 0.5;
  EXPECT_NEAR(KlByQuadrature(mp, vp, mq, vq), closed, 1e-12);
}

TEST(OracleSelfCheck, ExactEntropyKnownValues) {
  EXPECT_EQ(static_cast<double>(ExactEntropy(std::vector<std::size_t>{2, 2})), 1.0);
  EXPECT_EQ(static_cast<double>(ExactEntropy(std::vector<std::size_t>{5})), 0.0);
  EXPECT_NEAR(static_cast<double>(ExactEntropy(std::vector<std::size_t>{1, 1, 1, 1})), 2.0, 1e-30);
}

TEST(OracleSelfCheck, DualSolverOnTwoPoints) {
  // Points at 0 and 2: alpha = 0.5 each, dual value 0.5.
  const auto s = SolveDual({{0.0}, {2.0}}, {-1, 1},
                           [](const auto& a, const auto& b) { return a[0] * b[0]; }, 10.0);
  EXPECT_NEAR(s.alpha[0], 0.5, 1e-9);
  EXPECT_NEAR(s.alpha[1], 0.5, 1e-9);
  EXPECT_NEAR(s.objective, 0.5, 1e-9);
}

TEST(OracleSelfCheck, EnumerationPosteriorsSumToOne) {
  HmmParams h{{{0.5, 0.5}, {0.0, 1.0}}, {{0.0}, {1.0}}, {{1.0}, {1.0}}};
  const auto r = EnumeratePaths(h, {{0.1}, {0.4}, {0.9}, {1.2}});
  EXPECT_EQ(r.feasible_paths, 3u);
  for (const auto& row : r.posteriors) EXPECT_NEAR(row[0] + row[1], 1.0, 1e-12);
  EXPECT_NEAR(r.posteriors[0][0], 1.0, 1e-12);
  EXPECT_NEAR(r.posteriors[3][1], 1.0, 1e-12);
}

TEST(OracleSelfCheck, KMeansEnumerationOnObviousClusters) {
  EXPECT_NEAR(OptimalKMeansObjective({{0.0}, {1.0}, {10.0}, {11.0}}, 2), 1.0, 1e-12);
}

}  // namespace
}  // namespace shadowprobe::oracles
