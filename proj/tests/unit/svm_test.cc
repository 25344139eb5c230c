#include "shadowprobe/svm.h"

#include <cmath>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "shadowprobe/error.h"
#include "svm_dual.h"

namespace shadowprobe {
namespace {

TEST(KernelTest, LinearIsDotProduct) {
  const Vector x = {1, 2};
  EXPECT_EQ(KernelEval({KernelKind::kLinear}, x, x), 5.0);
}

TEST(KernelTest, RbfOfIdenticalPointsIsOne) {
  const Vector x = {0.3, -7.0, 2.0};
  for (double g : {0.01, 1.0, 50.0}) {
    EXPECT_EQ(KernelEval({KernelKind::kRbf, g}, x, x), 1.0);
  }
}

TEST(KernelTest, PolynomialMatchesMultiprecisionEvaluation) {
  using Big = boost::multiprecision::cpp_bin_float_50;
  const Vector x = {1, 0}, y = {1, 1};
  const Big expected = pow(Big(1) * Big(1) + Big(1), 3);
  EXPECT_EQ(KernelEval({KernelKind::kPolynomial, 1.0, 1.0, 3}, x, y), 8.0);
  EXPECT_EQ(static_cast<double>(expected), 8.0);
}

TEST(KernelTest, UnknownKindNamesTheValue) {
  try {
    KernelKindFromString("cubic");
    FAIL();
  } catch (const KindError& e) {
    EXPECT_NE(std::string(e.what()).find("cubic"), std::string::npos);
  }
  EXPECT_EQ(KernelKindFromString("polynomial"), KernelKind::kPolynomial);
}

TEST(SmoTrainTest, TwoPointMarginIsAtTheMidpoint) {
  const std::vector<Vector> x = {{0.0}, {2.0}};
  const std::vector<int> y = {-1, 1};
  SmoParams p;
  p.C = 10;
  RandomSource rng(1);
  const SvmModel m = SmoTrain(x, y, {KernelKind::kLinear}, p, rng);
  EXPECT_EQ(m.support_vectors.size(), 2u);
  EXPECT_LE(std::fabs(SvmDecision(m, Vector{1.0})), p.tol);
  EXPECT_TRUE(m.converged);
}

TEST(SmoTrainTest, XorWithRbfIsSeparated) {
  const std::vector<Vector> x = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  const std::vector<int> y = {-1, -1, 1, 1};
  SmoParams p;
  p.C = 10;
  RandomSource rng(2);
  const SvmModel m = SmoTrain(x, y, {KernelKind::kRbf, 1.0}, p, rng);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(SvmPredict(m, x[i]), y[i]);
}

struct PointSet {
  std::vector<Vector> x;
  std::vector<int> y;
};

PointSet Separable(std::uint64_t seed, std::size_t n) {
  RandomSource rng(seed);
  PointSet s;
  while (s.x.size() < n) {
    const double a = rng.Uniform(-3, 3), b = rng.Uniform(-3, 3);
    const double margin = a + 0.5 * b - 0.3;
    if (std::fabs(margin) < 0.4) continue;
    s.x.push_back({a, b});
    s.y.push_back(margin > 0 ? 1 : -1);
  }
  return s;
}

TEST(SmoTrainTest, DualMatchesProjectedGradientOracle) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const PointSet s = Separable(seed, 20);
    const KernelSpec k{KernelKind::kLinear};
    SmoParams p;
    p.C = 1.0;
    p.tol = 1e-3;
    p.audit = true;
    RandomSource rng(seed);
    const SvmModel m = SmoTrain(s.x, s.y, k, p, rng);
    const auto alpha = DenseAlphas(m, s.x.size());
    const auto oracle = oracles::SolveDual(
        s.x, s.y, [&](const auto& a, const auto& b) { return KernelEval(k, a, b); }, p.C);
    EXPECT_NEAR(DualObjective(alpha, s.x, s.y, k), oracle.objective, 1e-4) << seed;
    const KktReport kkt = KktAudit(m, s.x, s.y, 1e-3);
    EXPECT_TRUE(kkt.ok) << "max violation " << kkt.max_violation;
    EXPECT_LT(kkt.equality_residual, 1e-9);
  }
}

TEST(SmoTrainTest, AuditedDualTraceIsNonDecreasing) {
  const PointSet s = Separable(9, 30);
  std::vector<double> trace;
  SmoParams p;
  p.audit = true;
  p.dual_trace = &trace;
  RandomSource rng(1);
  SmoTrain(s.x, s.y, {KernelKind::kPolynomial, 1.0, 1.0, 2}, p, rng);
  ASSERT_GT(trace.size(), 1u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_GE(trace[i], trace[i - 1] - 1e-12);
}

TEST(SvmDecisionTest, OnMarginSupportVectorsSitAtTheirLabel) {
  const PointSet s = Separable(3, 40);
  SmoParams p;
  p.C = 5.0;
  RandomSource rng(4);
  const SvmModel m = SmoTrain(s.x, s.y, {KernelKind::kLinear}, p, rng);
  for (const auto& sv : m.support_vectors) {
    if (sv.alpha > 1e-8 && sv.alpha < m.C - 1e-8) {
      EXPECT_LE(std::fabs(SvmDecision(m, sv.x) - sv.y), p.tol);
    }
  }
}

TEST(SvmDecisionTest, MatchesReorderedResummation) {
  const PointSet s = Separable(5, 30);
  const KernelSpec k{KernelKind::kRbf, 0.7};
  RandomSource rng(6);
  const SvmModel m = SmoTrain(s.x, s.y, k, {}, rng);
  RandomSource probe(7);
  for (int i = 0; i < 10; ++i) {
    const Vector x = {probe.Uniform(-3, 3), probe.Uniform(-3, 3)};
    double f = m.bias;
    for (std::size_t j = m.support_vectors.size(); j-- > 0;) {
      const auto& sv = m.support_vectors[j];
      const double d0 = sv.x[0] - x[0], d1 = sv.x[1] - x[1];
      f += sv.alpha * sv.y * std::exp(-0.7 * (d1 * d1 + d0 * d0));
    }
    EXPECT_NEAR(SvmDecision(m, x), f, 1e-9);
  }
}

TEST(SmoTrainTest, DatasetOverloadMapsSortedFirstLabelToMinusOne) {
  const Dataset ds = Dataset::FromNumeric({"v"}, std::vector<Vector>{{0}, {1}, {4}, {5}},
                                          std::vector<std::string>{"b", "b", "a", "a"});
  RandomSource rng(1);
  const SvmModel m = SmoTrain(ds, {KernelKind::kLinear}, {}, rng);
  EXPECT_EQ(m.negative_label, "a");
  EXPECT_EQ(m.positive_label, "b");
  EXPECT_EQ(SvmPredictLabel(m, Vector{0.0}), "b");
  EXPECT_EQ(SvmPredictLabel(m, Vector{5.0}), "a");
}

TEST(SmoTrainTest, SameSeedSameModel) {
  const PointSet s = Separable(11, 25);
  RandomSource a(3), b(3);
  EXPECT_EQ(SmoTrain(s.x, s.y, {KernelKind::kLinear}, {}, a),
            SmoTrain(s.x, s.y, {KernelKind::kLinear}, {}, b));
}

TEST(SmoTrainTest, RejectsBadLabels) {
  const std::vector<Vector> x = {{0.0}, {1.0}};
  RandomSource rng(1);
  EXPECT_THROW(SmoTrain(x, std::vector<int>{0, 1}, {}, {}, rng), ContractError);
}

}  // namespace
}  // namespace shadowprobe
