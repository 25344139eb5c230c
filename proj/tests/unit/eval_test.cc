#include "shadowprobe/eval.h"

#include <map>
#include <set>

#include <gtest/gtest.h>

#include "shadowprobe/error.h"

namespace shadowprobe {
namespace {

TEST(ConfusionMatrixTest, PerfectPredictionsAreDiagonal) {
  const std::vector<std::string> t = {"a", "b", "b", "c"};
  const ConfusionMatrix cm = MakeConfusionMatrix(t, t);
  EXPECT_EQ(cm.labels, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(cm.trace(), 4u);
  EXPECT_EQ(cm.counts[1][1], 2u);
  const Metrics m = ComputeMetrics(cm);
  EXPECT_EQ(m.accuracy, 1.0);
  for (const auto& c : m.per_class) {
    EXPECT_EQ(c.precision, 1.0);
    EXPECT_EQ(c.recall, 1.0);
  }
}

TEST(ConfusionMatrixTest, AllWrongHasZeroDiagonal) {
  const std::vector<std::string> t = {"a", "b"}, p = {"b", "a"};
  const ConfusionMatrix cm = MakeConfusionMatrix(t, p);
  EXPECT_EQ(cm.trace(), 0u);
  EXPECT_EQ(cm.counts[0][1], 1u);
  EXPECT_EQ(cm.counts[1][0], 1u);
}

TEST(ConfusionMatrixTest, LengthMismatchIsContractError) {
  const std::vector<std::string> t = {"a"}, p = {"a", "b"};
  EXPECT_THROW(MakeConfusionMatrix(t, p), ContractError);
  EXPECT_THROW(MakeConfusionMatrix(t, t, {"b"}), ContractError);
}

TEST(ComputeMetricsTest, SpeechTableValues) {
  // Rows are truth, columns prediction.
  const ConfusionMatrix cm = ConfusionFromCounts({"Indian", "NotIndian"}, {{220, 22}, {72, 702}});
  const Metrics m = ComputeMetrics(cm);
  EXPECT_DOUBLE_EQ(m.at("NotIndian").precision, 702.0 / 724.0);
  EXPECT_DOUBLE_EQ(m.at("Indian").precision, 220.0 / 292.0);
  EXPECT_DOUBLE_EQ(m.at("Indian").recall, 220.0 / 242.0);
  EXPECT_DOUBLE_EQ(m.at("NotIndian").recall, 702.0 / 774.0);
  EXPECT_NEAR(m.at("NotIndian").precision, 0.97, 0.005);
  EXPECT_NEAR(m.at("Indian").precision, 0.75, 0.005);
  EXPECT_NEAR(m.at("Indian").recall, 0.909, 0.0005);
  EXPECT_NEAR(m.at("NotIndian").recall, 0.907, 0.0005);
}

TEST(ComputeMetricsTest, NetflowTableValues) {
  const ConfusionMatrix cm = ConfusionFromCounts({"Google", "NotGoogle"}, {{2312, 101}, {92, 2786}});
  const Metrics m = ComputeMetrics(cm);
  EXPECT_DOUBLE_EQ(m.at("Google").precision, 2312.0 / 2404.0);
  EXPECT_DOUBLE_EQ(m.at("Google").recall, 2312.0 / 2413.0);
  EXPECT_DOUBLE_EQ(m.at("NotGoogle").precision, 2786.0 / 2887.0);
  EXPECT_DOUBLE_EQ(m.at("NotGoogle").recall, 2786.0 / 2878.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 5098.0 / 5291.0);
}

TEST(ComputeMetricsTest, EmptyMatrixIsDomainError) {
  EXPECT_THROW(ComputeMetrics(ConfusionFromCounts({"a", "b"}, {{0, 0}, {0, 0}})), DomainError);
}

TEST(ComputeMetricsTest, UnpredictedClassFlagsUndefinedPrecision) {
  const Metrics m = ComputeMetrics(ConfusionFromCounts({"a", "b"}, {{3, 0}, {2, 0}}));
  EXPECT_TRUE(m.at("b").precision_undefined);
  EXPECT_EQ(m.at("b").precision, 0.0);
  EXPECT_FALSE(m.at("a").precision_undefined);
}

std::vector<std::string> Labels(std::size_t n_a, std::size_t n_b) {
  std::vector<std::string> l(n_a, "a");
  l.insert(l.end(), n_b, "b");
  return l;
}

TEST(StratifiedFoldsTest, PartitionIsBalanced) {
  const auto labels = Labels(23, 17);
  RandomSource rng(1);
  const auto folds = StratifiedFolds(labels, 10, rng);
  ASSERT_EQ(folds.size(), 10u);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    EXPECT_GE(f.size(), 4u);
    EXPECT_LE(f.size(), 4u);
    std::size_t a = 0;
    for (std::size_t i : f) {
      EXPECT_TRUE(seen.insert(i).second);
      a += labels[i] == "a";
    }
    EXPECT_GE(a, 2u);
    EXPECT_LE(a, 3u);
  }
  EXPECT_EQ(seen.size(), 40u);
  EXPECT_THROW(StratifiedFolds(labels, 1, rng), ContractError);
  EXPECT_THROW(StratifiedFolds(labels, 41, rng), ContractError);
}

Dataset Duplicated() {
  std::vector<Vector> x;
  std::vector<std::string> y;
  for (int i = 0; i < 12; ++i) {
    x.push_back({static_cast<double>(i % 3)});
    y.push_back(i % 3 == 0 ? "zero" : "other");
  }
  return Dataset::FromNumeric({"v"}, x, y);
}

Predictor Memorizer(const Dataset& train, RandomSource&) {
  std::map<double, std::string> table;
  for (std::size_t i = 0; i < train.size(); ++i) table[train.Numeric(i, 0)] = train.Label(i);
  return [table](const Instance& inst) { return table.at(std::get<double>(inst.values[0])); };
}

TEST(CrossValidateTest, LeaveOneOutTestsEveryRowOnce) {
  const Dataset ds = Duplicated();
  RandomSource rng(2);
  const CvResult r = CrossValidate(ds, ds.size(), Memorizer, rng);
  EXPECT_EQ(r.folds.size(), ds.size());
  std::set<std::size_t> seen;
  for (const auto& f : r.folds) {
    ASSERT_EQ(f.size(), 1u);
    seen.insert(f[0]);
  }
  EXPECT_EQ(seen.size(), ds.size());
  EXPECT_EQ(r.pooled.total(), ds.size());
  EXPECT_EQ(r.mean_accuracy, 1.0);
}

TEST(CrossValidateTest, MemorizerOnDuplicatesIsPerfect) {
  RandomSource rng(3);
  const CvResult r = CrossValidate(Duplicated(), 3, Memorizer, rng);
  EXPECT_EQ(r.mean_accuracy, 1.0);
  EXPECT_EQ(r.fold_accuracy.size(), 3u);
}

TEST(CrossValidateTest, SameSeedSameResult) {
  RandomSource a(4), b(4);
  const CvResult ra = CrossValidate(Duplicated(), 4, Memorizer, a);
  const CvResult rb = CrossValidate(Duplicated(), 4, Memorizer, b);
  EXPECT_EQ(ra.folds, rb.folds);
  EXPECT_EQ(ra.pooled, rb.pooled);
}

}  // namespace
}  // namespace shadowprobe
