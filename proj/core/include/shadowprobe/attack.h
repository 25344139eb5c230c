#ifndef SHADOWPROBE_ATTACK_H_
#define SHADOWPROBE_ATTACK_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shadowprobe/dataset.h"
#include "shadowprobe/dtree.h"
#include "shadowprobe/eval.h"
#include "shadowprobe/kmeans.h"
#include "shadowprobe/model.h"
#include "shadowprobe/property.h"
#include "shadowprobe/random.h"

namespace shadowprobe {

// Model internals as rows with a fixed schema per source kind:
//   svm     y, x0..x{d-1}                    one row per support vector
//   hmm     ph (categorical), mean_0.., var_0..   one row per (phoneme, state)
//   kmeans  c0..c{d-1}                       one row per centroid
//   mlp     w0 (bias), w1..w{n}              one row per first-hidden-layer unit
struct FeatureVectorSet {
  ModelKind source_kind = ModelKind::kSvm;
  std::vector<Attribute> schema;
  std::vector<Instance> rows;

  std::size_t size() const { return rows.size(); }
};

// Throws ContractError for decision trees.
FeatureVectorSet ExtractFeatures(const TrainedModel& model);

struct LabeledModel {
  TrainedModel model;
  Property label = Property::kNotP;
};

struct MetaDataset {
  Dataset data;  // label domain {NotP, P}
  ModelKind source_kind = ModelKind::kSvm;
  // Index of the shadow that produced each row.
  std::vector<std::size_t> source;
};

// Every extracted row of every shadow, labeled with its shadow's property.
// Requires one model kind, a shared schema and both labels.
MetaDataset BuildMetaTrainingSet(std::span<const LabeledModel> shadows);
// Same from already extracted feature sets.
MetaDataset BuildMetaTrainingSet(std::span<const FeatureVectorSet> features,
                                 std::span<const Property> labels);

struct MetaClassifier {
  DecisionTree tree;
  ModelKind source_kind = ModelKind::kSvm;
  // Source kind plus extracted schema.
  std::string fingerprint;
  double training_accuracy = 0.0;
};

std::string ExtractionFingerprint(ModelKind kind,
                                  const std::vector<Attribute>& schema);

MetaClassifier TrainMeta(const MetaDataset& md, const TreeParams& params,
                         RandomSource& rng);

struct PropertyVerdict {
  PropertyLabel label;
  std::size_t votes_p = 0;
  std::size_t votes_notp = 0;
  // Equal votes; the verdict is then NotP.
  bool tie = false;
  std::vector<Property> per_row;
};

// Majority vote of the meta-classifier over the target's extracted rows.
PropertyVerdict InferProperty(const MetaClassifier& mc, const TrainedModel& target);
PropertyVerdict InferProperty(const MetaClassifier& mc,
                              const FeatureVectorSet& features);
// Votes to verdict, for callers that classify rows themselves.
PropertyVerdict VerdictFromVotes(std::vector<Property> per_row);

std::string SerializeMetaClassifier(const MetaClassifier& mc);
MetaClassifier DeserializeMetaClassifier(const std::string& text);

// ---------------------------------------------------------------- divergence

struct Gaussian1D {
  double mean = 0.0;
  double variance = 1.0;
};

// (mu_p - mu_q)^2 / (2 var_p) + 1/2 (var_p / var_q - 1 - ln(var_p / var_q)).
// The mean term is normalized by the first argument's variance. This equals
// the usual closed form of KL(p || q) whenever var_p == var_q or mu_p == mu_q.
double KlGaussian(const Gaussian1D& p, const Gaussian1D& q);

struct PhonemeScore {
  std::string phoneme;
  double score = 0.0;
};

// Per phoneme, KlGaussian(reference, baseline) averaged over every (state,
// dimension) pair and then over baselines. Sorted by descending score, ties
// by name.
std::vector<PhonemeScore> PhonemeDivergences(const AcousticModel& reference,
                                             std::span<const AcousticModel> baselines);

// Names of the top_k phonemes of PhonemeDivergences.
std::vector<std::string> KlFilter(const AcousticModel& reference,
                                  std::span<const AcousticModel> baselines,
                                  std::size_t top_k);

// Keeps the rows whose "ph" value is in `phonemes`.
FeatureVectorSet FilterPhonemes(const FeatureVectorSet& features,
                                std::span<const std::string> phonemes);

// ---------------------------------------------------------------- evaluation

struct HoldoutResult {
  ConfusionMatrix confusion;  // row-level, labels {NotP, P}
  Metrics metrics;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::size_t tree_nodes = 0;
  std::size_t tree_leaves = 0;
  double training_accuracy = 0.0;
  std::vector<PropertyVerdict> verdicts;  // one per test shadow
  std::vector<Property> truths;           // one per test shadow
  double verdict_accuracy = 0.0;
};

// Trains the meta-classifier on the rows of `train`, then classifies every row
// of every `test` set.
HoldoutResult EvaluateHoldout(std::span<const FeatureVectorSet> train,
                              std::span<const Property> train_labels,
                              std::span<const FeatureVectorSet> test,
                              std::span<const Property> test_labels,
                              const TreeParams& params, RandomSource& rng);

struct ModelCvResult {
  ConfusionMatrix row_confusion;
  ConfusionMatrix verdict_confusion;
  double verdict_accuracy = 0.0;
  double row_accuracy = 0.0;
};

// k-fold cross-validation with whole models as the unit: folds are stratified
// over model labels and each held-out model gets a verdict.
ModelCvResult ModelLevelCrossValidate(std::span<const FeatureVectorSet> features,
                                      std::span<const Property> labels,
                                      std::size_t k, const TreeParams& params,
                                      RandomSource& rng);

// ---------------------------------------------------------------- dp bypass

struct DpBypassParams {
  std::size_t k = 3;
  std::size_t n_runs = 70;
  // Points subsampled (without replacement) from each pool per run.
  std::size_t points_per_run = 1000;
  std::size_t max_iters = kDefaultKMeansIters;
  SulqParams sulq;
  std::size_t folds = 10;
  TreeParams tree;
};

struct CentroidRow {
  double x = 0.0;
  double y = 0.0;
  std::size_t run = 0;
};

struct DpArm {
  std::string name;  // "noiseless" or "sulq"
  std::vector<KMeansModel> models_p;
  std::vector<KMeansModel> models_notp;
  ModelCvResult attack;
  // First two coordinates of every centroid, per property.
  std::vector<CentroidRow> scatter_p;
  std::vector<CentroidRow> scatter_notp;
};

struct DpBypassReport {
  DpArm noiseless;
  DpArm sulq;
  // Frobenius distance between the mean noiseless centroid sets of the two
  // properties, each model aligned to its property's first model by the
  // best centroid permutation.
  double separation = 0.0;
  // Mean over every (run, property) of the optimally matched Frobenius
  // distance between the SuLQ and noiseless centroid sets.
  double displacement = 0.0;
  std::vector<std::pair<double, double>> clamp;
};

// For each property and run: subsample a training set, train K-Means without
// noise and with SuLQ from the same seed, then attack both arms with
// model-level cross-validation using the same fold seed.
DpBypassReport RunDpBypass(std::span<const Vector> points_p,
                           std::span<const Vector> points_notp,
                           const DpBypassParams& params, RandomSource& rng);

// min over centroid permutations of the Frobenius distance.
double MatchedCentroidDistance(const std::vector<Vector>& a,
                               const std::vector<Vector>& b);

}  // namespace shadowprobe

#endif  // SHADOWPROBE_ATTACK_H_
