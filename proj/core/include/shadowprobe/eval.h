#ifndef SHADOWPROBE_EVAL_H_
#define SHADOWPROBE_EVAL_H_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "shadowprobe/dataset.h"
#include "shadowprobe/random.h"

namespace shadowprobe {

// counts[i][j]: instances of true label labels[i] predicted as labels[j].
struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const;
  std::size_t trace() const;
  std::size_t Index(const std::string& label) const;
  void Add(const std::string& truth, const std::string& pred);
  void Merge(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;
};

// Label order is the sorted union of both lists.
ConfusionMatrix MakeConfusionMatrix(std::span<const std::string> truths,
                                    std::span<const std::string> preds);
// Fixed label order; every truth and prediction must be in `labels`.
ConfusionMatrix MakeConfusionMatrix(std::span<const std::string> truths,
                                    std::span<const std::string> preds,
                                    std::vector<std::string> labels);
// Matrix from explicit counts in row=truth, column=prediction order.
ConfusionMatrix ConfusionFromCounts(std::vector<std::string> labels,
                                    std::vector<std::vector<std::size_t>> counts);

struct ClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  // No prediction went to this class; precision is reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

struct Metrics {
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;

  const ClassMetrics& at(const std::string& label) const;
};

// precision_c = TP_c / column sum, recall_c = TP_c / row sum, accuracy =
// trace / total. Throws DomainError on an empty matrix.
Metrics ComputeMetrics(const ConfusionMatrix& cm);

// Assigns every index to one of k folds. Indices of each label are shuffled
// and dealt round-robin, continuing across labels, so fold sizes differ by at
// most one and each label is spread as evenly as possible.
std::vector<std::vector<std::size_t>> StratifiedFolds(
    std::span<const std::string> labels, std::size_t k, RandomSource& rng);

using Predictor = std::function<std::string(const Instance&)>;
using Trainer = std::function<Predictor(const Dataset& train, RandomSource& rng)>;

struct CvResult {
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
  ConfusionMatrix pooled;
  std::vector<std::vector<std::size_t>> folds;
};

// Stratified k-fold cross-validation. Each fold's trainer receives its own
// child RandomSource, split off in fold order.
CvResult CrossValidate(const Dataset& dataset, std::size_t k,
                       const Trainer& trainer, RandomSource& rng);
// Same with caller-supplied folds (row indices of each test fold).
CvResult CrossValidateFolds(const Dataset& dataset,
                            std::vector<std::vector<std::size_t>> folds,
                            const Trainer& trainer, RandomSource& rng);

}  // namespace shadowprobe

#endif  // SHADOWPROBE_EVAL_H_
