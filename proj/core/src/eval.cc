#include "shadowprobe/eval.h"

#include <algorithm>
#include <map>

#include "shadowprobe/error.h"

namespace shadowprobe {

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto& row : counts) {
    for (std::size_t c : row) t += c;
  }
  return t;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
  return t;
}

std::size_t ConfusionMatrix::Index(const std::string& label) const {
  auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it != labels.end() && *it == label) return it - labels.begin();
  // Caller-supplied orders need not be sorted.
  it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) {
    throw ContractError("confusion matrix: label '" + label + "' not in domain");
  }
  return it - labels.begin();
}

void ConfusionMatrix::Add(const std::string& truth, const std::string& pred) {
  ++counts[Index(truth)][Index(pred)];
}

void ConfusionMatrix::Merge(const ConfusionMatrix& other) {
  if (other.labels != labels) {
    throw ContractError("confusion matrix: merging different label orders");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) {
      counts[i][j] += other.counts[i][j];
    }
  }
}

ConfusionMatrix MakeConfusionMatrix(std::span<const std::string> truths,
                                    std::span<const std::string> preds) {
  std::vector<std::string> labels(truths.begin(), truths.end());
  labels.insert(labels.end(), preds.begin(), preds.end());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return MakeConfusionMatrix(truths, preds, std::move(labels));
}

ConfusionMatrix MakeConfusionMatrix(std::span<const std::string> truths,
                                    std::span<const std::string> preds,
                                    std::vector<std::string> labels) {
  if (truths.size() != preds.size()) {
    throw ContractError("confusion matrix: " + std::to_string(truths.size()) +
                        " truths vs " + std::to_string(preds.size()) +
                        " predictions");
  }
  ConfusionMatrix cm;
  const std::size_t n = labels.size();
  cm.labels = std::move(labels);
  cm.counts.assign(n, std::vector<std::size_t>(n, 0));
  for (std::size_t i = 0; i < truths.size(); ++i) cm.Add(truths[i], preds[i]);
  return cm;
}

ConfusionMatrix ConfusionFromCounts(std::vector<std::string> labels,
                                    std::vector<std::vector<std::size_t>> counts) {
  if (counts.size() != labels.size()) {
    throw ContractError("confusion matrix: row count does not match labels");
  }
  for (const auto& row : counts) {
    if (row.size() != labels.size()) {
      throw ContractError("confusion matrix: matrix is not square");
    }
  }
  return ConfusionMatrix{std::move(labels), std::move(counts)};
}

const ClassMetrics& Metrics::at(const std::string& label) const {
  for (const auto& m : per_class) {
    if (m.label == label) return m;
  }
  throw ContractError("metrics: unknown label '" + label + "'");
}

Metrics ComputeMetrics(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw DomainError("metrics: empty confusion matrix");
  Metrics m;
  const std::size_t n = cm.labels.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t row = 0;
    std::size_t col = 0;
    for (std::size_t j = 0; j < n; ++j) {
      row += cm.counts[c][j];
      col += cm.counts[j][c];
    }
    const double tp = static_cast<double>(cm.counts[c][c]);
    ClassMetrics cls;
    cls.label = cm.labels[c];
    cls.precision_undefined = col == 0;
    cls.recall_undefined = row == 0;
    cls.precision = col == 0 ? 0.0 : tp / static_cast<double>(col);
    cls.recall = row == 0 ? 0.0 : tp / static_cast<double>(row);
    m.per_class.push_back(cls);
  }
  m.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  return m;
}

std::vector<std::vector<std::size_t>> StratifiedFolds(
    std::span<const std::string> labels, std::size_t k, RandomSource& rng) {
  if (k < 2 || k > labels.size()) {
    throw ContractError("cross-validation: k = " + std::to_string(k) +
                        " outside [2, " + std::to_string(labels.size()) + "]");
  }
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (auto& [label, indices] : by_label) {
    rng.Shuffle(indices);
    for (std::size_t idx : indices) {
      folds[next].push_back(idx);
      next = (next + 1) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CvResult CrossValidate(const Dataset& dataset, std::size_t k,
                       const Trainer& trainer, RandomSource& rng) {
  if (!dataset.labeled()) throw ContractError("cross-validation: unlabeled dataset");
  std::vector<std::string> labels;
  labels.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) labels.push_back(dataset.Label(i));
  auto folds = StratifiedFolds(labels, k, rng);
  return CrossValidateFolds(dataset, std::move(folds), trainer, rng);
}

CvResult CrossValidateFolds(const Dataset& dataset,
                            std::vector<std::vector<std::size_t>> folds,
                            const Trainer& trainer, RandomSource& rng) {
  if (!dataset.labeled()) throw ContractError("cross-validation: unlabeled dataset");
  std::vector<int> owner(dataset.size(), -1);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    for (std::size_t idx : folds[f]) {
      if (idx >= dataset.size() || owner[idx] != -1) {
        throw ContractError("cross-validation: folds must partition the dataset");
      }
      owner[idx] = static_cast<int>(f);
    }
  }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
    throw ContractError("cross-validation: folds must partition the dataset");
  }
  const std::vector<std::string>& domain = *dataset.label_domain();
  CvResult result;
  result.pooled = MakeConfusionMatrix({}, {}, domain);
  std::vector<RandomSource> children;
  for (std::size_t f = 0; f < folds.size(); ++f) children.push_back(rng.Split());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (folds[f].empty()) throw ContractError("cross-validation: empty fold");
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (owner[i] != static_cast<int>(f)) train_idx.push_back(i);
    }
    const Predictor predict = trainer(dataset.Subset(train_idx), children[f]);
    std::size_t correct = 0;
    for (std::size_t idx : folds[f]) {
      const std::string pred = predict(dataset.row(idx));
      result.pooled.Add(dataset.Label(idx), pred);
      if (pred == dataset.Label(idx)) ++correct;
    }
    result.fold_accuracy.push_back(static_cast<double>(correct) /
                                   static_cast<double>(folds[f].size()));
  }
  double sum = 0.0;
  for (double a : result.fold_accuracy) sum += a;
  result.mean_accuracy = sum / static_cast<double>(result.fold_accuracy.size());
  result.folds = std::move(folds);
  return result;
}

}  // namespace shadowprobe
