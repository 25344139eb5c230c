#include "shadowprobe/dtree.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shadowprobe/error.h"

namespace shadowprobe {
namespace {

constexpr double kGainEpsilon = 1e-12;

double EntropyOfCounts(const std::vector<std::size_t>& counts,
                       std::size_t total) {
  if (total == 0) throw DomainError("Entropy: empty count set");
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

// Gain from parent counts and per-branch counts. Empty branches are skipped.
double GainOfPartition(const std::vector<std::size_t>& parent,
                       std::size_t parent_total,
                       const std::vector<std::vector<std::size_t>>& branches) {
  double gain = EntropyOfCounts(parent, parent_total);
  const double n = static_cast<double>(parent_total);
  for (const auto& branch : branches) {
    const std::size_t size = std::accumulate(branch.begin(), branch.end(),
                                             std::size_t{0});
    if (size == 0) continue;
    gain -= static_cast<double>(size) / n * EntropyOfCounts(branch, size);
  }
  return gain;
}

double Midpoint(double lo, double hi) {
  double mid = lo + (hi - lo) / 2.0;
  if (!(mid < hi)) mid = lo;
  return mid;
}

std::size_t CountNodes(const TreeNode& node) {
  std::size_t n = 1;
  for (const TreeNode& c : node.children) n += CountNodes(c);
  return n;
}

std::size_t CountLeaves(const TreeNode& node) {
  if (node.is_leaf()) return 1;
  std::size_t n = 0;
  for (const TreeNode& c : node.children) n += CountLeaves(c);
  return n;
}

std::size_t NodeDepth(const TreeNode& node) {
  std::size_t d = 0;
  for (const TreeNode& c : node.children) d = std::max(d, 1 + NodeDepth(c));
  return d;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& dataset, const TreeParams& params,
              RandomSource& rng)
      : dataset_(dataset), params_(params), rng_(rng) {
    labels_ = *dataset.label_domain();
    label_ids_.resize(dataset.size());
    for (std::size_t r = 0; r < dataset.size(); ++r) {
      label_ids_[r] = static_cast<std::size_t>(
          std::lower_bound(labels_.begin(), labels_.end(), dataset.Label(r)) -
          labels_.begin());
    }
    const auto& schema = dataset.schema();
    numeric_.resize(schema.size());
    category_ids_.resize(schema.size());
    vocab_.resize(schema.size());
    for (std::size_t a = 0; a < schema.size(); ++a) {
      if (schema[a].kind == AttributeKind::kNumeric) {
        numeric_[a].resize(dataset.size());
        for (std::size_t r = 0; r < dataset.size(); ++r) {
          numeric_[a][r] = dataset.Numeric(r, a);
        }
      } else {
        auto& vocab = vocab_[a];
        for (std::size_t r = 0; r < dataset.size(); ++r) {
          vocab.push_back(dataset.Categorical(r, a));
        }
        std::sort(vocab.begin(), vocab.end());
        vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
        category_ids_[a].resize(dataset.size());
        for (std::size_t r = 0; r < dataset.size(); ++r) {
          category_ids_[a][r] = static_cast<std::size_t>(
              std::lower_bound(vocab.begin(), vocab.end(),
                               dataset.Categorical(r, a)) -
              vocab.begin());
        }
      }
    }
  }

  TreeNode Build() {
    std::vector<std::size_t> rows(dataset_.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::vector<bool> used(dataset_.schema().size(), false);
    return BuildNode(rows, 0, used);
  }

 private:
  struct Candidate {
    std::size_t attribute = 0;
    AttributeKind kind = AttributeKind::kNumeric;
    double threshold = 0.0;
    double gain = 0.0;
  };

  std::vector<std::size_t> ClassCounts(const std::vector<std::size_t>& rows) const {
    std::vector<std::size_t> counts(labels_.size(), 0);
    for (std::size_t r : rows) ++counts[label_ids_[r]];
    return counts;
  }

  void SetMajority(TreeNode& node, const std::vector<std::size_t>& counts) {
    const std::size_t best = *std::max_element(counts.begin(), counts.end());
    std::vector<std::size_t> tied;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] == best) tied.push_back(c);
    }
    if (tied.size() == 1) {
      node.label = labels_[tied.front()];
      node.tie_broken = false;
    } else {
      node.label = labels_[tied[rng_.UniformIndex(tied.size())]];
      node.tie_broken = true;
    }
  }

  void Consider(const Candidate& c, std::optional<Candidate>& best,
                std::vector<double>& audit_gains) {
    if (params_.audit) {
      if (c.gain < -kGainEpsilon) {
        throw InvariantViolation("TrainTree: negative information gain");
      }
      audit_gains.push_back(c.gain);
    }
    const double floor = best ? best->gain : 0.0;
    if (c.gain > floor + kGainEpsilon) best = c;
  }

  TreeNode BuildNode(const std::vector<std::size_t>& rows, std::size_t depth,
                     std::vector<bool>& used) {
    TreeNode node;
    node.count = rows.size();
    const std::vector<std::size_t> counts = ClassCounts(rows);
    SetMajority(node, counts);

    const bool pure =
        std::count_if(counts.begin(), counts.end(),
                      [](std::size_t c) { return c > 0; }) <= 1;
    if (pure || rows.size() < params_.min_leaf_size ||
        (params_.max_depth && depth >= *params_.max_depth)) {
      return node;
    }

    const std::size_t n = rows.size();
    const double parent_h = EntropyOfCounts(counts, n);
    std::optional<Candidate> best;
    std::vector<double> audit_gains;
    const auto& schema = dataset_.schema();

    std::vector<std::size_t> order(rows);
    for (std::size_t a = 0; a < schema.size(); ++a) {
      if (schema[a].kind == AttributeKind::kNumeric) {
        const auto& col = numeric_[a];
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
          return col[x] < col[y] || (col[x] == col[y] && x < y);
        });
        std::vector<std::size_t> left(labels_.size(), 0);
        std::vector<std::size_t> right = counts;
        for (std::size_t i = 0; i + 1 < n; ++i) {
          const std::size_t id = label_ids_[order[i]];
          ++left[id];
          --right[id];
          const double lo = col[order[i]];
          const double hi = col[order[i + 1]];
          if (!(lo < hi)) continue;
          const std::size_t nl = i + 1;
          const std::size_t nr = n - nl;
          if (nl < params_.min_leaf_size || nr < params_.min_leaf_size) continue;
          Candidate c;
          c.attribute = a;
          c.kind = AttributeKind::kNumeric;
          c.threshold = Midpoint(lo, hi);
          c.gain = parent_h -
                   static_cast<double>(nl) / n * EntropyOfCounts(left, nl) -
                   static_cast<double>(nr) / n * EntropyOfCounts(right, nr);
          Consider(c, best, audit_gains);
        }
      } else if (!used[a]) {
        const auto& ids = category_ids_[a];
        std::vector<std::vector<std::size_t>> branches(
            vocab_[a].size(), std::vector<std::size_t>(labels_.size(), 0));
        for (std::size_t r : rows) ++branches[ids[r]][label_ids_[r]];
        const std::size_t present = std::count_if(
            branches.begin(), branches.end(), [](const auto& b) {
              return std::any_of(b.begin(), b.end(),
                                 [](std::size_t c) { return c > 0; });
            });
        if (present < 2) continue;
        Candidate c;
        c.attribute = a;
        c.kind = AttributeKind::kCategorical;
        c.gain = GainOfPartition(counts, n, branches);
        Consider(c, best, audit_gains);
      }
    }

    if (params_.audit && best) {
      for (double g : audit_gains) {
        if (g > best->gain + kGainEpsilon) {
          throw InvariantViolation("TrainTree: chosen split is not optimal");
        }
      }
    }
    if (!best) return node;

    TreeNode::Test test;
    test.attribute = best->attribute;
    test.kind = best->kind;
    if (best->kind == AttributeKind::kNumeric) {
      test.threshold = best->threshold;
      std::vector<std::size_t> left, right;
      for (std::size_t r : rows) {
        (numeric_[best->attribute][r] <= best->threshold ? left : right)
            .push_back(r);
      }
      node.test = std::move(test);
      node.children.push_back(BuildNode(left, depth + 1, used));
      node.children.push_back(BuildNode(right, depth + 1, used));
    } else {
      const std::size_t a = best->attribute;
      std::vector<std::vector<std::size_t>> groups(vocab_[a].size());
      for (std::size_t r : rows) groups[category_ids_[a][r]].push_back(r);
      used[a] = true;
      std::vector<TreeNode> children;
      for (std::size_t v = 0; v < groups.size(); ++v) {
        if (groups[v].empty()) continue;
        test.values.push_back(vocab_[a][v]);
        children.push_back(BuildNode(groups[v], depth + 1, used));
      }
      used[a] = false;
      TreeNode fallback;
      fallback.label = node.label;
      fallback.tie_broken = node.tie_broken;
      fallback.count = 0;
      children.push_back(std::move(fallback));
      node.test = std::move(test);
      node.children = std::move(children);
    }
    return node;
  }

  const Dataset& dataset_;
  const TreeParams& params_;
  RandomSource& rng_;
  std::vector<std::string> labels_;
  std::vector<std::size_t> label_ids_;
  std::vector<std::vector<double>> numeric_;
  std::vector<std::vector<std::size_t>> category_ids_;
  std::vector<std::vector<std::string>> vocab_;
};

}  // namespace

double Entropy(const LabelCounts& counts) {
  std::vector<std::size_t> c;
  std::size_t total = 0;
  for (const auto& [label, n] : counts) {
    c.push_back(n);
    total += n;
  }
  return EntropyOfCounts(c, total);
}

double InfoGain(const Dataset& dataset, std::size_t attribute,
                const SplitSpec& split) {
  if (dataset.empty()) throw DomainError("InfoGain: empty dataset");
  if (!dataset.labeled()) throw ContractError("InfoGain: unlabeled dataset");
  if (attribute >= dataset.schema().size()) {
    throw ContractError("InfoGain: attribute index out of range");
  }
  const auto& labels = *dataset.label_domain();
  auto label_id = [&](std::size_t r) {
    return static_cast<std::size_t>(
        std::lower_bound(labels.begin(), labels.end(), dataset.Label(r)) -
        labels.begin());
  };
  const AttributeKind kind = dataset.schema()[attribute].kind;
  std::vector<std::size_t> parent(labels.size(), 0);
  std::vector<std::vector<std::size_t>> branches;
  if (const auto* numeric = std::get_if<NumericThreshold>(&split)) {
    if (kind != AttributeKind::kNumeric) {
      throw ContractError("InfoGain: threshold split on categorical attribute");
    }
    branches.assign(2, std::vector<std::size_t>(labels.size(), 0));
    for (std::size_t r = 0; r < dataset.size(); ++r) {
      const std::size_t id = label_id(r);
      ++parent[id];
      ++branches[dataset.Numeric(r, attribute) <= numeric->threshold ? 0 : 1][id];
    }
  } else {
    if (kind != AttributeKind::kCategorical) {
      throw ContractError("InfoGain: value partition on numeric attribute");
    }
    const auto& values = std::get<CategoricalPartition>(split).values;
    branches.assign(values.size() + 1,
                    std::vector<std::size_t>(labels.size(), 0));
    for (std::size_t r = 0; r < dataset.size(); ++r) {
      const std::size_t id = label_id(r);
      ++parent[id];
      const auto& v = dataset.Categorical(r, attribute);
      auto it = std::find(values.begin(), values.end(), v);
      ++branches[static_cast<std::size_t>(it - values.begin())][id];
    }
  }
  return GainOfPartition(parent, dataset.size(), branches);
}

void TreeParams::Validate() const {
  if (min_leaf_size < 1) throw ContractError("TreeParams: min_leaf_size < 1");
  if (max_depth && *max_depth < 1) throw ContractError("TreeParams: max_depth < 1");
}

bool TreeNode::operator==(const TreeNode& other) const {
  if (test.has_value() != other.test.has_value()) return false;
  if (test) {
    if (test->attribute != other.test->attribute ||
        test->kind != other.test->kind ||
        test->threshold != other.test->threshold ||
        test->values != other.test->values) {
      return false;
    }
  }
  return children == other.children && label == other.label &&
         count == other.count && tie_broken == other.tie_broken;
}

std::string DecisionTree::SchemaFingerprint() const {
  return Dataset(schema_, {}).SchemaFingerprint();
}

std::size_t DecisionTree::NodeCount() const { return CountNodes(root_); }
std::size_t DecisionTree::LeafCount() const { return CountLeaves(root_); }
std::size_t DecisionTree::Depth() const { return NodeDepth(root_); }

DecisionTree TrainTree(const Dataset& dataset, const TreeParams& params,
                       RandomSource& rng) {
  params.Validate();
  if (dataset.empty() || !dataset.labeled()) {
    throw ContractError("TrainTree: dataset must be labeled and non-empty");
  }
  TreeBuilder builder(dataset, params, rng);
  return DecisionTree(builder.Build(), dataset.schema(), params);
}

std::string Classify(const DecisionTree& tree, const Instance& instance) {
  const auto& schema = tree.schema();
  if (instance.values.size() != schema.size()) {
    throw ContractError("Classify: instance has " +
                        std::to_string(instance.values.size()) +
                        " values, tree expects " +
                        std::to_string(schema.size()));
  }
  for (std::size_t a = 0; a < schema.size(); ++a) {
    const bool numeric = std::holds_alternative<double>(instance.values[a]);
    if (numeric != (schema[a].kind == AttributeKind::kNumeric)) {
      throw ContractError("Classify: attribute '" + schema[a].name +
                          "' kind mismatch");
    }
  }
  const TreeNode* node = &tree.root();
  while (!node->is_leaf()) {
    const TreeNode::Test& test = *node->test;
    if (test.kind == AttributeKind::kNumeric) {
      const double v = std::get<double>(instance.values[test.attribute]);
      node = &node->children[v <= test.threshold ? 0 : 1];
    } else {
      const auto& v = std::get<std::string>(instance.values[test.attribute]);
      auto it = std::lower_bound(test.values.begin(), test.values.end(), v);
      std::size_t branch = test.values.size();
      if (it != test.values.end() && *it == v) {
        branch = static_cast<std::size_t>(it - test.values.begin());
      }
      node = &node->children[branch];
    }
  }
  return node->label;
}

}  // namespace shadowprobe
