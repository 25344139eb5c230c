#ifndef SHADOWPROBE_DTREE_H_
#define SHADOWPROBE_DTREE_H_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "shadowprobe/dataset.h"
#include "shadowprobe/random.h"

namespace shadowprobe {

using LabelCounts = std::map<std::string, std::size_t>;

// Shannon entropy in bits. Zero-count classes contribute nothing.
double Entropy(const LabelCounts& counts);

// Rows with value <= threshold go left, the rest right.
struct NumericThreshold {
  double threshold = 0.0;
};

// One branch per listed value; rows whose value is not listed form one extra
// branch.
struct CategoricalPartition {
  std::vector<std::string> values;
};

using SplitSpec = std::variant<NumericThreshold, CategoricalPartition>;

// Gain(S, A) = H(S) - sum_v |S_v| / |S| * H(S_v).
double InfoGain(const Dataset& dataset, std::size_t attribute,
                const SplitSpec& split);

struct TreeParams {
  // Nodes smaller than this become leaves, and numeric thresholds must leave
  // at least this many rows on each side.
  std::size_t min_leaf_size = 2;
  std::optional<std::size_t> max_depth;
  // Re-checks gain non-negativity and optimality of every chosen split.
  bool audit = false;

  void Validate() const;
};

struct TreeNode {
  struct Test {
    std::size_t attribute = 0;
    AttributeKind kind = AttributeKind::kNumeric;
    double threshold = 0.0;           // numeric tests
    std::vector<std::string> values;  // categorical tests, sorted
  };

  // Absent on leaves. Numeric tests own children {<=, >}; categorical tests
  // own one child per value followed by the fallback child.
  std::optional<Test> test;
  std::vector<TreeNode> children;
  // Majority training label at this node (the prediction on leaves).
  std::string label;
  std::size_t count = 0;
  // Whether `label` came from a random tie break.
  bool tie_broken = false;

  bool is_leaf() const { return !test.has_value(); }
  bool operator==(const TreeNode& other) const;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(TreeNode root, std::vector<Attribute> schema, TreeParams params)
      : root_(std::move(root)),
        schema_(std::move(schema)),
        params_(params) {}

  const TreeNode& root() const { return root_; }
  const std::vector<Attribute>& schema() const { return schema_; }
  const TreeParams& params() const { return params_; }
  std::string SchemaFingerprint() const;

  std::size_t NodeCount() const;
  std::size_t LeafCount() const;
  std::size_t Depth() const;

 private:
  TreeNode root_;
  std::vector<Attribute> schema_;
  TreeParams params_;
};

// Greedy top-down induction. At each node the attribute and threshold with
// maximal gain win; ties go to the lowest attribute index, then the lowest
// threshold. A node becomes a leaf when it is pure, smaller than
// min_leaf_size, at max_depth, or when no candidate split has positive gain.
DecisionTree TrainTree(const Dataset& dataset, const TreeParams& params,
                       RandomSource& rng);

std::string Classify(const DecisionTree& tree, const Instance& instance);

}  // namespace shadowprobe

#endif  // SHADOWPROBE_DTREE_H_
