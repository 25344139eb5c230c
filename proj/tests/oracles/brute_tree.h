#ifndef SHADOWPROBE_TESTS_ORACLES_BRUTE_TREE_H_
#define SHADOWPROBE_TESTS_ORACLES_BRUTE_TREE_H_

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "exact_entropy.h"

namespace shadowprobe::oracles {

// Greedy numeric tree rebuilt with every gain evaluated exactly. Leaves keep
// the set of majority labels so random tie breaks can be accepted.
struct BruteNode {
  std::optional<std::size_t> attribute;
  double threshold = 0.0;
  std::unique_ptr<BruteNode> left, right;
  std::set<std::string> majority;
};

struct BruteTreeParams {
  std::size_t min_leaf_size = 2;
  std::optional<std::size_t> max_depth;
};

inline std::unique_ptr<BruteNode> BuildBruteTree(const std::vector<std::vector<double>>& x,
                                                 const std::vector<std::string>& y,
                                                 std::vector<std::size_t> rows,
                                                 const BruteTreeParams& p, std::size_t depth = 0) {
  auto node = std::make_unique<BruteNode>();
  std::map<std::string, std::size_t> counts;
  for (std::size_t r : rows) ++counts[y[r]];
  std::size_t top = 0;
  for (const auto& [l, c] : counts) top = std::max(top, c);
  for (const auto& [l, c] : counts) {
    if (c == top) node->majority.insert(l);
  }
  if (counts.size() <= 1 || rows.size() < p.min_leaf_size || (p.max_depth && depth >= *p.max_depth)) {
    return node;
  }
  std::vector<std::string> labels;
  for (std::size_t r : rows) labels.push_back(y[r]);
  BigFloat best_gain = 0;
  std::optional<std::pair<std::size_t, double>> best;
  for (std::size_t a = 0; a < x.front().size(); ++a) {
    std::set<double> distinct;
    for (std::size_t r : rows) distinct.insert(x[r][a]);
    std::vector<double> vals(distinct.begin(), distinct.end());
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      const double t = vals[i] + (vals[i + 1] - vals[i]) / 2.0;
      std::vector<int> branch;
      std::size_t nl = 0;
      for (std::size_t r : rows) {
        const bool left = x[r][a] <= t;
        branch.push_back(left ? 0 : 1);
        nl += left;
      }
      if (nl < p.min_leaf_size || rows.size() - nl < p.min_leaf_size) continue;
      const BigFloat g = ExactGain(labels, branch);
      if (g > best_gain) {
        best_gain = g;
        best = {a, t};
      }
    }
  }
  if (!best) return node;
  node->attribute = best->first;
  node->threshold = best->second;
  std::vector<std::size_t> l, r;
  for (std::size_t i : rows) (x[i][best->first] <= best->second ? l : r).push_back(i);
  node->left = BuildBruteTree(x, y, l, p, depth + 1);
  node->right = BuildBruteTree(x, y, r, p, depth + 1);
  return node;
}

inline const std::set<std::string>& BrutePredict(const BruteNode& root, const std::vector<double>& x) {
  const BruteNode* n = &root;
  while (n->attribute) n = x[*n->attribute] <= n->threshold ? n->left.get() : n->right.get();
  return n->majority;
}

}  // namespace shadowprobe::oracles

#endif  // SHADOWPROBE_TESTS_ORACLES_BRUTE_TREE_H_
