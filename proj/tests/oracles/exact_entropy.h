#ifndef SHADOWPROBE_TESTS_ORACLES_EXACT_ENTROPY_H_
#define SHADOWPROBE_TESTS_ORACLES_EXACT_ENTROPY_H_

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace shadowprobe::oracles {

using BigFloat = boost::multiprecision::cpp_bin_float_50;
using Rational = boost::multiprecision::cpp_rational;

// -sum p log2 p with every p kept as an exact rational until the logarithm.
inline BigFloat ExactEntropy(const std::vector<std::size_t>& counts) {
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  BigFloat h = 0;
  if (total == 0) return h;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const Rational p(static_cast<long long>(c), static_cast<long long>(total));
    const BigFloat pf(p);
    h -= pf * log(pf) / log(BigFloat(2));
  }
  return h;
}

inline BigFloat ExactEntropy(const std::vector<std::string>& labels) {
  std::map<std::string, std::size_t> m;
  for (const auto& l : labels) ++m[l];
  std::vector<std::size_t> counts;
  for (const auto& [k, v] : m) counts.push_back(v);
  return ExactEntropy(counts);
}

// Gain of an explicit partition: `branch[i]` names the child of row i.
inline BigFloat ExactGain(const std::vector<std::string>& labels, const std::vector<int>& branch) {
  std::map<int, std::vector<std::string>> parts;
  for (std::size_t i = 0; i < labels.size(); ++i) parts[branch[i]].push_back(labels[i]);
  BigFloat g = ExactEntropy(labels);
  for (const auto& [b, part] : parts) {
    const Rational w(static_cast<long long>(part.size()), static_cast<long long>(labels.size()));
    g -= BigFloat(w) * ExactEntropy(part);
  }
  return g;
}

}  // namespace shadowprobe::oracles

#endif  // SHADOWPROBE_TESTS_ORACLES_EXACT_ENTROPY_H_
