#ifndef SHADOWPROBE_RANDOM_H_
#define SHADOWPROBE_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace shadowprobe {

// Deterministic randomness for every stochastic operation in the library.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. None of the <random> distributions are used because their
// algorithms are implementation-defined; the transforms below are:
//
//   Uniform()       (NextU64() >> 11) * 2^-53, a double in [0, 1).
//   UniformIndex(n) rejection sampling on NextU64() with the largest multiple
//                   of n as threshold (unbiased).
//   Normal()        Marsaglia polar method; the second variate of each pair is
//                   cached and returned by the next call.
//   Split()         a child source seeded with SplitMix64(NextU64()).
//
// A RandomSource has a single owner. Code that needs parallel streams calls
// Split() once per worker, in a fixed order, before fanning out.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t NextU64();
  double Uniform();
  double Uniform(double lo, double hi);
  std::size_t UniformIndex(std::size_t n);
  double Normal();
  double Normal(double mean, double stddev);
  bool Bernoulli(double p);
  // Index drawn with probability proportional to `weights`.
  std::size_t Categorical(std::span<const double> weights);

  RandomSource Split();
  std::uint64_t SplitSeed();

  // Fisher-Yates, high index to low.
  template <typename T>
  void Shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = UniformIndex(i);
      std::swap(items[i - 1], items[j]);
    }
  }
  template <typename T>
  void Shuffle(std::vector<T>& items) {
    Shuffle(std::span<T>(items));
  }

  // `count` distinct indices from [0, n), in draw order.
  std::vector<std::size_t> SampleWithoutReplacement(std::size_t n,
                                                    std::size_t count);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t SplitMix64(std::uint64_t x);

}  // namespace shadowprobe

#endif  // SHADOWPROBE_RANDOM_H_
