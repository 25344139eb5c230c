#ifndef SHADOWPROBE_MLP_H_
#define SHADOWPROBE_MLP_H_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "shadowprobe/matrix.h"
#include "shadowprobe/random.h"

namespace shadowprobe {

// Fully connected sigmoid network. weights[l] maps layer l to layer l+1 and
// has shape layer_sizes[l+1] x (layer_sizes[l] + 1); column 0 multiplies the
// constant bias input x0 = 1.
struct Mlp {
  std::vector<std::size_t> layer_sizes;
  std::vector<Matrix> weights;

  void Validate() const;
  bool operator==(const Mlp&) const = default;
};

// 1 / (1 + exp(-x)).
double Sigmoid(double x);

// Network with the given shape; weights uniform in [-0.5, 0.5].
Mlp MlpInit(std::vector<std::size_t> layer_sizes, RandomSource& rng);
// All weights zero.
Mlp MlpZeros(std::vector<std::size_t> layer_sizes);

struct ForwardResult {
  Vector output;
  // activations[0] is the input, activations.back() the output.
  std::vector<Vector> activations;
};

ForwardResult Forward(const Mlp& net, std::span<const double> input);

struct TrainingPair {
  Vector input;
  Vector target;
};

// Squared error 1/2 sum (o - t)^2 for one pair.
double PairError(const Mlp& net, const TrainingPair& pair);
double TotalSquaredError(const Mlp& net, std::span<const TrainingPair> pairs);

// dE/dW for E = PairError, same shapes as net.weights.
std::vector<Matrix> Gradient(const Mlp& net, const TrainingPair& pair);

struct BackpropParams {
  double learning_rate = 0.3;
  std::size_t epochs = 20000;
  // Total squared error before training and after every epoch.
  std::vector<double>* error_trace = nullptr;
};

// Stochastic gradient descent, one step per presented pair; the presentation
// order is reshuffled every epoch.
Mlp BackpropTrain(const Mlp& net, std::span<const TrainingPair> pairs,
                  const BackpropParams& params, RandomSource& rng);

}  // namespace shadowprobe

#endif  // SHADOWPROBE_MLP_H_
