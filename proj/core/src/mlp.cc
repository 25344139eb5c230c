#include "shadowprobe/mlp.h"

#include <cmath>
#include <numeric>
#include <string>

#include "shadowprobe/error.h"

namespace shadowprobe {
namespace {

void CheckShape(const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 2) throw ContractError("Mlp: need at least two layers");
  for (std::size_t s : sizes) {
    if (s == 0) throw ContractError("Mlp: empty layer");
  }
}

void CheckPair(const Mlp& net, const TrainingPair& pair) {
  if (pair.target.size() != net.layer_sizes.back()) {
    throw ContractError("Mlp: target length does not match output layer");
  }
}

}  // namespace

void Mlp::Validate() const {
  CheckShape(layer_sizes);
  if (weights.size() != layer_sizes.size() - 1) {
    throw ContractError("Mlp: one weight matrix per layer transition expected");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_sizes[l + 1] ||
        weights[l].cols() != layer_sizes[l] + 1) {
      throw ContractError("Mlp: weight matrix " + std::to_string(l) +
                          " has the wrong shape");
    }
  }
}

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mlp MlpZeros(std::vector<std::size_t> layer_sizes) {
  CheckShape(layer_sizes);
  Mlp net;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    net.weights.emplace_back(layer_sizes[l + 1], layer_sizes[l] + 1, 0.0);
  }
  net.layer_sizes = std::move(layer_sizes);
  return net;
}

Mlp MlpInit(std::vector<std::size_t> layer_sizes, RandomSource& rng) {
  Mlp net = MlpZeros(std::move(layer_sizes));
  for (Matrix& w : net.weights) {
    for (double& v : w.data()) v = rng.Uniform(-0.5, 0.5);
  }
  return net;
}

ForwardResult Forward(const Mlp& net, std::span<const double> input) {
  if (net.layer_sizes.empty() || input.size() != net.layer_sizes[0]) {
    throw ContractError("Forward: input length does not match input layer");
  }
  ForwardResult result;
  result.activations.emplace_back(input.begin(), input.end());
  for (const Matrix& w : net.weights) {
    const Vector& prev = result.activations.back();
    Vector next(w.rows());
    for (std::size_t j = 0; j < w.rows(); ++j) {
      double sum = w(j, 0);
      for (std::size_t i = 0; i < prev.size(); ++i) sum += w(j, i + 1) * prev[i];
      next[j] = Sigmoid(sum);
    }
    result.activations.push_back(std::move(next));
  }
  result.output = result.activations.back();
  return result;
}

double PairError(const Mlp& net, const TrainingPair& pair) {
  CheckPair(net, pair);
  const Vector out = Forward(net, pair.input).output;
  double e = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double d = out[k] - pair.target[k];
    e += d * d;
  }
  return 0.5 * e;
}

double TotalSquaredError(const Mlp& net, std::span<const TrainingPair> pairs) {
  double total = 0.0;
  for (const auto& p : pairs) total += PairError(net, p);
  return total;
}

std::vector<Matrix> Gradient(const Mlp& net, const TrainingPair& pair) {
  CheckPair(net, pair);
  const ForwardResult fr = Forward(net, pair.input);
  const std::size_t layers = net.weights.size();
  std::vector<Matrix> grad;
  grad.reserve(layers);
  for (const Matrix& w : net.weights) grad.emplace_back(w.rows(), w.cols(), 0.0);

  // delta = dE/dnet for the units of the current layer.
  Vector delta(fr.output.size());
  for (std::size_t k = 0; k < delta.size(); ++k) {
    const double o = fr.output[k];
    delta[k] = (o - pair.target[k]) * o * (1.0 - o);
  }
  for (std::size_t l = layers; l-- > 0;) {
    const Vector& in = fr.activations[l];
    const Matrix& w = net.weights[l];
    for (std::size_t j = 0; j < w.rows(); ++j) {
      grad[l](j, 0) = delta[j];
      for (std::size_t i = 0; i < in.size(); ++i) grad[l](j, i + 1) = delta[j] * in[i];
    }
    if (l == 0) break;
    Vector prev(in.size(), 0.0);
    for (std::size_t i = 0; i < in.size(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < w.rows(); ++j) s += w(j, i + 1) * delta[j];
      prev[i] = s * in[i] * (1.0 - in[i]);
    }
    delta = std::move(prev);
  }
  return grad;
}

Mlp BackpropTrain(const Mlp& net, std::span<const TrainingPair> pairs,
                  const BackpropParams& params, RandomSource& rng) {
  net.Validate();
  if (!(params.learning_rate > 0.0)) {
    throw ContractError("BackpropTrain: learning rate must be > 0");
  }
  for (const auto& p : pairs) {
    CheckPair(net, p);
    for (double t : p.target) {
      if (!(t > 0.0 && t < 1.0)) {
        throw ContractError("BackpropTrain: targets must lie in (0, 1)");
      }
    }
  }
  Mlp trained = net;
  if (params.error_trace) {
    params.error_trace->push_back(TotalSquaredError(trained, pairs));
  }
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.Shuffle(order);
    for (std::size_t idx : order) {
      const std::vector<Matrix> g = Gradient(trained, pairs[idx]);
      for (std::size_t l = 0; l < g.size(); ++l) {
        auto w = trained.weights[l].data();
        auto gl = g[l].data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= params.learning_rate * gl[i];
      }
    }
    if (params.error_trace) {
      params.error_trace->push_back(TotalSquaredError(trained, pairs));
    }
  }
  return trained;
}

}  // namespace shadowprobe
