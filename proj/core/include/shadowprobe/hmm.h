#ifndef SHADOWPROBE_HMM_H_
#define SHADOWPROBE_HMM_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "shadowprobe/matrix.h"

namespace shadowprobe {

inline constexpr double kDefaultVarFloor = 1e-4;

// Left-to-right HMM with one diagonal Gaussian per emitting state. Paths are
// forced to enter at state 0 and to finish in state n-1; state i may only stay
// at i or advance to i+1.
struct GaussianHmm {
  std::size_t n_states = 0;
  std::size_t dim = 0;
  Matrix trans;              // n x n
  std::vector<Vector> means;  // n x dim
  std::vector<Vector> vars;   // n x dim, each >= var_floor
  double var_floor = kDefaultVarFloor;

  // Throws ContractError when a structural invariant fails.
  void Validate() const;
  bool operator==(const GaussianHmm&) const = default;
};

struct ObservationSequence {
  std::vector<Vector> frames;

  std::size_t length() const { return frames.size(); }
  std::size_t dim() const { return frames.empty() ? 0 : frames.front().size(); }
  bool operator==(const ObservationSequence&) const = default;
};

// One HMM per phoneme, all sharing the frame dimension.
class AcousticModel {
 public:
  AcousticModel() = default;
  explicit AcousticModel(std::map<std::string, GaussianHmm> phonemes);

  std::size_t dim() const { return dim_; }
  const std::map<std::string, GaussianHmm>& phonemes() const { return phonemes_; }
  const GaussianHmm& at(const std::string& phoneme) const;
  std::vector<std::string> PhonemeNames() const;

  bool operator==(const AcousticModel&) const = default;

 private:
  std::size_t dim_ = 0;
  std::map<std::string, GaussianHmm> phonemes_;
};

// log N(frame; means[state], diag(vars[state])).
double LogEmission(const GaussianHmm& model, std::size_t state,
                   std::span<const double> frame);

// Every state gets the global mean and (floored) population variance of all
// frames; transitions start at self 0.6 / advance 0.4, final state self 1.0.
GaussianHmm FlatStart(std::span<const ObservationSequence> sequences,
                      std::size_t n_states, double var_floor = kDefaultVarFloor);

struct ViterbiResult {
  std::vector<std::size_t> path;
  double log_prob = 0.0;
};

// Max-product decoding in the log domain. Throws InfeasiblePathError when no
// path reaches the final state (e.g. the sequence is shorter than n_states).
ViterbiResult Viterbi(const GaussianHmm& model, const ObservationSequence& seq);

// log p(seq) summed over all feasible paths.
double ForwardLogLik(const GaussianHmm& model, const ObservationSequence& seq);

// gamma(t, i) = P(state_t = i | seq), T x n.
Matrix StatePosteriors(const GaussianHmm& model, const ObservationSequence& seq);

struct TrainingTrace {
  // Total objective of the model entering each iteration plus the final one:
  // Viterbi log-likelihood for ViterbiTrain, forward log-likelihood for
  // BaumWelch.
  std::vector<double> log_likelihood;
};

// Hard-alignment re-estimation. Non-decreasing total Viterbi log-likelihood
// is enforced (InvariantViolation otherwise). States that receive no frames
// keep their previous parameters.
GaussianHmm ViterbiTrain(const GaussianHmm& model,
                         std::span<const ObservationSequence> sequences,
                         std::size_t iters, TrainingTrace* trace = nullptr);

// EM with forward-backward posteriors; total forward log-likelihood is
// required to be non-decreasing within 1e-8 (relative).
GaussianHmm BaumWelch(const GaussianHmm& model,
                      std::span<const ObservationSequence> sequences,
                      std::size_t iters, TrainingTrace* trace = nullptr);

// One HMM per phoneme: flat start, viterbi_iters of ViterbiTrain, then
// baum_welch_iters of BaumWelch.
AcousticModel TrainAcousticModel(
    const std::map<std::string, std::vector<ObservationSequence>>& corpus,
    std::size_t n_states, std::size_t viterbi_iters,
    std::size_t baum_welch_iters = 0, double var_floor = kDefaultVarFloor);

}  // namespace shadowprobe

#endif  // SHADOWPROBE_HMM_H_
