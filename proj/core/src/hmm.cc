#include "shadowprobe/hmm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "shadowprobe/error.h"

namespace shadowprobe {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double SafeLog(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

double LogSumExp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

bool MonotoneWithin(double previous, double current) {
  return current >= previous - 1e-8 * std::max(1.0, std::abs(previous));
}

void CheckSequence(const GaussianHmm& model, const ObservationSequence& seq) {
  if (seq.frames.empty()) throw ContractError("empty observation sequence");
  for (const Vector& f : seq.frames) {
    if (f.size() != model.dim) {
      throw ContractError("observation frame dimension " +
                          std::to_string(f.size()) + " does not match model " +
                          std::to_string(model.dim));
    }
  }
  if (seq.frames.size() < model.n_states) {
    throw InfeasiblePathError("sequence of length " +
                              std::to_string(seq.frames.size()) +
                              " cannot traverse " +
                              std::to_string(model.n_states) + " states");
  }
}

// Per-sequence cache of log emissions, T x n.
Matrix EmissionTable(const GaussianHmm& model, const ObservationSequence& seq) {
  Matrix table(seq.length(), model.n_states);
  for (std::size_t t = 0; t < seq.length(); ++t) {
    for (std::size_t i = 0; i < model.n_states; ++i) {
      table(t, i) = LogEmission(model, i, seq.frames[t]);
    }
  }
  return table;
}

struct LogTransitions {
  std::vector<double> stay;     // log a_ii
  std::vector<double> advance;  // log a_i,i+1
};

LogTransitions LogTrans(const GaussianHmm& model) {
  LogTransitions lt;
  lt.stay.resize(model.n_states);
  lt.advance.assign(model.n_states, kNegInf);
  for (std::size_t i = 0; i < model.n_states; ++i) {
    lt.stay[i] = SafeLog(model.trans(i, i));
    if (i + 1 < model.n_states) lt.advance[i] = SafeLog(model.trans(i, i + 1));
  }
  return lt;
}

Matrix ForwardTable(const GaussianHmm& model, const Matrix& emit,
                    const LogTransitions& lt) {
  const std::size_t T = emit.rows();
  const std::size_t n = model.n_states;
  Matrix alpha(T, n, kNegInf);
  alpha(0, 0) = emit(0, 0);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = alpha(t - 1, i) + lt.stay[i];
      if (i > 0) v = LogSumExp(v, alpha(t - 1, i - 1) + lt.advance[i - 1]);
      alpha(t, i) = v == kNegInf ? kNegInf : v + emit(t, i);
    }
  }
  return alpha;
}

Matrix BackwardTable(const GaussianHmm& model, const Matrix& emit,
                     const LogTransitions& lt) {
  const std::size_t T = emit.rows();
  const std::size_t n = model.n_states;
  Matrix beta(T, n, kNegInf);
  beta(T - 1, n - 1) = 0.0;
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = lt.stay[i] + emit(t + 1, i) + beta(t + 1, i);
      if (i + 1 < n) {
        v = LogSumExp(v, lt.advance[i] + emit(t + 1, i + 1) + beta(t + 1, i + 1));
      }
      beta(t, i) = v;
    }
  }
  return beta;
}

double TotalLogLik(const GaussianHmm& model,
                   std::span<const ObservationSequence> sequences,
                   bool viterbi) {
  double total = 0.0;
  for (const auto& seq : sequences) {
    total += viterbi ? Viterbi(model, seq).log_prob : ForwardLogLik(model, seq);
  }
  return total;
}

void CheckTrainingInput(const GaussianHmm& model,
                        std::span<const ObservationSequence> sequences) {
  model.Validate();
  if (sequences.empty()) throw ContractError("no training sequences");
  for (const auto& seq : sequences) CheckSequence(model, seq);
}

}  // namespace

void GaussianHmm::Validate() const {
  if (n_states == 0 || dim == 0) throw ContractError("GaussianHmm: empty model");
  if (!(var_floor > 0.0)) throw ContractError("GaussianHmm: var_floor must be > 0");
  if (trans.rows() != n_states || trans.cols() != n_states) {
    throw ContractError("GaussianHmm: transition matrix shape");
  }
  if (means.size() != n_states || vars.size() != n_states) {
    throw ContractError("GaussianHmm: per-state parameter count");
  }
  for (std::size_t i = 0; i < n_states; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n_states; ++j) {
      const double a = trans(i, j);
      if (a < 0.0) throw ContractError("GaussianHmm: negative transition");
      if ((j < i || j > i + 1) && a != 0.0) {
        throw ContractError("GaussianHmm: transition outside left-to-right topology");
      }
      row += a;
    }
    if (std::abs(row - 1.0) > 1e-9) {
      throw ContractError("GaussianHmm: transition row " + std::to_string(i) +
                          " does not sum to 1");
    }
    if (means[i].size() != dim || vars[i].size() != dim) {
      throw ContractError("GaussianHmm: state parameter dimension");
    }
    for (double v : vars[i]) {
      if (!(v >= var_floor)) throw ContractError("GaussianHmm: variance below floor");
    }
  }
}

AcousticModel::AcousticModel(std::map<std::string, GaussianHmm> phonemes)
    : phonemes_(std::move(phonemes)) {
  if (phonemes_.empty()) throw ContractError("AcousticModel: no phonemes");
  dim_ = phonemes_.begin()->second.dim;
  for (const auto& [name, hmm] : phonemes_) {
    if (hmm.dim != dim_) {
      throw ContractError("AcousticModel: phoneme '" + name +
                          "' has a different dimension");
    }
  }
}

const GaussianHmm& AcousticModel::at(const std::string& phoneme) const {
  auto it = phonemes_.find(phoneme);
  if (it == phonemes_.end()) {
    throw ContractError("AcousticModel: unknown phoneme '" + phoneme + "'");
  }
  return it->second;
}

std::vector<std::string> AcousticModel::PhonemeNames() const {
  std::vector<std::string> names;
  for (const auto& [name, hmm] : phonemes_) names.push_back(name);
  return names;
}

double LogEmission(const GaussianHmm& model, std::size_t state,
                   std::span<const double> frame) {
  const Vector& mu = model.means[state];
  const Vector& var = model.vars[state];
  double acc = 0.0;
  for (std::size_t d = 0; d < frame.size(); ++d) {
    const double diff = frame[d] - mu[d];
    acc += std::log(2.0 * std::numbers::pi * var[d]) + diff * diff / var[d];
  }
  return -0.5 * acc;
}

GaussianHmm FlatStart(std::span<const ObservationSequence> sequences,
                      std::size_t n_states, double var_floor) {
  if (n_states == 0) throw ContractError("FlatStart: n_states must be >= 1");
  if (!(var_floor > 0.0)) throw ContractError("FlatStart: var_floor must be > 0");
  std::size_t dim = 0;
  std::size_t count = 0;
  for (const auto& seq : sequences) {
    for (const Vector& f : seq.frames) {
      if (dim == 0) dim = f.size();
      if (f.size() != dim || dim == 0) {
        throw ContractError("FlatStart: inconsistent frame dimension");
      }
      ++count;
    }
  }
  if (count == 0) throw ContractError("FlatStart: no frames");

  Vector mean(dim, 0.0);
  for (const auto& seq : sequences) {
    for (const Vector& f : seq.frames) {
      for (std::size_t d = 0; d < dim; ++d) mean[d] += f[d];
    }
  }
  for (double& m : mean) m /= static_cast<double>(count);
  Vector var(dim, 0.0);
  for (const auto& seq : sequences) {
    for (const Vector& f : seq.frames) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = f[d] - mean[d];
        var[d] += diff * diff;
      }
    }
  }
  for (double& v : var) v = std::max(v / static_cast<double>(count), var_floor);

  GaussianHmm model;
  model.n_states = n_states;
  model.dim = dim;
  model.var_floor = var_floor;
  model.trans = Matrix(n_states, n_states, 0.0);
  for (std::size_t i = 0; i + 1 < n_states; ++i) {
    model.trans(i, i) = 0.6;
    model.trans(i, i + 1) = 0.4;
  }
  model.trans(n_states - 1, n_states - 1) = 1.0;
  model.means.assign(n_states, mean);
  model.vars.assign(n_states, var);
  return model;
}

ViterbiResult Viterbi(const GaussianHmm& model, const ObservationSequence& seq) {
  CheckSequence(model, seq);
  const Matrix emit = EmissionTable(model, seq);
  const LogTransitions lt = LogTrans(model);
  const std::size_t T = seq.length();
  const std::size_t n = model.n_states;
  Matrix delta(T, n, kNegInf);
  std::vector<std::vector<unsigned char>> advanced(T, std::vector<unsigned char>(n, 0));
  delta(0, 0) = emit(0, 0);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      double stay = delta(t - 1, i) + lt.stay[i];
      double adv = i > 0 ? delta(t - 1, i - 1) + lt.advance[i - 1] : kNegInf;
      double best = stay;
      if (adv > stay) {
        best = adv;
        advanced[t][i] = 1;
      }
      delta(t, i) = best == kNegInf ? kNegInf : best + emit(t, i);
    }
  }
  ViterbiResult result;
  result.log_prob = delta(T - 1, n - 1);
  if (result.log_prob == kNegInf) {
    throw InfeasiblePathError("no feasible state path reaches the final state");
  }
  result.path.resize(T);
  std::size_t state = n - 1;
  for (std::size_t t = T; t-- > 0;) {
    result.path[t] = state;
    if (t > 0 && advanced[t][state]) --state;
  }
  return result;
}

double ForwardLogLik(const GaussianHmm& model, const ObservationSequence& seq) {
  CheckSequence(model, seq);
  const Matrix alpha = ForwardTable(model, EmissionTable(model, seq), LogTrans(model));
  const double ll = alpha(seq.length() - 1, model.n_states - 1);
  if (ll == kNegInf) {
    throw InfeasiblePathError("no feasible state path reaches the final state");
  }
  return ll;
}

Matrix StatePosteriors(const GaussianHmm& model, const ObservationSequence& seq) {
  CheckSequence(model, seq);
  const Matrix emit = EmissionTable(model, seq);
  const LogTransitions lt = LogTrans(model);
  const Matrix alpha = ForwardTable(model, emit, lt);
  const Matrix beta = BackwardTable(model, emit, lt);
  const double log_z = alpha(seq.length() - 1, model.n_states - 1);
  if (log_z == kNegInf) {
    throw InfeasiblePathError("no feasible state path reaches the final state");
  }
  Matrix gamma(seq.length(), model.n_states, 0.0);
  for (std::size_t t = 0; t < seq.length(); ++t) {
    for (std::size_t i = 0; i < model.n_states; ++i) {
      const double v = alpha(t, i) + beta(t, i);
      gamma(t, i) = v == kNegInf ? 0.0 : std::exp(v - log_z);
    }
  }
  return gamma;
}

GaussianHmm ViterbiTrain(const GaussianHmm& model,
                         std::span<const ObservationSequence> sequences,
                         std::size_t iters, TrainingTrace* trace) {
  if (iters == 0) return model;
  CheckTrainingInput(model, sequences);
  const std::size_t n = model.n_states;
  const std::size_t dim = model.dim;
  GaussianHmm current = model;
  double previous = 0.0;
  for (std::size_t iter = 0; iter <= iters; ++iter) {
    std::vector<std::vector<const Vector*>> frames(n);
    std::vector<double> stay(n, 0.0), advance(n, 0.0);
    double total = 0.0;
    for (const auto& seq : sequences) {
      const ViterbiResult vr = Viterbi(current, seq);
      total += vr.log_prob;
      for (std::size_t t = 0; t < seq.length(); ++t) {
        frames[vr.path[t]].push_back(&seq.frames[t]);
        if (t + 1 < seq.length()) {
          (vr.path[t + 1] == vr.path[t] ? stay : advance)[vr.path[t]] += 1.0;
        }
      }
    }
    if (trace) trace->log_likelihood.push_back(total);
    if (iter > 0 && !MonotoneWithin(previous, total)) {
      throw InvariantViolation("ViterbiTrain: log-likelihood decreased");
    }
    previous = total;
    if (iter == iters) break;

    GaussianHmm next = current;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& fs = frames[i];
      if (fs.empty()) continue;
      const double count = static_cast<double>(fs.size());
      Vector mean(dim, 0.0);
      for (const Vector* f : fs) {
        for (std::size_t d = 0; d < dim; ++d) mean[d] += (*f)[d];
      }
      for (double& m : mean) m /= count;
      Vector var(dim, 0.0);
      for (const Vector* f : fs) {
        for (std::size_t d = 0; d < dim; ++d) {
          const double diff = (*f)[d] - mean[d];
          var[d] += diff * diff;
        }
      }
      for (double& v : var) v = std::max(v / count, current.var_floor);
      next.means[i] = std::move(mean);
      next.vars[i] = std::move(var);
      if (i + 1 < n) {
        const double out = stay[i] + advance[i];
        if (out > 0.0) {
          next.trans(i, i) = stay[i] / out;
          next.trans(i, i + 1) = 1.0 - next.trans(i, i);
        }
      }
    }
    current = std::move(next);
  }
  return current;
}

GaussianHmm BaumWelch(const GaussianHmm& model,
                      std::span<const ObservationSequence> sequences,
                      std::size_t iters, TrainingTrace* trace) {
  if (iters == 0) return model;
  CheckTrainingInput(model, sequences);
  const std::size_t n = model.n_states;
  const std::size_t dim = model.dim;
  GaussianHmm current = model;
  double previous = 0.0;
  for (std::size_t iter = 0; iter <= iters; ++iter) {
    std::vector<double> occupancy(n, 0.0);
    std::vector<Vector> first(n, Vector(dim, 0.0));
    std::vector<Vector> second(n, Vector(dim, 0.0));
    std::vector<double> stay(n, 0.0), advance(n, 0.0);
    const LogTransitions lt = LogTrans(current);
    double total = 0.0;
    for (const auto& seq : sequences) {
      const Matrix emit = EmissionTable(current, seq);
      const Matrix alpha = ForwardTable(current, emit, lt);
      const Matrix beta = BackwardTable(current, emit, lt);
      const std::size_t T = seq.length();
      const double log_z = alpha(T - 1, n - 1);
      if (log_z == kNegInf) {
        throw InfeasiblePathError("no feasible state path reaches the final state");
      }
      total += log_z;
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
          const double lv = alpha(t, i) + beta(t, i);
          if (lv == kNegInf) continue;
          const double g = std::exp(lv - log_z);
          occupancy[i] += g;
          const Vector& f = seq.frames[t];
          for (std::size_t d = 0; d < dim; ++d) {
            const double c = f[d] - current.means[i][d];
            first[i][d] += g * c;
            second[i][d] += g * c * c;
          }
          if (t + 1 < T) {
            const double s = alpha(t, i) + lt.stay[i] + emit(t + 1, i) +
                             beta(t + 1, i);
            if (s != kNegInf) stay[i] += std::exp(s - log_z);
            if (i + 1 < n) {
              const double a = alpha(t, i) + lt.advance[i] + emit(t + 1, i + 1) +
                               beta(t + 1, i + 1);
              if (a != kNegInf) advance[i] += std::exp(a - log_z);
            }
          }
        }
      }
    }
    if (trace) trace->log_likelihood.push_back(total);
    if (iter > 0 && !MonotoneWithin(previous, total)) {
      throw InvariantViolation("BaumWelch: log-likelihood decreased");
    }
    previous = total;
    if (iter == iters) break;

    GaussianHmm next = current;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(occupancy[i] > 0.0)) continue;
      for (std::size_t d = 0; d < dim; ++d) {
        const double shift = first[i][d] / occupancy[i];
        next.means[i][d] = current.means[i][d] + shift;
        next.vars[i][d] = std::max(second[i][d] / occupancy[i] - shift * shift,
                                   current.var_floor);
      }
      if (i + 1 < n) {
        const double out = stay[i] + advance[i];
        if (out > 0.0) {
          next.trans(i, i) = stay[i] / out;
          next.trans(i, i + 1) = 1.0 - next.trans(i, i);
        }
      }
    }
    current = std::move(next);
  }
  return current;
}

AcousticModel TrainAcousticModel(
    const std::map<std::string, std::vector<ObservationSequence>>& corpus,
    std::size_t n_states, std::size_t viterbi_iters,
    std::size_t baum_welch_iters, double var_floor) {
  std::map<std::string, GaussianHmm> phonemes;
  for (const auto& [name, seqs] : corpus) {
    GaussianHmm hmm = FlatStart(seqs, n_states, var_floor);
    hmm = ViterbiTrain(hmm, seqs, viterbi_iters);
    hmm = BaumWelch(hmm, seqs, baum_welch_iters);
    phonemes.emplace(name, std::move(hmm));
  }
  return AcousticModel(std::move(phonemes));
}

}  // namespace shadowprobe
