#include "shadowprobe/svm.h"

#include <algorithm>
#include <cmath>

#include "shadowprobe/error.h"

namespace shadowprobe {
namespace {

bool AtLower(double alpha, double C) { return alpha <= 1e-12 * C; }
bool AtUpper(double alpha, double C) { return alpha >= C * (1.0 - 1e-12); }

class SmoSolver {
 public:
  SmoSolver(std::span<const Vector> x, std::span<const int> y,
            const KernelSpec& kernel, const SmoParams& params,
            RandomSource& rng)
      : x_(x),
        y_(y),
        kernel_(kernel),
        params_(params),
        rng_(rng),
        n_(x.size()),
        alpha_(n_, 0.0),
        error_(n_),
        diag_(n_),
        row_i_(n_),
        row_j_(n_) {
    for (std::size_t k = 0; k < n_; ++k) {
      error_[k] = -static_cast<double>(y_[k]);
      diag_[k] = KernelEval(kernel_, x_[k], x_[k]);
    }
  }

  SvmModel Solve() {
    const std::size_t max_passes =
        params_.max_passes > 0 ? params_.max_passes : 10 * n_;
    std::size_t idle_passes = 0;
    std::size_t total_passes = 0;
    bool converged = false;
    while (total_passes < params_.max_total_passes) {
      std::size_t changed = 0;
      std::size_t violators = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        if (!Violates(i)) continue;
        ++violators;
        std::size_t j = rng_.UniformIndex(n_ - 1);
        if (j >= i) ++j;
        if (TakeStep(i, j)) ++changed;
      }
      ++total_passes;
      if (changed == 0 && errors_dirty_) {
        // Re-derive the error cache exactly before trusting a quiet pass.
        RefreshErrors();
        violators = 0;
        for (std::size_t i = 0; i < n_; ++i) violators += Violates(i) ? 1 : 0;
      }
      if (violators == 0) {
        converged = true;
        break;
      }
      if (changed == 0) {
        if (++idle_passes >= max_passes) break;
      } else {
        idle_passes = 0;
      }
    }

    SvmModel model;
    model.kernel = kernel_;
    model.C = params_.C;
    model.tol = params_.tol;
    model.bias = bias_;
    model.converged = converged;
    model.passes = total_passes;
    model.updates = updates_;
    for (std::size_t k = 0; k < n_; ++k) {
      if (alpha_[k] > 0.0) {
        model.support_vectors.push_back({y_[k], x_[k], alpha_[k], k});
      }
    }
    return model;
  }

 private:
  bool Violates(std::size_t i) const {
    const double r = y_[i] * error_[i];
    return (r < -params_.tol && alpha_[i] < params_.C) ||
           (r > params_.tol && alpha_[i] > 0.0);
  }

  void RefreshErrors() {
    std::vector<std::size_t> active;
    for (std::size_t s = 0; s < n_; ++s) {
      if (alpha_[s] > 0.0) active.push_back(s);
    }
    for (std::size_t k = 0; k < n_; ++k) {
      double f = bias_;
      for (std::size_t s : active) {
        f += alpha_[s] * y_[s] * KernelEval(kernel_, x_[s], x_[k]);
      }
      error_[k] = f - y_[k];
    }
    errors_dirty_ = false;
  }

  double Clamp(double a) const {
    if (AtLower(a, params_.C)) return 0.0;
    if (AtUpper(a, params_.C)) return params_.C;
    return a;
  }

  bool TakeStep(std::size_t i, std::size_t j) {
    const double C = params_.C;
    const double ai_old = alpha_[i];
    const double aj_old = alpha_[j];
    const int yi = y_[i];
    const int yj = y_[j];
    const double ei = error_[i];
    const double ej = error_[j];
    double lo, hi;
    if (yi != yj) {
      lo = std::max(0.0, aj_old - ai_old);
      hi = std::min(C, C + aj_old - ai_old);
    } else {
      lo = std::max(0.0, ai_old + aj_old - C);
      hi = std::min(C, ai_old + aj_old);
    }
    if (hi - lo <= 1e-12 * C) return false;
    const double kij = KernelEval(kernel_, x_[i], x_[j]);
    const double eta = 2.0 * kij - diag_[i] - diag_[j];
    if (eta >= 0.0) return false;
    double aj = aj_old - yj * (ei - ej) / eta;
    aj = Clamp(std::clamp(aj, lo, hi));
    if (std::abs(aj - aj_old) < 1e-10 * (1.0 + aj + aj_old)) return false;
    const double ai = Clamp(ai_old + yi * yj * (aj_old - aj));
    const double dai = ai - ai_old;
    const double daj = aj - aj_old;

    const double b1 = bias_ - ei - yi * dai * diag_[i] - yj * daj * kij;
    const double b2 = bias_ - ej - yi * dai * kij - yj * daj * diag_[j];
    double b_new;
    if (ai > 0.0 && ai < C) {
      b_new = b1;
    } else if (aj > 0.0 && aj < C) {
      b_new = b2;
    } else {
      b_new = 0.5 * (b1 + b2);
    }
    const double db = b_new - bias_;
    for (std::size_t k = 0; k < n_; ++k) {
      row_i_[k] = KernelEval(kernel_, x_[i], x_[k]);
      row_j_[k] = KernelEval(kernel_, x_[j], x_[k]);
    }
    for (std::size_t k = 0; k < n_; ++k) {
      error_[k] += yi * dai * row_i_[k] + yj * daj * row_j_[k] + db;
    }
    alpha_[i] = ai;
    alpha_[j] = aj;
    bias_ = b_new;
    ++updates_;
    errors_dirty_ = true;

    if (params_.audit || params_.dual_trace) {
      const double w = DualObjective(alpha_, x_, y_, kernel_);
      if (params_.audit && w < last_dual_ - 1e-9 * (1.0 + std::abs(w))) {
        throw InvariantViolation("SmoTrain: dual objective decreased");
      }
      last_dual_ = w;
      if (params_.dual_trace) params_.dual_trace->push_back(w);
    }
    return true;
  }

  std::span<const Vector> x_;
  std::span<const int> y_;
  KernelSpec kernel_;
  const SmoParams& params_;
  RandomSource& rng_;
  std::size_t n_;
  std::vector<double> alpha_;
  std::vector<double> error_;
  std::vector<double> diag_;
  std::vector<double> row_i_;
  std::vector<double> row_j_;
  double bias_ = 0.0;
  std::size_t updates_ = 0;
  double last_dual_ = 0.0;
  bool errors_dirty_ = false;
};

}  // namespace

const char* ToString(KernelKind kind) {
  switch (kind) {
    case KernelKind::kLinear: return "linear";
    case KernelKind::kPolynomial: return "polynomial";
    case KernelKind::kRbf: return "rbf";
    case KernelKind::kSigmoid: return "sigmoid";
  }
  return "unknown";
}

KernelKind KernelKindFromString(const std::string& name) {
  if (name == "linear") return KernelKind::kLinear;
  if (name == "polynomial") return KernelKind::kPolynomial;
  if (name == "rbf") return KernelKind::kRbf;
  if (name == "sigmoid") return KernelKind::kSigmoid;
  throw KindError("unknown kernel kind '" + name + "'");
}

void KernelSpec::Validate() const {
  if ((kind == KernelKind::kPolynomial || kind == KernelKind::kRbf) &&
      gamma < 0.0) {
    throw ContractError("KernelSpec: gamma must be >= 0");
  }
  if (kind == KernelKind::kPolynomial && degree < 1) {
    throw ContractError("KernelSpec: degree must be >= 1");
  }
}

double KernelEval(const KernelSpec& spec, std::span<const double> x,
                  std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ContractError("KernelEval: dimension mismatch (" +
                        std::to_string(x.size()) + " vs " +
                        std::to_string(y.size()) + ")");
  }
  switch (spec.kind) {
    case KernelKind::kLinear:
      return Dot(x, y);
    case KernelKind::kPolynomial: {
      const double base = spec.gamma * Dot(x, y) + spec.r;
      double out = 1.0;
      for (int d = 0; d < spec.degree; ++d) out *= base;
      return out;
    }
    case KernelKind::kRbf:
      return std::exp(-spec.gamma * SquaredDistance(x, y));
    case KernelKind::kSigmoid:
      return std::tanh(spec.gamma * Dot(x, y) + spec.r);
  }
  throw ContractError("KernelEval: unknown kernel");
}

SvmModel SmoTrain(std::span<const Vector> x, std::span<const int> y,
                  const KernelSpec& kernel, const SmoParams& params,
                  RandomSource& rng) {
  kernel.Validate();
  if (x.size() != y.size()) throw ContractError("SmoTrain: x/y size mismatch");
  if (!(params.C > 0.0)) throw ContractError("SmoTrain: C must be > 0");
  if (!(params.tol > 0.0)) throw ContractError("SmoTrain: tol must be > 0");
  bool has_pos = false, has_neg = false;
  for (int label : y) {
    if (label == 1) {
      has_pos = true;
    } else if (label == -1) {
      has_neg = true;
    } else {
      throw ContractError("SmoTrain: labels must be -1 or +1");
    }
  }
  if (!has_pos || !has_neg) {
    throw ContractError("SmoTrain: need at least one example of each class");
  }
  for (const Vector& v : x) {
    if (v.size() != x.front().size()) {
      throw ContractError("SmoTrain: ragged feature vectors");
    }
  }
  return SmoSolver(x, y, kernel, params, rng).Solve();
}

SvmModel SmoTrain(const Dataset& dataset, const KernelSpec& kernel,
                  const SmoParams& params, RandomSource& rng) {
  if (!dataset.labeled() || dataset.label_domain()->size() != 2) {
    throw ContractError("SmoTrain: dataset needs exactly two labels");
  }
  const auto& domain = *dataset.label_domain();
  const std::vector<Vector> x = dataset.NumericRows();
  std::vector<int> y(dataset.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = dataset.Label(i) == domain[0] ? -1 : 1;
  }
  SvmModel model = SmoTrain(x, y, kernel, params, rng);
  model.negative_label = domain[0];
  model.positive_label = domain[1];
  return model;
}

double SvmDecision(const SvmModel& model, std::span<const double> x) {
  if (!model.support_vectors.empty() && x.size() != model.dim()) {
    throw ContractError("SvmDecision: dimension mismatch");
  }
  double f = model.bias;
  for (const SupportVector& sv : model.support_vectors) {
    f += sv.alpha * sv.y * KernelEval(model.kernel, sv.x, x);
  }
  return f;
}

int SvmPredict(const SvmModel& model, std::span<const double> x) {
  return SvmDecision(model, x) >= 0.0 ? 1 : -1;
}

std::string SvmPredictLabel(const SvmModel& model, std::span<const double> x) {
  return SvmPredict(model, x) > 0 ? model.positive_label : model.negative_label;
}

std::vector<double> DenseAlphas(const SvmModel& model, std::size_t n) {
  std::vector<double> alpha(n, 0.0);
  for (const SupportVector& sv : model.support_vectors) {
    if (sv.index >= n) throw ContractError("DenseAlphas: index out of range");
    alpha[sv.index] = sv.alpha;
  }
  return alpha;
}

double DualObjective(std::span<const double> alpha, std::span<const Vector> x,
                     std::span<const int> y, const KernelSpec& kernel) {
  double linear = 0.0;
  double quadratic = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] == 0.0) continue;
    linear += alpha[i];
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      if (alpha[j] == 0.0) continue;
      quadratic += alpha[i] * alpha[j] * y[i] * y[j] * KernelEval(kernel, x[i], x[j]);
    }
  }
  return linear - 0.5 * quadratic;
}

KktReport KktAudit(const SvmModel& model, std::span<const Vector> x,
                   std::span<const int> y, double tol) {
  KktReport report;
  const std::vector<double> alpha = DenseAlphas(model, x.size());
  double balance = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    balance += alpha[i] * y[i];
    const double margin = y[i] * SvmDecision(model, x[i]);
    double violation = 0.0;
    if (alpha[i] == 0.0) {
      violation = std::max(0.0, (1.0 - tol) - margin);
    } else if (AtUpper(alpha[i], model.C)) {
      violation = std::max(0.0, margin - (1.0 + tol));
    } else {
      violation = std::max(0.0, std::abs(margin - 1.0) - tol);
    }
    if (violation > 0.0) {
      report.ok = false;
      ++report.violations;
    }
    report.max_violation = std::max(report.max_violation, violation);
  }
  report.equality_residual = std::abs(balance);
  return report;
}

}  // namespace shadowprobe
