#ifndef SHADOWPROBE_SVM_H_
#define SHADOWPROBE_SVM_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "shadowprobe/dataset.h"
#include "shadowprobe/matrix.h"
#include "shadowprobe/random.h"

namespace shadowprobe {

enum class KernelKind { kLinear, kPolynomial, kRbf, kSigmoid };

const char* ToString(KernelKind kind);
KernelKind KernelKindFromString(const std::string& name);

//   linear      x'y
//   polynomial  (gamma x'y + r)^degree
//   rbf         exp(-gamma |x - y|^2)
//   sigmoid     tanh(gamma x'y + r)
struct KernelSpec {
  KernelKind kind = KernelKind::kLinear;
  double gamma = 1.0;
  double r = 0.0;
  int degree = 3;

  void Validate() const;
  bool operator==(const KernelSpec&) const = default;
};

double KernelEval(const KernelSpec& spec, std::span<const double> x,
                  std::span<const double> y);

struct SupportVector {
  int y = 1;           // -1 or +1
  Vector x;
  double alpha = 0.0;  // 0 < alpha <= C
  std::size_t index = 0;  // position in the training set

  bool operator==(const SupportVector&) const = default;
};

struct SvmModel {
  // Training order.
  std::vector<SupportVector> support_vectors;
  double bias = 0.0;
  KernelSpec kernel;
  double C = 1.0;
  double tol = 1e-3;
  bool converged = false;
  std::size_t passes = 0;
  std::size_t updates = 0;
  // Class names mapped to -1 and +1 when trained from a Dataset.
  std::string negative_label = "-1";
  std::string positive_label = "+1";

  std::size_t dim() const {
    return support_vectors.empty() ? 0 : support_vectors.front().x.size();
  }
  bool operator==(const SvmModel&) const = default;
};

struct SmoParams {
  double C = 1.0;
  double tol = 1e-3;
  // Consecutive passes without an accepted pair update before giving up.
  // Zero selects 10 * |ds|.
  std::size_t max_passes = 0;
  // Hard ceiling on total passes, whatever the progress.
  std::size_t max_total_passes = 200000;
  // Record the dual objective after each accepted update in `dual_trace` and
  // require it to be non-decreasing.
  bool audit = false;
  std::vector<double>* dual_trace = nullptr;
};

// Simplified SMO: every multiplier violating the KKT conditions by more than
// `tol` is paired with a uniformly drawn partner and the pair is optimized
// analytically. Stops when a pass finds no violator (converged) or after
// `max_passes` consecutive passes without an accepted update (not converged).
SvmModel SmoTrain(std::span<const Vector> x, std::span<const int> y,
                  const KernelSpec& kernel, const SmoParams& params,
                  RandomSource& rng);

// Label domain must have exactly two values; the first (sorted) maps to -1.
SvmModel SmoTrain(const Dataset& dataset, const KernelSpec& kernel,
                  const SmoParams& params, RandomSource& rng);

// f(x) = sum_i alpha_i y_i K(x_i, x) + b.
double SvmDecision(const SvmModel& model, std::span<const double> x);
// sign(f(x)) with sign(0) = +1.
int SvmPredict(const SvmModel& model, std::span<const double> x);
std::string SvmPredictLabel(const SvmModel& model, std::span<const double> x);

// Full multiplier vector over the training set (zeros for non-support
// vectors).
std::vector<double> DenseAlphas(const SvmModel& model, std::size_t n);

// W(alpha) = sum_i alpha_i - 1/2 sum_ij alpha_i alpha_j y_i y_j K(x_i, x_j).
double DualObjective(std::span<const double> alpha, std::span<const Vector> x,
                     std::span<const int> y, const KernelSpec& kernel);

struct KktReport {
  bool ok = true;
  double max_violation = 0.0;
  std::size_t violations = 0;
  double equality_residual = 0.0;  // |sum alpha_i y_i|
};

// Checks, with f recomputed from the model:
//   alpha = 0      =>  y f(x) >= 1 - tol
//   0 < alpha < C  =>  |y f(x) - 1| <= tol
//   alpha = C      =>  y f(x) <= 1 + tol
KktReport KktAudit(const SvmModel& model, std::span<const Vector> x,
                   std::span<const int> y, double tol);

}  // namespace shadowprobe

#endif  // SHADOWPROBE_SVM_H_
