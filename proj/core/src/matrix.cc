#include "shadowprobe/matrix.h"

#include "shadowprobe/error.h"

namespace shadowprobe {

double Dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("Dot: dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ContractError("SquaredDistance: dimension mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

}  // namespace shadowprobe
