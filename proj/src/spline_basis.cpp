#include "draftval/spline_basis.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace draftval {

BasisRow evaluate_basis(double x) {
  if (!(x >= SplineBasis::lower && x <= SplineBasis::upper)) {
    throw std::domain_error("spline basis: x=" + std::to_string(x) + " outside [1,256]");
  }
  const double t = (x - SplineBasis::lower) / (SplineBasis::upper - SplineBasis::lower);
  const double s = 1.0 - t;
  return {s * s * s, 3.0 * t * s * s, 3.0 * t * t * s, t * t * t};
}

const std::array<BasisRow, kNumPicks>& basis_table() {
  static const std::array<BasisRow, kNumPicks> table = [] {
    std::array<BasisRow, kNumPicks> t{};
    for (std::size_t i = 0; i < kNumPicks; ++i) t[i] = evaluate_basis(static_cast<double>(i + 1));
    return t;
  }();
  return table;
}

}  // namespace draftval
