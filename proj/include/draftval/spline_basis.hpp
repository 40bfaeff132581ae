#pragma once

#include <array>

#include "draftval/types.hpp"

namespace draftval {

// Cubic B-spline basis of draft position with boundary knots (1, 256), no
// interior knots and an intercept column. With no interior knots the basis
// coincides with the degree-3 Bernstein polynomials in t = (x - 1) / 255.
struct SplineBasis {
  static constexpr int degree = 3;
  static constexpr int num_basis = 4;
  static constexpr double lower = 1.0;
  static constexpr double upper = 256.0;
};

using BasisRow = std::array<double, 4>;

// Throws std::domain_error for x outside [1, 256].
BasisRow evaluate_basis(double x);

// Rows for picks 1..256, computed once.
const std::array<BasisRow, kNumPicks>& basis_table();

}  // namespace draftval
