#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace draftval {

// Objective with gradient: returns f(x) and writes df/dx into grad.
using GradObjective = std::function<double(std::span<const double> x, std::span<double> grad)>;
using PlainObjective = std::function<double(std::span<const double> x)>;

struct LbfgsOptions {
  int max_iterations = 500;
  double grad_tol = 1e-6;  // sup-norm
  int history = 10;
  // When no line search makes progress, the run still counts as converged if
  // the last quasi-Newton decrement is below this fraction of max(1, |f|).
  double rel_decrement_tol = 1e-12;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  double grad_sup_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string status;
};

// Limited-memory BFGS ascent with a strong-Wolfe line search. Never returns a
// point with a lower objective than x0.
LbfgsResult maximize_lbfgs(const GradObjective& f, std::vector<double> x0, const LbfgsOptions& options = {});

struct NelderMeadOptions {
  int max_evaluations = 20000;
  double f_tol = 1e-16;  // spread of simplex values
  double x_tol = 1e-11;  // simplex diameter
  double initial_step = 0.1;
  int restarts = 2;  // re-seed the simplex at the best vertex after convergence
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

// Derivative-free simplex minimization (standard reflection/expansion/
// contraction/shrink coefficients). Non-finite values are treated as +inf.
NelderMeadResult minimize_nelder_mead(const PlainObjective& f, std::vector<double> x0,
                                      const NelderMeadOptions& options = {});

}  // namespace draftval
