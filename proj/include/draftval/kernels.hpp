#pragma once

#include <cstddef>

namespace draftval::kernels {

// Structure-of-arrays view over sufficient-statistic cells. Every cell is one
// (draft position, coefficient block) pair: n_bust observations at or below the
// bust cutoff, n_tail above it, and the sums of log y and log(1 - y) over the
// tail observations. `size` must be a multiple of 4; padding cells carry zero
// counts and zero sums.
struct CellBlock {
  const double* x = nullptr;
  const double* basis[4] = {nullptr, nullptr, nullptr, nullptr};
  const double* n_bust = nullptr;
  const double* n_tail = nullptr;
  const double* sum_log_y = nullptr;
  const double* sum_log1m_y = nullptr;
  std::size_t size = 0;
};

// Returns sum over cells of
//   n_bust*log(bp) + n_tail*(log(1-bp) + lgamma(phi) - lgamma(a) - lgamma(b))
//   + (a-1)*sum_log_y + (b-1)*sum_log1m_y,
// with a = mu*phi, b = (1-mu)*phi. coef holds
// (alpha0, alpha1, beta1..beta4, gamma0, gamma1). When grad is non-null the
// gradient with respect to coef is added into grad[0..8).
using CellLogLikFn = double (*)(const CellBlock& cells, const double* coef, double* grad);

// Evaluates bp, mu and phi at n points (n a multiple of 4).
using LinkFn = void (*)(const double* coef, const double* x, const double* const* basis, std::size_t n,
                        double* bp, double* mu, double* phi);

// Elementwise special functions over arbitrary n.
using UnaryFn = void (*)(const double* in, double* out, std::size_t n);

struct KernelSet {
  const char* name;
  CellLogLikFn cell_loglik;
  LinkFn links;
  UnaryFn exp;
  UnaryFn log;
  UnaryFn log1p;
  UnaryFn lgamma;
  UnaryFn digamma;
};

const KernelSet& scalar_kernels();

// Null when the AVX2 variant was not compiled in or the CPU lacks AVX2+FMA.
const KernelSet* avx2_kernels();

// Chosen once per process: DRAFTVAL_SIMD=scalar|avx2 forces a variant,
// otherwise the widest supported variant is used.
const KernelSet& active_kernels();

namespace detail {
const KernelSet& avx2_kernel_set();
}

}  // namespace draftval::kernels
