#pragma once

#include <cstddef>

namespace gael::kernels {

// Inner-loop kernels behind all tensor arithmetic. Every entry has a scalar
// reference implementation and may have SIMD variants; the backend is chosen
// once at runtime (CPU detection, overridable via set_backend or the
// GAEL_KERNELS environment variable).
//
// Bit-exactness contract: every variant of a kernel must produce results
// bit-identical to the scalar reference. For elementwise kernels this is
// automatic (one rounded operation per element). For kernels that reduce,
// the reference itself is written in the lane-partial order the vector
// units use, so all variants agree:
//
//   * matmul_nn / matmul_tn_acc / colsum_acc accumulate each output element
//     with one fma/add per step of the contraction index, in ascending
//     order. Blocking over the independent indices never reorders the
//     per-element chain.
//   * dot / reduce_sum / matmul_nt_acc keep four running partials s0..s3,
//     lane t accumulating elements with index ≡ t (mod 4) over the leading
//     multiple-of-4 range, combine as (s0+s2)+(s1+s3), then fold the tail
//     sequentially. This matches a 256-bit accumulator split low/high and
//     summed pairwise.
//
// Multiply-adds are fused (std::fma / vfmadd) in both paths; the build
// disables implicit contraction so no other fma sneaks in.
struct KernelTable {
    const char* name;

    // elementwise, out may not alias inputs unless identical op
    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    void (*sub)(const double* a, const double* b, double* out, std::size_t n);
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    void (*mul_acc)(const double* a, const double* b, double* acc, std::size_t n);   // acc += a.*b
    void (*scale)(const double* a, double c, double* out, std::size_t n);            // out = c*a
    void (*scale_acc)(const double* a, double c, double* acc, std::size_t n);        // acc += c*a
    void (*acc)(const double* a, double* acc, std::size_t n);                        // acc += a

    // leaky-ReLU forward, gradient accumulation, and mask multiply.
    // slope applies where the gate input is <= 0.
    void (*leaky_relu)(const double* x, double slope, double* out, std::size_t n);
    void (*leaky_relu_grad_acc)(const double* x, const double* g, double slope,
                                double* acc, std::size_t n);                         // acc += g .* phi'(x)
    void (*leaky_mask_mul)(const double* gate, const double* v, double slope,
                           double* out, std::size_t n);                              // out = v .* phi'(gate)

    // reductions (lane-partial order, see above)
    double (*reduce_sum)(const double* x, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);

    // matrix products, row-major
    // C = A(m x k) * B(k x n), C overwritten
    void (*matmul_nn)(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);
    // C(m x k) += A(m x n) * B(k x n)^T   (row-by-row dots)
    void (*matmul_nt_acc)(const double* a, const double* b, double* c,
                          std::size_t m, std::size_t n, std::size_t k);
    // C(k x n) += A(m x k)^T * B(m x n)   (rank-1 accumulation over rows)
    void (*matmul_tn_acc)(const double* a, const double* b, double* c,
                          std::size_t m, std::size_t k, std::size_t n);
    // acc(n) += column sums of A(m x n)
    void (*colsum_acc)(const double* a, double* acc, std::size_t m, std::size_t n);
    // C(m x n) += row vector b(n) added to every row
    void (*add_rowvec)(double* c, const double* b, std::size_t m, std::size_t n);
};

enum class Backend { Auto, Scalar, Avx2 };

// Active table; resolved on first use.
const KernelTable& active();

// Force a backend. Backend::Avx2 throws std::runtime_error if unsupported
// by the CPU or not compiled in. Backend::Auto restores detection.
void set_backend(Backend b);
Backend active_backend();

const KernelTable& scalar_table();
// Best SIMD table compiled in and supported at runtime, or nullptr.
const KernelTable* simd_table();

}  // namespace gael::kernels
