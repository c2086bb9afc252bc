#include "gael/kernels.hpp"

#if defined(GAEL_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>
#include <cstring>

// AVX2+FMA variants. Each kernel reproduces the scalar reference bit for
// bit: elementwise kernels perform the same single rounded operation per
// element, contractions keep the per-element fma chain in ascending index
// order, and dot-style reductions use the shared lane-partial order
// (s0+s2)+(s1+s3) that the scalar reference is written in.

namespace gael::kernels {
namespace avx2 {

namespace {

// (s0+s2)+(s1+s3) for v = [s0,s1,s2,s3]
inline double hsum_lanes(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

}  // namespace

void add(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc(const double* a, const double* b, double* acc, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                                    _mm256_loadu_pd(acc + i));
        _mm256_storeu_pd(acc + i, v);
    }
    for (; i < n; ++i) acc[i] = std::fma(a[i], b[i], acc[i]);
}

void scale(const double* a, double c, double* out, std::size_t n) {
    __m256d cv = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(cv, _mm256_loadu_pd(a + i)));
    for (; i < n; ++i) out[i] = c * a[i];
}

void scale_acc(const double* a, double c, double* acc, std::size_t n) {
    __m256d cv = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(acc + i,
                         _mm256_fmadd_pd(cv, _mm256_loadu_pd(a + i), _mm256_loadu_pd(acc + i)));
    for (; i < n; ++i) acc[i] = std::fma(c, a[i], acc[i]);
}

void acc(const double* a, double* accv, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(accv + i, _mm256_add_pd(_mm256_loadu_pd(accv + i), _mm256_loadu_pd(a + i)));
    for (; i < n; ++i) accv[i] += a[i];
}

void leaky_relu(const double* x, double slope, double* out, std::size_t n) {
    __m256d sv = _mm256_set1_pd(slope);
    __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_loadu_pd(x + i);
        __m256d pos = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(_mm256_mul_pd(sv, xv), xv, pos));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_grad_acc(const double* x, const double* g, double slope, double* acc,
                         std::size_t n) {
    __m256d sv = _mm256_set1_pd(slope);
    __m256d ones = _mm256_set1_pd(1.0);
    __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d pos = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        __m256d d = _mm256_blendv_pd(sv, ones, pos);
        _mm256_storeu_pd(acc + i,
                         _mm256_fmadd_pd(_mm256_loadu_pd(g + i), d, _mm256_loadu_pd(acc + i)));
    }
    for (; i < n; ++i) acc[i] = std::fma(g[i], x[i] > 0.0 ? 1.0 : slope, acc[i]);
}

void leaky_mask_mul(const double* gate, const double* v, double slope, double* out,
                    std::size_t n) {
    __m256d sv = _mm256_set1_pd(slope);
    __m256d ones = _mm256_set1_pd(1.0);
    __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d pos = _mm256_cmp_pd(_mm256_loadu_pd(gate + i), zero, _CMP_GT_OQ);
        __m256d d = _mm256_blendv_pd(sv, ones, pos);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(v + i), d));
    }
    for (; i < n; ++i) out[i] = v[i] * (gate[i] > 0.0 ? 1.0 : slope);
}

double reduce_sum(const double* x, std::size_t n) {
    __m256d accv = _mm256_setzero_pd();
    std::size_t n4 = n & ~std::size_t{3};
    for (std::size_t i = 0; i < n4; i += 4) accv = _mm256_add_pd(accv, _mm256_loadu_pd(x + i));
    double r = hsum_lanes(accv);
    for (std::size_t i = n4; i < n; ++i) r += x[i];
    return r;
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d accv = _mm256_setzero_pd();
    std::size_t n4 = n & ~std::size_t{3};
    for (std::size_t i = 0; i < n4; i += 4)
        accv = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), accv);
    double r = hsum_lanes(accv);
    for (std::size_t i = n4; i < n; ++i) r = std::fma(a[i], b[i], r);
    return r;
}

// C = A(m x k) * B(k x n). Register-blocked 2 rows x 16 columns, contraction
// index innermost so each output element keeps an ascending-k fma chain.
void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n) {
    std::memset(c, 0, m * n * sizeof(double));
    std::size_t i = 0;
    for (; i + 2 <= m; i += 2) {
        const double* a0 = a + i * k;
        const double* a1 = a0 + k;
        double* c0 = c + i * n;
        double* c1 = c0 + n;
        std::size_t j = 0;
        for (; j + 16 <= n; j += 16) {
            __m256d q00 = _mm256_setzero_pd(), q01 = q00, q02 = q00, q03 = q00;
            __m256d q10 = q00, q11 = q00, q12 = q00, q13 = q00;
            for (std::size_t p = 0; p < k; ++p) {
                const double* brow = b + p * n + j;
                __m256d av0 = _mm256_set1_pd(a0[p]);
                __m256d av1 = _mm256_set1_pd(a1[p]);
                __m256d b0 = _mm256_loadu_pd(brow);
                __m256d b1 = _mm256_loadu_pd(brow + 4);
                __m256d b2 = _mm256_loadu_pd(brow + 8);
                __m256d b3 = _mm256_loadu_pd(brow + 12);
                q00 = _mm256_fmadd_pd(av0, b0, q00);
                q01 = _mm256_fmadd_pd(av0, b1, q01);
                q02 = _mm256_fmadd_pd(av0, b2, q02);
                q03 = _mm256_fmadd_pd(av0, b3, q03);
                q10 = _mm256_fmadd_pd(av1, b0, q10);
                q11 = _mm256_fmadd_pd(av1, b1, q11);
                q12 = _mm256_fmadd_pd(av1, b2, q12);
                q13 = _mm256_fmadd_pd(av1, b3, q13);
            }
            _mm256_storeu_pd(c0 + j, q00);
            _mm256_storeu_pd(c0 + j + 4, q01);
            _mm256_storeu_pd(c0 + j + 8, q02);
            _mm256_storeu_pd(c0 + j + 12, q03);
            _mm256_storeu_pd(c1 + j, q10);
            _mm256_storeu_pd(c1 + j + 4, q11);
            _mm256_storeu_pd(c1 + j + 8, q12);
            _mm256_storeu_pd(c1 + j + 12, q13);
        }
        for (; j + 4 <= n; j += 4) {
            __m256d q0 = _mm256_setzero_pd(), q1 = q0;
            for (std::size_t p = 0; p < k; ++p) {
                __m256d bv = _mm256_loadu_pd(b + p * n + j);
                q0 = _mm256_fmadd_pd(_mm256_set1_pd(a0[p]), bv, q0);
                q1 = _mm256_fmadd_pd(_mm256_set1_pd(a1[p]), bv, q1);
            }
            _mm256_storeu_pd(c0 + j, q0);
            _mm256_storeu_pd(c1 + j, q1);
        }
        for (; j < n; ++j) {
            double s0 = 0.0, s1 = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                double bv = b[p * n + j];
                s0 = std::fma(a0[p], bv, s0);
                s1 = std::fma(a1[p], bv, s1);
            }
            c0[j] = s0;
            c1[j] = s1;
        }
    }
    if (i < m) {
        const double* a0 = a + i * k;
        double* c0 = c + i * n;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
            __m256d q0 = _mm256_setzero_pd();
            for (std::size_t p = 0; p < k; ++p)
                q0 = _mm256_fmadd_pd(_mm256_set1_pd(a0[p]), _mm256_loadu_pd(b + p * n + j), q0);
            _mm256_storeu_pd(c0 + j, q0);
        }
        for (; j < n; ++j) {
            double s0 = 0.0;
            for (std::size_t p = 0; p < k; ++p) s0 = std::fma(a0[p], b[p * n + j], s0);
            c0[j] = s0;
        }
    }
}

// C(m x k) += A(m x n) * B(k x n)^T. Blocked 2x2 grid of lane-partial dots.
void matmul_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                   std::size_t k) {
    std::size_t n4 = n & ~std::size_t{3};
    std::size_t i = 0;
    for (; i + 2 <= m; i += 2) {
        const double* a0 = a + i * n;
        const double* a1 = a0 + n;
        std::size_t l = 0;
        for (; l + 2 <= k; l += 2) {
            const double* b0 = b + l * n;
            const double* b1 = b0 + n;
            __m256d q00 = _mm256_setzero_pd(), q01 = q00, q10 = q00, q11 = q00;
            for (std::size_t j = 0; j < n4; j += 4) {
                __m256d x0 = _mm256_loadu_pd(a0 + j);
                __m256d x1 = _mm256_loadu_pd(a1 + j);
                __m256d y0 = _mm256_loadu_pd(b0 + j);
                __m256d y1 = _mm256_loadu_pd(b1 + j);
                q00 = _mm256_fmadd_pd(x0, y0, q00);
                q01 = _mm256_fmadd_pd(x0, y1, q01);
                q10 = _mm256_fmadd_pd(x1, y0, q10);
                q11 = _mm256_fmadd_pd(x1, y1, q11);
            }
            double s00 = hsum_lanes(q00), s01 = hsum_lanes(q01);
            double s10 = hsum_lanes(q10), s11 = hsum_lanes(q11);
            for (std::size_t j = n4; j < n; ++j) {
                s00 = std::fma(a0[j], b0[j], s00);
                s01 = std::fma(a0[j], b1[j], s01);
                s10 = std::fma(a1[j], b0[j], s10);
                s11 = std::fma(a1[j], b1[j], s11);
            }
            c[i * k + l] += s00;
            c[i * k + l + 1] += s01;
            c[(i + 1) * k + l] += s10;
            c[(i + 1) * k + l + 1] += s11;
        }
        for (; l < k; ++l) {
            c[i * k + l] += dot(a0, b + l * n, n);
            c[(i + 1) * k + l] += dot(a1, b + l * n, n);
        }
    }
    if (i < m) {
        const double* a0 = a + i * n;
        for (std::size_t l = 0; l < k; ++l) c[i * k + l] += dot(a0, b + l * n, n);
    }
}

// C(k x n) += A(m x k)^T * B(m x n). Blocked 2 C-rows x 16 columns held in
// registers while the row index sweeps ascending.
void matmul_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
    std::size_t l = 0;
    for (; l + 2 <= k; l += 2) {
        double* c0 = c + l * n;
        double* c1 = c0 + n;
        std::size_t j = 0;
        for (; j + 16 <= n; j += 16) {
            __m256d q00 = _mm256_loadu_pd(c0 + j);
            __m256d q01 = _mm256_loadu_pd(c0 + j + 4);
            __m256d q02 = _mm256_loadu_pd(c0 + j + 8);
            __m256d q03 = _mm256_loadu_pd(c0 + j + 12);
            __m256d q10 = _mm256_loadu_pd(c1 + j);
            __m256d q11 = _mm256_loadu_pd(c1 + j + 4);
            __m256d q12 = _mm256_loadu_pd(c1 + j + 8);
            __m256d q13 = _mm256_loadu_pd(c1 + j + 12);
            for (std::size_t i = 0; i < m; ++i) {
                const double* brow = b + i * n + j;
                __m256d av0 = _mm256_set1_pd(a[i * k + l]);
                __m256d av1 = _mm256_set1_pd(a[i * k + l + 1]);
                __m256d b0 = _mm256_loadu_pd(brow);
                __m256d b1 = _mm256_loadu_pd(brow + 4);
                __m256d b2 = _mm256_loadu_pd(brow + 8);
                __m256d b3 = _mm256_loadu_pd(brow + 12);
                q00 = _mm256_fmadd_pd(av0, b0, q00);
                q01 = _mm256_fmadd_pd(av0, b1, q01);
                q02 = _mm256_fmadd_pd(av0, b2, q02);
                q03 = _mm256_fmadd_pd(av0, b3, q03);
                q10 = _mm256_fmadd_pd(av1, b0, q10);
                q11 = _mm256_fmadd_pd(av1, b1, q11);
                q12 = _mm256_fmadd_pd(av1, b2, q12);
                q13 = _mm256_fmadd_pd(av1, b3, q13);
            }
            _mm256_storeu_pd(c0 + j, q00);
            _mm256_storeu_pd(c0 + j + 4, q01);
            _mm256_storeu_pd(c0 + j + 8, q02);
            _mm256_storeu_pd(c0 + j + 12, q03);
            _mm256_storeu_pd(c1 + j, q10);
            _mm256_storeu_pd(c1 + j + 4, q11);
            _mm256_storeu_pd(c1 + j + 8, q12);
            _mm256_storeu_pd(c1 + j + 12, q13);
        }
        for (; j + 4 <= n; j += 4) {
            __m256d q0 = _mm256_loadu_pd(c0 + j);
            __m256d q1 = _mm256_loadu_pd(c1 + j);
            for (std::size_t i = 0; i < m; ++i) {
                __m256d bv = _mm256_loadu_pd(b + i * n + j);
                q0 = _mm256_fmadd_pd(_mm256_set1_pd(a[i * k + l]), bv, q0);
                q1 = _mm256_fmadd_pd(_mm256_set1_pd(a[i * k + l + 1]), bv, q1);
            }
            _mm256_storeu_pd(c0 + j, q0);
            _mm256_storeu_pd(c1 + j, q1);
        }
        for (; j < n; ++j) {
            double s0 = c0[j], s1 = c1[j];
            for (std::size_t i = 0; i < m; ++i) {
                double bv = b[i * n + j];
                s0 = std::fma(a[i * k + l], bv, s0);
                s1 = std::fma(a[i * k + l + 1], bv, s1);
            }
            c0[j] = s0;
            c1[j] = s1;
        }
    }
    if (l < k) {
        double* c0 = c + l * n;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
            __m256d q0 = _mm256_loadu_pd(c0 + j);
            for (std::size_t i = 0; i < m; ++i)
                q0 = _mm256_fmadd_pd(_mm256_set1_pd(a[i * k + l]), _mm256_loadu_pd(b + i * n + j),
                                     q0);
            _mm256_storeu_pd(c0 + j, q0);
        }
        for (; j < n; ++j) {
            double s0 = c0[j];
            for (std::size_t i = 0; i < m; ++i) s0 = std::fma(a[i * k + l], b[i * n + j], s0);
            c0[j] = s0;
        }
    }
}

void colsum_acc(const double* a, double* acc, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4)
            _mm256_storeu_pd(acc + j,
                             _mm256_add_pd(_mm256_loadu_pd(acc + j), _mm256_loadu_pd(arow + j)));
        for (; j < n; ++j) acc[j] += arow[j];
    }
}

void add_rowvec(double* c, const double* b, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4)
            _mm256_storeu_pd(crow + j,
                             _mm256_add_pd(_mm256_loadu_pd(crow + j), _mm256_loadu_pd(b + j)));
        for (; j < n; ++j) crow[j] += b[j];
    }
}

}  // namespace avx2

static const KernelTable kAvx2Table = {
    "avx2",
    avx2::add,
    avx2::sub,
    avx2::mul,
    avx2::mul_acc,
    avx2::scale,
    avx2::scale_acc,
    avx2::acc,
    avx2::leaky_relu,
    avx2::leaky_relu_grad_acc,
    avx2::leaky_mask_mul,
    avx2::reduce_sum,
    avx2::dot,
    avx2::matmul_nn,
    avx2::matmul_nt_acc,
    avx2::matmul_tn_acc,
    avx2::colsum_acc,
    avx2::add_rowvec,
};

const KernelTable& avx2_table() { return kAvx2Table; }

}  // namespace gael::kernels

#endif  // GAEL_HAVE_AVX2
