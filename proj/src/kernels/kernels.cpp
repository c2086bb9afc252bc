#include "gael/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace gael::kernels {

namespace scalar {

void add(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc(const double* a, const double* b, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] = std::fma(a[i], b[i], acc[i]);
}

void scale(const double* a, double c, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = c * a[i];
}

void scale_acc(const double* a, double c, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] = std::fma(c, a[i], acc[i]);
}

void acc(const double* a, double* accv, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) accv[i] += a[i];
}

void leaky_relu(const double* x, double slope, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_grad_acc(const double* x, const double* g, double slope, double* acc,
                         std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double d = x[i] > 0.0 ? 1.0 : slope;
        acc[i] = std::fma(g[i], d, acc[i]);
    }
}

void leaky_mask_mul(const double* gate, const double* v, double slope, double* out,
                    std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = v[i] * (gate[i] > 0.0 ? 1.0 : slope);
}

// Lane-partial reduction order; see kernels.hpp.
double reduce_sum(const double* x, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t n4 = n & ~std::size_t{3};
    for (std::size_t i = 0; i < n4; i += 4) {
        s0 += x[i];
        s1 += x[i + 1];
        s2 += x[i + 2];
        s3 += x[i + 3];
    }
    double r = (s0 + s2) + (s1 + s3);
    for (std::size_t i = n4; i < n; ++i) r += x[i];
    return r;
}

double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t n4 = n & ~std::size_t{3};
    for (std::size_t i = 0; i < n4; i += 4) {
        s0 = std::fma(a[i], b[i], s0);
        s1 = std::fma(a[i + 1], b[i + 1], s1);
        s2 = std::fma(a[i + 2], b[i + 2], s2);
        s3 = std::fma(a[i + 3], b[i + 3], s3);
    }
    double r = (s0 + s2) + (s1 + s3);
    for (std::size_t i = n4; i < n; ++i) r = std::fma(a[i], b[i], r);
    return r;
}

void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n) {
    std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            double av = a[i * k + p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] = std::fma(av, brow[j], crow[j]);
        }
    }
}

void matmul_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                   std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        for (std::size_t l = 0; l < k; ++l) c[i * k + l] += dot(arow, b + l * n, n);
    }
}

void matmul_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
    for (std::size_t l = 0; l < k; ++l) {
        double* crow = c + l * n;
        for (std::size_t i = 0; i < m; ++i) {
            double av = a[i * k + l];
            const double* brow = b + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] = std::fma(av, brow[j], crow[j]);
        }
    }
}

void colsum_acc(const double* a, double* acc, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        for (std::size_t j = 0; j < n; ++j) acc[j] += arow[j];
    }
}

void add_rowvec(double* c, const double* b, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += b[j];
    }
}

}  // namespace scalar

static const KernelTable kScalarTable = {
    "scalar",
    scalar::add,
    scalar::sub,
    scalar::mul,
    scalar::mul_acc,
    scalar::scale,
    scalar::scale_acc,
    scalar::acc,
    scalar::leaky_relu,
    scalar::leaky_relu_grad_acc,
    scalar::leaky_mask_mul,
    scalar::reduce_sum,
    scalar::dot,
    scalar::matmul_nn,
    scalar::matmul_nt_acc,
    scalar::matmul_tn_acc,
    scalar::colsum_acc,
    scalar::add_rowvec,
};

const KernelTable& scalar_table() { return kScalarTable; }

#if defined(GAEL_HAVE_AVX2)
const KernelTable& avx2_table();  // kernels_avx2.cpp
static bool avx2_supported() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const KernelTable* simd_table() {
#if defined(GAEL_HAVE_AVX2)
    if (avx2_supported()) return &avx2_table();
#endif
    return nullptr;
}

namespace {

Backend g_requested = Backend::Auto;

const KernelTable* resolve(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return &kScalarTable;
        case Backend::Avx2: {
#if defined(GAEL_HAVE_AVX2)
            if (avx2_supported()) return &avx2_table();
#endif
            throw std::runtime_error("kernels: AVX2 backend unavailable on this machine");
        }
        case Backend::Auto:
        default: {
            if (const char* env = std::getenv("GAEL_KERNELS")) {
                if (std::strcmp(env, "scalar") == 0) return resolve(Backend::Scalar);
                if (std::strcmp(env, "avx2") == 0) return resolve(Backend::Avx2);
            }
            if (const KernelTable* simd = simd_table()) return simd;
            return &kScalarTable;
        }
    }
}

const KernelTable*& active_ptr() {
    static const KernelTable* p = resolve(Backend::Auto);
    return p;
}

}  // namespace

const KernelTable& active() { return *active_ptr(); }

void set_backend(Backend b) {
    active_ptr() = resolve(b);
    g_requested = b;
}

Backend active_backend() {
    const KernelTable* p = active_ptr();
    if (p == &kScalarTable) return Backend::Scalar;
    return Backend::Avx2;
}

}  // namespace gael::kernels
