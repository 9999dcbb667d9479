#include "t4dr/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

namespace t4dr::kern {

namespace {

ExecMode init_mode() {
    if (const char* e = std::getenv("T4D_KERNELS")) {
        if (std::strcmp(e, "serial") == 0) return ExecMode::Serial;
    }
    return ExecMode::Parallel;
}

ExecMode& mode_ref() {
    static ExecMode m = init_mode();
    return m;
}

// below this many scalar ops the fork/join overhead dominates
constexpr int64_t kParallelThreshold = 16384;

}  // namespace

ExecMode exec_mode() { return mode_ref(); }
void set_exec_mode(ExecMode mode) { mode_ref() = mode; }

bool detail::parallel_enabled(int64_t work) {
#ifdef _OPENMP
    return mode_ref() == ExecMode::Parallel && work >= kParallelThreshold;
#else
    (void)work;
    return false;
#endif
}

namespace {

inline void row_nn(const double* a, const double* b, double* c, int64_t i, int64_t k, int64_t n) {
    double* crow = c + i * n;
    for (int64_t j = 0; j < n; ++j) crow[j] = 0.0;
    const double* arow = a + i * k;
    for (int64_t kk = 0; kk < k; ++kk) {
        double aik = arow[kk];
        const double* brow = b + kk * n;
        for (int64_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
}

inline void row_nt(const double* a, const double* b, double* c, int64_t i, int64_t k, int64_t n) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
        const double* brow = b + j * k;
        double s = 0.0;
        for (int64_t kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
        crow[j] = s;
    }
}

inline void row_tn(const double* a, const double* b, double* c, int64_t p, int64_t m, int64_t k,
                   int64_t n) {
    double* crow = c + p * n;
    for (int64_t j = 0; j < n; ++j) crow[j] = 0.0;
    for (int64_t i = 0; i < m; ++i) {
        double aip = a[i * k + p];
        const double* brow = b + i * n;
        for (int64_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
}

}  // namespace

void matmul_nn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
    if (detail::parallel_enabled(m * k * n)) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < m; ++i) row_nn(a, b, c, i, k, n);
    } else {
        for (int64_t i = 0; i < m; ++i) row_nn(a, b, c, i, k, n);
    }
}

void matmul_nt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
    if (detail::parallel_enabled(m * k * n)) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < m; ++i) row_nt(a, b, c, i, k, n);
    } else {
        for (int64_t i = 0; i < m; ++i) row_nt(a, b, c, i, k, n);
    }
}

void matmul_tn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
    if (detail::parallel_enabled(m * k * n)) {
#pragma omp parallel for schedule(static)
        for (int64_t p = 0; p < k; ++p) row_tn(a, b, c, p, m, k, n);
    } else {
        for (int64_t p = 0; p < k; ++p) row_tn(a, b, c, p, m, k, n);
    }
}

namespace {

inline void softmax_row(const double* x, double* out, int64_t cols) {
    double mx = x[0];
    for (int64_t j = 1; j < cols; ++j) mx = x[j] > mx ? x[j] : mx;
    double s = 0.0;
    for (int64_t j = 0; j < cols; ++j) {
        out[j] = std::exp(x[j] - mx);
        s += out[j];
    }
    double inv = 1.0 / s;
    for (int64_t j = 0; j < cols; ++j) out[j] *= inv;
}

inline void layernorm_row(const double* x, double* out, int64_t cols, double eps, double* inv_std) {
    double mu = 0.0;
    for (int64_t j = 0; j < cols; ++j) mu += x[j];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (int64_t j = 0; j < cols; ++j) {
        double d = x[j] - mu;
        var += d * d;
    }
    var /= static_cast<double>(cols);
    double is = 1.0 / std::sqrt(var + eps);
    for (int64_t j = 0; j < cols; ++j) out[j] = (x[j] - mu) * is;
    if (inv_std) *inv_std = is;
}

}  // namespace

void rows_softmax(const double* x, double* out, int64_t rows, int64_t cols) {
    if (detail::parallel_enabled(rows * cols * 4)) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < rows; ++i) softmax_row(x + i * cols, out + i * cols, cols);
    } else {
        for (int64_t i = 0; i < rows; ++i) softmax_row(x + i * cols, out + i * cols, cols);
    }
}

void rows_layernorm(const double* x, double* out, int64_t rows, int64_t cols, double eps,
                    double* inv_std) {
    if (detail::parallel_enabled(rows * cols * 4)) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < rows; ++i)
            layernorm_row(x + i * cols, out + i * cols, cols, eps, inv_std ? inv_std + i : nullptr);
    } else {
        for (int64_t i = 0; i < rows; ++i)
            layernorm_row(x + i * cols, out + i * cols, cols, eps, inv_std ? inv_std + i : nullptr);
    }
}

double reduce_sum(const double* x, int64_t n) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double reduce_abs_sum(const double* x, int64_t n) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += std::abs(x[i]);
    return s;
}

double reduce_sq_sum(const double* x, int64_t n) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += x[i] * x[i];
    return s;
}

}  // namespace t4dr::kern
