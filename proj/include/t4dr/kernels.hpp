#pragma once

#include <cstdint>

namespace t4dr::kern {

// Every kernel has a serial reference and an OpenMP variant. The parallel
// variants only distribute independent output elements, so both modes produce
// bit-identical results for any thread count; the serial path stays as the
// reference the tests compare against.
enum class ExecMode { Serial, Parallel };

ExecMode exec_mode();
void set_exec_mode(ExecMode mode);

// c(m,n) = a(m,k) * b(k,n)
void matmul_nn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
// c(m,n) = a(m,k) * b(n,k)^T
void matmul_nt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
// c(k,n) = a(m,k)^T * b(m,n)
void matmul_tn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);

// out[i] = f(x[i]); f is applied element-independent
template <class F>
void map_unary(const double* x, double* out, int64_t n, F f);
// out[i] = f(a[i], b[i])
template <class F>
void map_binary(const double* a, const double* b, double* out, int64_t n, F f);

// row-wise stable softmax over the trailing dimension
void rows_softmax(const double* x, double* out, int64_t rows, int64_t cols);
// row-wise layer normalization; inv_std may be null, else receives 1/sqrt(var+eps) per row
void rows_layernorm(const double* x, double* out, int64_t rows, int64_t cols, double eps,
                    double* inv_std);

// serial left-to-right reductions (kept serial in both modes: the fixed
// accumulation order is part of the determinism contract)
double reduce_sum(const double* x, int64_t n);
double reduce_abs_sum(const double* x, int64_t n);
double reduce_sq_sum(const double* x, int64_t n);

namespace detail {
bool parallel_enabled(int64_t work);
}

template <class F>
void map_unary(const double* x, double* out, int64_t n, F f) {
    if (detail::parallel_enabled(n)) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) out[i] = f(x[i]);
    } else {
        for (int64_t i = 0; i < n; ++i) out[i] = f(x[i]);
    }
}

template <class F>
void map_binary(const double* a, const double* b, double* out, int64_t n, F f) {
    if (detail::parallel_enabled(n)) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) out[i] = f(a[i], b[i]);
    } else {
        for (int64_t i = 0; i < n; ++i) out[i] = f(a[i], b[i]);
    }
}

}  // namespace t4dr::kern
