#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "t4dr/kernels.hpp"
#include "t4dr/rng.hpp"

using namespace t4dr;

namespace {

std::vector<double> random_vec(size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

struct ModeGuard {
    kern::ExecMode prev;
    explicit ModeGuard(kern::ExecMode m) : prev(kern::exec_mode()) { kern::set_exec_mode(m); }
    ~ModeGuard() { kern::set_exec_mode(prev); }
};

}  // namespace

TEST_CASE("matmul variants match serial reference bit for bit") {
    // sizes above the parallel dispatch threshold so the omp path engages
    int64_t m = 48, k = 96, n = 64;
    auto a = random_vec(static_cast<size_t>(m * k), 1);
    auto b = random_vec(static_cast<size_t>(k * n), 2);
    std::vector<double> cs(static_cast<size_t>(m * n)), cp(cs);

    {
        ModeGuard g(kern::ExecMode::Serial);
        kern::matmul_nn(a.data(), b.data(), cs.data(), m, k, n);
    }
    {
        ModeGuard g(kern::ExecMode::Parallel);
        kern::matmul_nn(a.data(), b.data(), cp.data(), m, k, n);
    }
    CHECK(cs == cp);

    // nt/tn against a naive triple loop
    std::vector<double> bt(static_cast<size_t>(n * k));
    for (int64_t i = 0; i < k; ++i)
        for (int64_t j = 0; j < n; ++j) bt[static_cast<size_t>(j * k + i)] = b[static_cast<size_t>(i * n + j)];
    std::vector<double> cnt(static_cast<size_t>(m * n));
    kern::matmul_nt(a.data(), bt.data(), cnt.data(), m, k, n);
    for (size_t i = 0; i < cnt.size(); ++i) CHECK(cnt[i] == doctest::Approx(cs[i]).epsilon(1e-12));

    std::vector<double> at(static_cast<size_t>(k * m));
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < k; ++j) at[static_cast<size_t>(j * m + i)] = a[static_cast<size_t>(i * k + j)];
    std::vector<double> ctn(static_cast<size_t>(m * n));
    kern::matmul_tn(at.data(), b.data(), ctn.data(), k, m, n);
    for (size_t i = 0; i < ctn.size(); ++i) CHECK(ctn[i] == doctest::Approx(cs[i]).epsilon(1e-12));
}

TEST_CASE("row softmax and layernorm match serial reference bit for bit") {
    int64_t rows = 128, cols = 64;
    auto x = random_vec(static_cast<size_t>(rows * cols), 3);
    std::vector<double> ys(x.size()), yp(x.size()), iss(static_cast<size_t>(rows)), isp(static_cast<size_t>(rows));
    {
        ModeGuard g(kern::ExecMode::Serial);
        kern::rows_softmax(x.data(), ys.data(), rows, cols);
    }
    {
        ModeGuard g(kern::ExecMode::Parallel);
        kern::rows_softmax(x.data(), yp.data(), rows, cols);
    }
    CHECK(ys == yp);
    {
        ModeGuard g(kern::ExecMode::Serial);
        kern::rows_layernorm(x.data(), ys.data(), rows, cols, 1e-6, iss.data());
    }
    {
        ModeGuard g(kern::ExecMode::Parallel);
        kern::rows_layernorm(x.data(), yp.data(), rows, cols, 1e-6, isp.data());
    }
    CHECK(ys == yp);
    CHECK(iss == isp);
}

TEST_CASE("softmax rows are normalized, layernorm rows are standardized") {
    int64_t rows = 7, cols = 33;
    auto x = random_vec(static_cast<size_t>(rows * cols), 4);
    std::vector<double> y(x.size());
    kern::rows_softmax(x.data(), y.data(), rows, cols);
    for (int64_t r = 0; r < rows; ++r) {
        double s = 0;
        for (int64_t c = 0; c < cols; ++c) {
            double v = y[static_cast<size_t>(r * cols + c)];
            CHECK(v >= 0);
            s += v;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    kern::rows_layernorm(x.data(), y.data(), rows, cols, 1e-9, nullptr);
    for (int64_t r = 0; r < rows; ++r) {
        double mu = 0, var = 0;
        for (int64_t c = 0; c < cols; ++c) mu += y[static_cast<size_t>(r * cols + c)];
        mu /= static_cast<double>(cols);
        for (int64_t c = 0; c < cols; ++c) {
            double d = y[static_cast<size_t>(r * cols + c)] - mu;
            var += d * d;
        }
        var /= static_cast<double>(cols);
        CHECK(mu == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("map kernels identical across modes") {
    auto x = random_vec(100000, 5);
    std::vector<double> ys(x.size()), yp(x.size());
    {
        ModeGuard g(kern::ExecMode::Serial);
        kern::map_unary(x.data(), ys.data(), static_cast<int64_t>(x.size()),
                        [](double v) { return v * v - 0.5; });
    }
    {
        ModeGuard g(kern::ExecMode::Parallel);
        kern::map_unary(x.data(), yp.data(), static_cast<int64_t>(x.size()),
                        [](double v) { return v * v - 0.5; });
    }
    CHECK(ys == yp);
}
