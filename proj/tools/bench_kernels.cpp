// Compares the serial reference kernels against the OpenMP variants and
// reports GFLOP/s for the shapes the model actually runs.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "t4dr/kernels.hpp"
#include "t4dr/rng.hpp"

using namespace t4dr;

namespace {

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

double bench_matmul(int64_t m, int64_t k, int64_t n, kern::ExecMode mode) {
    kern::set_exec_mode(mode);
    Rng rng(1);
    std::vector<double> a(static_cast<size_t>(m * k)), b(static_cast<size_t>(k * n)),
        c(static_cast<size_t>(m * n));
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    kern::matmul_nn(a.data(), b.data(), c.data(), m, k, n);  // warm up
    int reps = static_cast<int>(std::max<int64_t>(1, 2'000'000'000 / (2 * m * k * n * 20)));
    double t0 = now_s();
    for (int r = 0; r < reps; ++r) kern::matmul_nn(a.data(), b.data(), c.data(), m, k, n);
    double dt = now_s() - t0;
    return 2.0 * static_cast<double>(m * k * n) * reps / dt / 1e9;
}

double bench_map(int64_t n, kern::ExecMode mode) {
    kern::set_exec_mode(mode);
    Rng rng(2);
    std::vector<double> x(static_cast<size_t>(n)), y(static_cast<size_t>(n));
    for (auto& v : x) v = rng.normal();
    int reps = 2000;
    double t0 = now_s();
    for (int r = 0; r < reps; ++r)
        kern::map_unary(x.data(), y.data(), n, [](double v) { return v * 1.0001 + 0.5; });
    double dt = now_s() - t0;
    return 2.0 * static_cast<double>(n) * reps / dt / 1e9;
}

}  // namespace

int main() {
    std::printf("%-28s %10s %10s\n", "kernel", "serial", "openmp");
    struct { int64_t m, k, n; } shapes[] = {
        {69, 64, 192}, {69, 64, 128}, {64, 512, 64}, {256, 256, 256}, {512, 512, 512},
    };
    for (auto s : shapes) {
        double gs = bench_matmul(s.m, s.k, s.n, kern::ExecMode::Serial);
        double gp = bench_matmul(s.m, s.k, s.n, kern::ExecMode::Parallel);
        std::printf("matmul %4lldx%4lldx%-14lld %8.2f %10.2f  GFLOP/s\n",
                    static_cast<long long>(s.m), static_cast<long long>(s.k),
                    static_cast<long long>(s.n), gs, gp);
    }
    for (int64_t n : {4096, 262144}) {
        double gs = bench_map(n, kern::ExecMode::Serial);
        double gp = bench_map(n, kern::ExecMode::Parallel);
        std::printf("map    n=%-19lld %8.2f %10.2f  GFLOP/s\n", static_cast<long long>(n), gs, gp);
    }
    kern::set_exec_mode(kern::ExecMode::Parallel);
    return 0;
}
