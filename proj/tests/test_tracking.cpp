#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "t4dr/error.hpp"
#include "t4dr/rng.hpp"
#include "t4dr/tracking.hpp"

using namespace t4dr;

namespace {

// Exhaustive minimum-cost matching over the augmented transport polytope:
// every injective partial matching, unmatched rows/cols to the dustbin, and
// the dustbin corner carrying one unit per realized match.
struct BruteForce {
    double best_cost = 1e300;
    std::vector<std::pair<int, int>> best;
};

void enumerate(const std::vector<double>& d, int m, int n, double gamma, int row,
               std::vector<int>& col_used, std::vector<std::pair<int, int>>& cur, double cost,
               int matches, BruteForce& out) {
    if (row == m) {
        int unmatched_rows = m - matches, unmatched_cols = n - matches;
        double total = cost + gamma * (unmatched_rows + unmatched_cols + matches);
        if (total < out.best_cost) {
            out.best_cost = total;
            out.best = cur;
        }
        return;
    }
    enumerate(d, m, n, gamma, row + 1, col_used, cur, cost, matches, out);  // row unmatched
    for (int j = 0; j < n; ++j) {
        if (col_used[static_cast<size_t>(j)]) continue;
        col_used[static_cast<size_t>(j)] = 1;
        cur.emplace_back(row, j);
        enumerate(d, m, n, gamma, row + 1, col_used, cur, cost + d[static_cast<size_t>(row) * n + j],
                  matches + 1, out);
        cur.pop_back();
        col_used[static_cast<size_t>(j)] = 0;
    }
}

std::vector<std::pair<int, int>> brute_force_matching(const std::vector<double>& d, int m, int n,
                                                      double gamma) {
    BruteForce out;
    std::vector<int> used(static_cast<size_t>(n), 0);
    std::vector<std::pair<int, int>> cur;
    enumerate(d, m, n, gamma, 0, used, cur, 0.0, 0, out);
    std::sort(out.best.begin(), out.best.end());
    return out.best;
}

std::vector<std::pair<int, int>> extract_matches(const SinkhornResult& plan) {
    int m = plan.rows - 1, n = plan.cols - 1;
    auto P = [&](int i, int j) { return plan.plan[static_cast<size_t>(i) * plan.cols + j]; };
    std::vector<std::pair<int, int>> matches;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double p = P(i, j);
            bool rm = true, cm = true;
            for (int jj = 0; jj < n && rm; ++jj)
                if (jj != j && P(i, jj) >= p) rm = false;
            for (int ii = 0; ii < m && cm; ++ii)
                if (ii != i && P(ii, j) >= p) cm = false;
            if (rm && cm && p > P(i, n) && p > P(m, j)) matches.emplace_back(i, j);
        }
    std::sort(matches.begin(), matches.end());
    return matches;
}

std::vector<std::vector<double>> tokens_from(const std::vector<std::vector<double>>& v) { return v; }

}  // namespace

TEST_CASE("cost matrix basics") {
    std::vector<std::vector<double>> a = {{1, 0, 0}, {0, 1, 0}};
    std::vector<std::vector<double>> b = {{1, 0, 0}, {0, 0, 1}};
    auto d = cost_matrix(a, b);
    CHECK(d[0] == doctest::Approx(0.0));
    CHECK(d[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(d[2] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    // symmetric under swapping the roles
    auto dt = cost_matrix(b, a);
    CHECK(d[1] == doctest::Approx(dt[2]).epsilon(1e-15));

    Rng rng(3);
    std::vector<std::vector<double>> x(4, std::vector<double>(8)), y(3, std::vector<double>(8));
    for (auto& r : x)
        for (auto& v : r) v = rng.normal();
    for (auto& r : y)
        for (auto& v : r) v = rng.normal();
    auto dd = cost_matrix(x, y);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 8; ++k) s += (x[static_cast<size_t>(i)][static_cast<size_t>(k)] - y[static_cast<size_t>(j)][static_cast<size_t>(k)]) *
                                             (x[static_cast<size_t>(i)][static_cast<size_t>(k)] - y[static_cast<size_t>(j)][static_cast<size_t>(k)]);
            CHECK(dd[static_cast<size_t>(i * 3 + j)] == doctest::Approx(std::sqrt(s)).epsilon(1e-12));
        }

    std::vector<std::vector<double>> bad = {{1, 2}};
    CHECK_THROWS_AS(cost_matrix(a, bad), ContractViolation);
}

TEST_CASE("dustbin augmentation") {
    auto e = dustbin_augment({}, 0, 0, 0.7);
    REQUIRE(e.size() == 1);
    CHECK(e[0] == 0.7);

    std::vector<double> d = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    auto a = dustbin_augment(d, 2, 3, 0.9);
    REQUIRE(a.size() == 12);
    CHECK(a[0] == 0.1);
    CHECK(a[1] == 0.2);
    CHECK(a[2] == 0.3);
    CHECK(a[3] == 0.9);   // row dustbin
    CHECK(a[11] == 0.9);  // corner
    CHECK(a[8] == 0.9);
}

TEST_CASE("sinkhorn satisfies marginals on random rectangular instances") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        int m = 6, n = 4;
        std::vector<double> d(static_cast<size_t>(m) * n);
        for (auto& v : d) v = rng.uniform(0.0, 2.0);
        auto dbar = dustbin_augment(d, m, n, 0.8);
        auto res = sinkhorn(dbar, m + 1, n + 1, tracker_row_marginals(m, n),
                            tracker_col_marginals(m, n), 0.05, 4000);
        CHECK(res.marginal_err <= 1e-6);
        CHECK(res.converged);
        for (double p : res.plan) CHECK(p >= 0.0);
    }
}

TEST_CASE("sinkhorn single sure match concentrates mass") {
    std::vector<double> d = {0.01};
    auto dbar = dustbin_augment(d, 1, 1, 1.0);
    auto res = sinkhorn(dbar, 2, 2, tracker_row_marginals(1, 1), tracker_col_marginals(1, 1), 1e-3,
                        500);
    CHECK(res.plan[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.plan[1] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("sinkhorn handles empty sides") {
    auto res = sinkhorn(dustbin_augment({}, 0, 3, 0.5), 1, 4, tracker_row_marginals(0, 3),
                        tracker_col_marginals(0, 3), 0.05, 200);
    CHECK(res.marginal_err <= 1e-6);
    // all detections land in the dustbin row
    for (int j = 0; j < 3; ++j) CHECK(res.plan[static_cast<size_t>(j)] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sinkhorn agrees with exhaustive matching on 200 seeded 5x5 instances") {
    int agree = 0;
    const int trials = 200;
    for (int seed = 0; seed < trials; ++seed) {
        Rng rng(1000 + static_cast<uint64_t>(seed));
        int m = 5, n = 5;
        std::vector<double> d(static_cast<size_t>(m) * n);
        std::set<int> used;
        for (auto& v : d) {
            // distinct costs on a jittered lattice
            int cell;
            do {
                cell = static_cast<int>(rng.uniform_int(100));
            } while (used.count(cell));
            used.insert(cell);
            v = cell * 0.02 + rng.uniform(0.0, 0.004);
        }
        double gamma = 0.55;
        auto dbar = dustbin_augment(d, m, n, gamma);
        auto res = sinkhorn(dbar, m + 1, n + 1, tracker_row_marginals(m, n),
                            tracker_col_marginals(m, n), 1e-3, 500);
        CHECK(res.marginal_err <= 1e-6);
        auto got = extract_matches(res);
        auto expect = brute_force_matching(d, m, n, gamma);
        if (got == expect) ++agree;

        // transported cost within 1% of the optimum
        double plan_cost = 0;
        for (int i = 0; i < m + 1; ++i)
            for (int j = 0; j < n + 1; ++j)
                plan_cost += dbar[static_cast<size_t>(i * (n + 1) + j)] * res.plan[static_cast<size_t>(i * (n + 1) + j)];
        double opt = 0;
        {
            double matched = 0;
            for (auto [i, j] : expect) matched += d[static_cast<size_t>(i * n + j)];
            int k = static_cast<int>(expect.size());
            opt = matched + gamma * (m - k) + gamma * (n - k) + gamma * k;
        }
        CHECK(plan_cost <= opt * 1.01 + 1e-9);
    }
    CHECK(agree == trials);
}

TEST_CASE("associate lifecycle: spawn, persist, retire") {
    TrackerConfig cfg;
    cfg.gamma = 0.5;
    cfg.epsilon = 0.01;
    cfg.iterations = 300;
    cfg.max_misses = 2;
    TrackletBank bank;

    std::vector<std::vector<double>> d0 = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}};
    auto r0 = track_frame(bank, tokens_from(d0), 0, cfg);
    CHECK(r0.new_tracks.size() == 3);
    CHECK(bank.entries.size() == 3);

    // same tokens, shuffled order: ids follow tokens
    std::vector<std::vector<double>> d1 = {d0[2], d0[0], d0[1]};
    auto r1 = track_frame(bank, tokens_from(d1), 1, cfg);
    CHECK(r1.new_tracks.empty());
    CHECK(r1.det_track_ids[0] == r0.det_track_ids[2]);
    CHECK(r1.det_track_ids[1] == r0.det_track_ids[0]);
    CHECK(r1.det_track_ids[2] == r0.det_track_ids[1]);

    // one person disappears; after max_misses the track retires
    std::vector<std::vector<double>> d2 = {d0[0], d0[1]};
    track_frame(bank, tokens_from(d2), 2, cfg);
    CHECK(bank.entries.size() == 3);
    track_frame(bank, tokens_from(d2), 3, cfg);
    auto r4 = track_frame(bank, tokens_from(d2), 4, cfg);
    CHECK(bank.entries.size() == 2);
    REQUIRE(r4.lost_tracks.size() == 1);
    CHECK(r4.lost_tracks[0] == r0.det_track_ids[2]);
}

TEST_CASE("ids follow tokens through a positional swap") {
    // tokens carry identity; the tracker never sees positions
    TrackerConfig cfg;
    cfg.gamma = 0.6;
    TrackletBank bank;
    Rng rng(9);
    std::vector<double> ta(16), tb(16);
    for (auto& v : ta) v = rng.normal();
    for (auto& v : tb) v = rng.normal();
    auto r0 = track_frame(bank, {ta, tb}, 0, cfg);
    for (int f = 1; f <= 10; ++f) {
        bool swapped = f % 2 == 1;
        std::vector<std::vector<double>> det = swapped ? std::vector<std::vector<double>>{tb, ta}
                                                       : std::vector<std::vector<double>>{ta, tb};
        auto r = track_frame(bank, det, f, cfg);
        CHECK(r.det_track_ids[swapped ? 1 : 0] == r0.det_track_ids[0]);
        CHECK(r.det_track_ids[swapped ? 0 : 1] == r0.det_track_ids[1]);
        CHECK(bank.entries.size() == 2);
    }
}

TEST_CASE("active tracks never exceed previous active plus detections") {
    TrackerConfig cfg;
    Rng rng(11);
    TrackletBank bank;
    for (int f = 0; f < 30; ++f) {
        size_t before = bank.entries.size();
        int n = static_cast<int>(rng.uniform_int(4));
        std::vector<std::vector<double>> det(static_cast<size_t>(n), std::vector<double>(6));
        for (auto& t : det)
            for (auto& v : t) v = rng.normal();
        track_frame(bank, det, f, cfg);
        CHECK(bank.entries.size() <= before + static_cast<size_t>(n));
    }
}

TEST_CASE("sinkhorn validates its inputs") {
    CHECK_THROWS_AS(sinkhorn({0.0}, 1, 1, {1.0}, {1.0}, 0.0, 10), ContractViolation);
    CHECK_THROWS_AS(sinkhorn({0.0}, 1, 1, {1.0}, {1.0}, 0.1, 0), ContractViolation);
    CHECK_THROWS_AS(sinkhorn({0.0, 0.0}, 2, 2, {1.0, 1.0}, {1.0, 1.0}, 0.1, 5), ContractViolation);
}
