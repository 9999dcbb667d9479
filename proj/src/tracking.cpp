#include "t4dr/tracking.hpp"

#include <algorithm>
#include <cmath>

#include "t4dr/error.hpp"

namespace t4dr {

std::vector<double> cost_matrix(const std::vector<std::vector<double>>& bank_tokens,
                                const std::vector<std::vector<double>>& det_tokens) {
    size_t m = bank_tokens.size(), n = det_tokens.size();
    std::vector<double> d(m * n, 0.0);
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) {
            if (bank_tokens[i].size() != det_tokens[j].size())
                throw ContractViolation("cost_matrix: token dims " +
                                        std::to_string(bank_tokens[i].size()) + " vs " +
                                        std::to_string(det_tokens[j].size()));
            double s = 0;
            for (size_t k = 0; k < bank_tokens[i].size(); ++k) {
                double diff = bank_tokens[i][k] - det_tokens[j][k];
                s += diff * diff;
            }
            d[i * n + j] = std::sqrt(s);
        }
    return d;
}

std::vector<double> dustbin_augment(const std::vector<double>& d, int m, int n, double gamma) {
    if (static_cast<int>(d.size()) != m * n)
        throw ContractViolation("dustbin_augment: cost size mismatch");
    int rows = m + 1, cols = n + 1;
    std::vector<double> out(static_cast<size_t>(rows) * cols, gamma);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out[static_cast<size_t>(i) * cols + j] = d[static_cast<size_t>(i) * n + j];
    return out;
}

std::vector<double> tracker_row_marginals(int m, int n) {
    std::vector<double> a(static_cast<size_t>(m) + 1, 1.0);
    a.back() = static_cast<double>(n);
    return a;
}

std::vector<double> tracker_col_marginals(int m, int n) {
    std::vector<double> b(static_cast<size_t>(n) + 1, 1.0);
    b.back() = static_cast<double>(m);
    return b;
}

namespace {
constexpr double kNeg = -1e30;

double lse(const std::vector<double>& v) {
    double mx = kNeg;
    for (double x : v) mx = std::max(mx, x);
    if (mx <= kNeg * 0.5) return kNeg;
    double s = 0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}
}  // namespace

SinkhornResult sinkhorn(const std::vector<double>& cost, int rows, int cols,
                        const std::vector<double>& a, const std::vector<double>& b, double epsilon,
                        int iterations) {
    if (!(epsilon > 0)) throw ContractViolation("sinkhorn: epsilon must be > 0");
    if (iterations < 1) throw ContractViolation("sinkhorn: iterations must be >= 1");
    if (static_cast<int>(a.size()) != rows || static_cast<int>(b.size()) != cols ||
        static_cast<int>(cost.size()) != rows * cols)
        throw ContractViolation("sinkhorn: dimension mismatch");

    std::vector<double> la(a.size()), lb(b.size());
    for (size_t i = 0; i < a.size(); ++i) la[i] = a[i] > 0 ? std::log(a[i]) : kNeg;
    for (size_t j = 0; j < b.size(); ++j) lb[j] = b[j] > 0 ? std::log(b[j]) : kNeg;

    std::vector<double> f(a.size(), 0.0), g(b.size(), 0.0);
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] <= 0) f[i] = kNeg;
    for (size_t j = 0; j < b.size(); ++j)
        if (b[j] <= 0) g[j] = kNeg;

    auto compute_plan = [&](std::vector<double>& plan) {
        plan.resize(cost.size());
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) {
                double e = (f[static_cast<size_t>(i)] + g[static_cast<size_t>(j)] -
                            cost[static_cast<size_t>(i) * cols + j]) / epsilon;
                plan[static_cast<size_t>(i) * cols + j] = e < -700 ? 0.0 : std::exp(e);
            }
    };
    auto marginal_err = [&](const std::vector<double>& plan) {
        double err = 0;
        for (int i = 0; i < rows; ++i) {
            double s = 0;
            for (int j = 0; j < cols; ++j) s += plan[static_cast<size_t>(i) * cols + j];
            err = std::max(err, std::abs(s - a[static_cast<size_t>(i)]));
        }
        for (int j = 0; j < cols; ++j) {
            double s = 0;
            for (int i = 0; i < rows; ++i) s += plan[static_cast<size_t>(i) * cols + j];
            err = std::max(err, std::abs(s - b[static_cast<size_t>(j)]));
        }
        return err;
    };

    SinkhornResult best;
    best.rows = rows;
    best.cols = cols;
    best.marginal_err = 1e300;
    std::vector<double> scratch_row(static_cast<size_t>(cols)), scratch_col(static_cast<size_t>(rows));
    std::vector<double> plan;

    auto iterate = [&](double eps) {
        for (int i = 0; i < rows; ++i) {
            if (a[static_cast<size_t>(i)] <= 0) continue;
            for (int j = 0; j < cols; ++j)
                scratch_row[static_cast<size_t>(j)] = (g[static_cast<size_t>(j)] -
                                                       cost[static_cast<size_t>(i) * cols + j]) / eps;
            f[static_cast<size_t>(i)] = eps * (la[static_cast<size_t>(i)] - lse(scratch_row));
        }
        for (int j = 0; j < cols; ++j) {
            if (b[static_cast<size_t>(j)] <= 0) continue;
            for (int i = 0; i < rows; ++i)
                scratch_col[static_cast<size_t>(i)] = (f[static_cast<size_t>(i)] -
                                                       cost[static_cast<size_t>(i) * cols + j]) / eps;
            g[static_cast<size_t>(j)] = eps * (lb[static_cast<size_t>(j)] - lse(scratch_col));
        }
    };

    // cold temperatures stall when started from zero potentials; an epsilon
    // schedule warm-starts the duals, then the remaining budget runs at the
    // requested epsilon (only those iterates are candidates for the result)
    double cmax = 0;
    for (double c : cost) cmax = std::max(cmax, std::abs(c));
    double eps_hot = std::max(epsilon, 0.25 * cmax);
    int it = 0;
    for (double eps = eps_hot; eps > epsilon * 1.0001 && it < iterations / 2; eps *= 0.6, ++it)
        iterate(eps);
    for (; it < iterations; ++it) {
        iterate(epsilon);
        compute_plan(plan);
        double err = marginal_err(plan);
        if (err < best.marginal_err) {
            best.marginal_err = err;
            best.plan = plan;
            best.iterations_used = it + 1;
        }
        if (err < 1e-7) break;
    }
    best.converged = best.marginal_err <= 1e-6;

    // project the final iterate onto the transport polytope: scale overfull
    // rows/columns down, then absorb the missing mass with a rank-one
    // correction. Marginals become exact; the cost moves by at most the
    // pre-projection violation times the largest cost entry.
    {
        std::vector<double>& P = best.plan;
        std::vector<double> rsum(static_cast<size_t>(rows), 0.0), csum(static_cast<size_t>(cols), 0.0);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) rsum[static_cast<size_t>(i)] += P[static_cast<size_t>(i) * cols + j];
        for (int i = 0; i < rows; ++i) {
            double s = rsum[static_cast<size_t>(i)] > a[static_cast<size_t>(i)] && rsum[static_cast<size_t>(i)] > 0
                           ? a[static_cast<size_t>(i)] / rsum[static_cast<size_t>(i)] : 1.0;
            if (s != 1.0)
                for (int j = 0; j < cols; ++j) P[static_cast<size_t>(i) * cols + j] *= s;
        }
        for (int j = 0; j < cols; ++j) {
            csum[static_cast<size_t>(j)] = 0;
            for (int i = 0; i < rows; ++i) csum[static_cast<size_t>(j)] += P[static_cast<size_t>(i) * cols + j];
            double s = csum[static_cast<size_t>(j)] > b[static_cast<size_t>(j)] && csum[static_cast<size_t>(j)] > 0
                           ? b[static_cast<size_t>(j)] / csum[static_cast<size_t>(j)] : 1.0;
            if (s != 1.0)
                for (int i = 0; i < rows; ++i) P[static_cast<size_t>(i) * cols + j] *= s;
        }
        std::vector<double> da(static_cast<size_t>(rows), 0.0), db(static_cast<size_t>(cols), 0.0);
        double total = 0;
        for (int i = 0; i < rows; ++i) {
            double s = 0;
            for (int j = 0; j < cols; ++j) s += P[static_cast<size_t>(i) * cols + j];
            da[static_cast<size_t>(i)] = a[static_cast<size_t>(i)] - s;
            total += da[static_cast<size_t>(i)];
        }
        for (int j = 0; j < cols; ++j) {
            double s = 0;
            for (int i = 0; i < rows; ++i) s += P[static_cast<size_t>(i) * cols + j];
            db[static_cast<size_t>(j)] = b[static_cast<size_t>(j)] - s;
        }
        if (total > 1e-300) {
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j)
                    P[static_cast<size_t>(i) * cols + j] += da[static_cast<size_t>(i)] * db[static_cast<size_t>(j)] / total;
        }
        best.marginal_err = marginal_err(P);
    }
    return best;
}

AssociationResult associate(const SinkhornResult& plan, TrackletBank& bank,
                            const std::vector<std::vector<double>>& det_tokens, int64_t frame,
                            const TrackerConfig& cfg) {
    int m = plan.rows - 1, n = plan.cols - 1;
    if (static_cast<int>(bank.entries.size()) != m || static_cast<int>(det_tokens.size()) != n)
        throw ContractViolation("associate: plan does not match bank/detections");
    auto P = [&](int i, int j) { return plan.plan[static_cast<size_t>(i) * plan.cols + j]; };

    AssociationResult out;
    out.det_track_ids.assign(static_cast<size_t>(n), -1);
    std::vector<char> bank_matched(static_cast<size_t>(m), 0);

    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double p = P(i, j);
            bool row_max = true, col_max = true;
            for (int jj = 0; jj < n && row_max; ++jj)
                if (jj != j && P(i, jj) >= p) row_max = false;
            for (int ii = 0; ii < m && col_max; ++ii)
                if (ii != i && P(ii, j) >= p) col_max = false;
            if (row_max && col_max && p > P(i, n) && p > P(m, j)) {
                out.matches.emplace_back(i, j);
                bank_matched[static_cast<size_t>(i)] = 1;
                out.det_track_ids[static_cast<size_t>(j)] = bank.entries[static_cast<size_t>(i)].id;
                Tracklet& tk = bank.entries[static_cast<size_t>(i)];
                if (cfg.ema > 0) {
                    for (size_t k = 0; k < tk.token.size(); ++k)
                        tk.token[k] = (1.0 - cfg.ema) * tk.token[k] + cfg.ema * det_tokens[static_cast<size_t>(j)][k];
                } else {
                    tk.token = det_tokens[static_cast<size_t>(j)];
                }
                tk.last_seen = frame;
                tk.misses = 0;
                break;  // row consumed
            }
        }
    }

    for (int j = 0; j < n; ++j) {
        if (out.det_track_ids[static_cast<size_t>(j)] >= 0) continue;
        Tracklet tk;
        tk.id = bank.next_id++;
        tk.token = det_tokens[static_cast<size_t>(j)];
        tk.last_seen = frame;
        bank.entries.push_back(std::move(tk));
        out.det_track_ids[static_cast<size_t>(j)] = bank.entries.back().id;
        out.new_tracks.push_back(bank.entries.back().id);
    }

    std::vector<Tracklet> kept;
    kept.reserve(bank.entries.size());
    for (int i = 0; i < m; ++i) {
        Tracklet& tk = bank.entries[static_cast<size_t>(i)];
        if (!bank_matched[static_cast<size_t>(i)]) {
            tk.misses += 1;
            if (tk.misses > cfg.max_misses) {
                out.lost_tracks.push_back(tk.id);
                continue;
            }
        }
        kept.push_back(std::move(tk));
    }
    for (size_t i = static_cast<size_t>(m); i < bank.entries.size(); ++i)
        kept.push_back(std::move(bank.entries[i]));
    bank.entries = std::move(kept);
    return out;
}

AssociationResult track_frame(TrackletBank& bank,
                              const std::vector<std::vector<double>>& det_tokens, int64_t frame,
                              const TrackerConfig& cfg) {
    int m = static_cast<int>(bank.entries.size());
    int n = static_cast<int>(det_tokens.size());
    std::vector<std::vector<double>> bank_tokens(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) bank_tokens[static_cast<size_t>(i)] = bank.entries[static_cast<size_t>(i)].token;
    std::vector<double> d = cost_matrix(bank_tokens, det_tokens);
    double gamma = cfg.gamma;
    if (gamma < 0) {
        if (d.empty()) {
            gamma = 1.0;
        } else {
            std::vector<double> sorted = d;
            std::sort(sorted.begin(), sorted.end());
            double median = sorted[sorted.size() / 2];
            gamma = std::max(median, cfg.gamma_floor);
        }
    }
    std::vector<double> dbar = dustbin_augment(d, m, n, gamma);
    SinkhornResult plan = sinkhorn(dbar, m + 1, n + 1, tracker_row_marginals(m, n),
                                   tracker_col_marginals(m, n), cfg.epsilon, cfg.iterations);
    return associate(plan, bank, det_tokens, frame, cfg);
}

}  // namespace t4dr
