#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace t4dr {

struct TrackerConfig {
    double gamma = -1.0;        // dustbin cost; < 0 selects the per-frame median rule
    double gamma_floor = 0.05;  // lower clamp for the median rule
    double epsilon = 0.01;      // sinkhorn temperature
    int iterations = 200;
    int max_misses = 30;        // bank entries retire after this many unmatched frames
    double ema = 0.0;           // 0 = replace matched token, (0,1] = blend toward detection
};

struct Tracklet {
    int64_t id = 0;
    std::vector<double> token;
    int64_t last_seen = -1;
    int misses = 0;
};

struct TrackletBank {
    std::vector<Tracklet> entries;
    int64_t next_id = 0;
};

// D[m*N + n] = ||bank_m - det_n||_2
std::vector<double> cost_matrix(const std::vector<std::vector<double>>& bank_tokens,
                                const std::vector<std::vector<double>>& det_tokens);

// (M+1)x(N+1): original block plus a dustbin row/column at cost gamma
std::vector<double> dustbin_augment(const std::vector<double>& d, int m, int n, double gamma);

struct SinkhornResult {
    std::vector<double> plan;  // rows x cols
    int rows = 0, cols = 0;
    bool converged = false;
    double marginal_err = 0.0;
    int iterations_used = 0;
};

// Log-domain entropic OT with marginals a (rows) and b (cols). Runs up to
// `iterations` alternating normalizations, stopping early once the worst
// marginal violation drops below 1e-7; when the budget runs out the best
// iterate seen is returned with converged = false.
SinkhornResult sinkhorn(const std::vector<double>& cost, int rows, int cols,
                        const std::vector<double>& a, const std::vector<double>& b, double epsilon,
                        int iterations);

// tracker marginals from the augmented problem: a = [1_M, N], b = [1_N, M]
std::vector<double> tracker_row_marginals(int m, int n);
std::vector<double> tracker_col_marginals(int m, int n);

struct AssociationResult {
    std::vector<int64_t> det_track_ids;            // one id per detection
    std::vector<std::pair<int, int>> matches;      // (bank index, detection index)
    std::vector<int64_t> new_tracks;
    std::vector<int64_t> lost_tracks;              // retired this frame
};

// Mutual-max extraction over real entries with dustbin dominance, then bank
// bookkeeping (token replacement, miss counting, retirement).
AssociationResult associate(const SinkhornResult& plan, TrackletBank& bank,
                            const std::vector<std::vector<double>>& det_tokens, int64_t frame,
                            const TrackerConfig& cfg);

// cost -> gamma rule -> dustbin -> sinkhorn -> associate
AssociationResult track_frame(TrackletBank& bank,
                              const std::vector<std::vector<double>>& det_tokens, int64_t frame,
                              const TrackerConfig& cfg);

}  // namespace t4dr
