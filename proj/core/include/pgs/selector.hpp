#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pgs/edge.hpp"
#include "pgs/image.hpp"
#include "pgs/matrix.hpp"
#include "pgs/otn.hpp"
#include "pgs/similarity.hpp"

namespace pgs {

enum class EdgeDetector { kSobel, kCanny };
enum class Neighborhood { kAdjacent8, kGlobal };

struct MaskingConfig {
    double initial_ratio = 0.05;
    double lower_ratio = 0.3;   // fixed variant: lower == upper == 0.5
    double upper_ratio = 0.5;
    double edge_quantile = 0.7;
    Neighborhood neighborhood = Neighborhood::kAdjacent8;
    std::uint64_t seed = 0;

    // Ablation toggles.
    bool use_edge = true;
    bool use_otn = true;
    EdgeDetector detector = EdgeDetector::kSobel;
    double canny_low = 40.0;
    double canny_high = 100.0;

    // Throws ConfigError unless 0 < initial <= lower <= upper < 1 and
    // edge_quantile lies in [0, 1].
    void validate() const;
};

// Initial random mask seed: sorted, duplicate-free patch indices.
struct CandidateSet {
    std::vector<int> indices;
};

// The final mask decision for one image.
struct MaskPlan {
    std::vector<int> masked;             // sorted patch indices
    double ratio = 0.0;                  // |masked| / n_patches
    std::vector<double> scores;          // final per-patch scores; +inf = candidate, -inf = retained
    std::vector<int> retained_by_edge;   // sorted; never intersects masked
    std::vector<int> candidates;         // sorted; the initial random seed set
    int grid_h = 0;
    int grid_w = 0;
    // Lower masking bound forced some high-edge patches back into the pool.
    bool bound_release_fired = false;
    std::vector<int> released_by_bound;
};

// Uniform sample without replacement of round(initial_ratio * n) indices
// (at least 1). Nested under growing initial_ratio for a fixed seed.
CandidateSet init_candidates(int n_patches, const MaskingConfig& cfg, std::mt19937_64& rng);

// Mean S'[p, q] over candidates q near p. In 8-adjacent mode only grid
// neighbors count, falling back to the global candidate mean for patches
// with no adjacent candidate. Candidates themselves score +inf.
std::vector<double> expansion_scores(const SimilarityMatrix& s_prime, const CandidateSet& cand,
                                     const MaskingConfig& cfg, int grid_h, int grid_w);

struct EdgeRetention {
    std::vector<double> scores;   // adjusted: retained patches hold -inf
    std::vector<int> retained;    // sorted, after any lower-bound releases
    std::vector<int> released;    // retained patches given back to the pool
    bool release_fired = false;
};

// Marks patches at or above the edge_quantile quantile of nonzero edge
// scores as unmaskable. When that would leave fewer than
// floor(lower_ratio * n) maskable patches, the retained patches with the
// lowest edge scores are released until the bound is reachable.
EdgeRetention apply_edge_retention(const std::vector<double>& scores, const EdgeScores& edge,
                                   const MaskingConfig& cfg);

// Ranks by score (descending, ties by ascending index) and masks the top k,
// k = clamp(#{score >= median of finite scores}, lower_count, upper_count).
// With lower == upper the count is exact.
MaskPlan select_mask(const std::vector<double>& scores, const std::vector<int>& retained,
                     const MaskingConfig& cfg);

// Per-stage wall time of one generate_mask call, microseconds.
struct StageTimes {
    double edge_us = 0.0;
    double similarity_us = 0.0;   // pixel + feature affinities and blending
    double sinkhorn_us = 0.0;
    double selection_us = 0.0;    // candidates, expansion, retention, ranking
    double total_us = 0.0;
};

// The full pipeline: edge scores, blended similarity, OTN refinement,
// candidate expansion, edge retention, bounded selection.
// Deterministic for fixed inputs, config and seed.
MaskPlan generate_mask(const PatchGrid& patches, const EmbeddingMatrix& features, int epoch,
                       const MaskingConfig& cfg, const SinkhornConfig& sinkhorn_cfg,
                       const BlendSchedule& sched, StageTimes* times = nullptr);

// FLIP-style baseline: uniform random mask of round(ratio * n) patches.
std::vector<int> random_mask(int n_patches, double ratio, std::mt19937_64& rng);

}  // namespace pgs
