#include "pgs/selector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace pgs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Unbiased bounded draw; keeps candidate sampling independent of the
// standard library's distribution internals. range must be >= 1.
std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t range) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % range;
}

std::vector<int> sampled_prefix(int n, int k, std::mt19937_64& rng) {
    std::vector<int> perm(std::size_t(n), 0);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        const int j = int(bounded_rand(rng, std::uint64_t(i) + 1));
        std::swap(perm[std::size_t(i)], perm[std::size_t(j)]);
    }
    perm.resize(std::size_t(k));
    std::sort(perm.begin(), perm.end());
    return perm;
}

// Linear-interpolation quantile of an ascending-sorted vector.
double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * double(v.size() - 1);
    const std::size_t lo = std::size_t(pos);
    if (lo + 1 >= v.size()) return v.back();
    const double frac = pos - double(lo);
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return (v[(m - 1) / 2] + v[m / 2]) / 2.0;
}

using Clock = std::chrono::steady_clock;

double us_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::micro>(b - a).count();
}

}  // namespace

void MaskingConfig::validate() const {
    if (!(initial_ratio > 0.0)) throw ConfigError("masking: initial_ratio must be positive");
    if (initial_ratio > lower_ratio) {
        throw ConfigError("masking: initial_ratio exceeds lower_ratio");
    }
    if (lower_ratio > upper_ratio) throw ConfigError("masking: lower_ratio exceeds upper_ratio");
    if (!(upper_ratio < 1.0)) throw ConfigError("masking: upper_ratio must be below 1");
    if (edge_quantile < 0.0 || edge_quantile > 1.0) {
        throw ConfigError("masking: edge_quantile outside [0, 1]");
    }
    if (detector == EdgeDetector::kCanny && (canny_low < 0.0 || canny_low > canny_high)) {
        throw ConfigError("masking: need 0 <= canny_low <= canny_high");
    }
}

CandidateSet init_candidates(int n_patches, const MaskingConfig& cfg, std::mt19937_64& rng) {
    if (n_patches < 1) throw ConfigError("init_candidates: need at least one patch");
    int k = int(std::lround(cfg.initial_ratio * n_patches));
    k = std::clamp(k, 1, n_patches);
    return CandidateSet{sampled_prefix(n_patches, k, rng)};
}

std::vector<double> expansion_scores(const SimilarityMatrix& s_prime, const CandidateSet& cand,
                                     const MaskingConfig& cfg, int grid_h, int grid_w) {
    const int n = grid_h * grid_w;
    if (!s_prime.square() || s_prime.rows != std::size_t(n)) {
        throw ShapeError("expansion_scores: similarity matrix does not match grid");
    }
    std::vector<bool> is_cand(std::size_t(n), false);
    for (int c : cand.indices) {
        if (c < 0 || c >= n) throw ShapeError("expansion_scores: candidate index out of range");
        is_cand[std::size_t(c)] = true;
    }
    if (cand.indices.empty()) throw ConfigError("expansion_scores: empty candidate set");

    std::vector<double> scores(std::size_t(n), 0.0);
    for (int p = 0; p < n; ++p) {
        if (is_cand[std::size_t(p)]) {
            scores[std::size_t(p)] = kInf;  // already selected
            continue;
        }
        double acc = 0.0;
        int cnt = 0;
        if (cfg.neighborhood == Neighborhood::kAdjacent8) {
            const int r = p / grid_w, c = p % grid_w;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const int nr = r + dr, nc = c + dc;
                    if (nr < 0 || nc < 0 || nr >= grid_h || nc >= grid_w) continue;
                    const int q = nr * grid_w + nc;
                    if (is_cand[std::size_t(q)]) {
                        acc += s_prime(std::size_t(p), std::size_t(q));
                        ++cnt;
                    }
                }
            }
        }
        if (cnt == 0) {
            // Global fallback (and the whole rule in global mode).
            for (int q : cand.indices) acc += s_prime(std::size_t(p), std::size_t(q));
            cnt = int(cand.indices.size());
        }
        scores[std::size_t(p)] = acc / double(cnt);
    }
    return scores;
}

EdgeRetention apply_edge_retention(const std::vector<double>& scores, const EdgeScores& edge,
                                   const MaskingConfig& cfg) {
    if (scores.size() != edge.scores.size()) {
        throw ShapeError("edge_retention: score/edge length mismatch");
    }
    const int n = int(scores.size());

    EdgeRetention out;
    out.scores = scores;

    std::vector<double> nonzero;
    for (double e : edge.scores) {
        if (e > 0.0) nonzero.push_back(e);
    }
    if (nonzero.empty()) return out;  // no "high" edges exist

    std::sort(nonzero.begin(), nonzero.end());
    const double threshold = quantile_sorted(nonzero, cfg.edge_quantile);

    std::vector<int> retained;
    for (int p = 0; p < n; ++p) {
        if (edge.scores[std::size_t(p)] >= threshold) retained.push_back(p);
    }

    // The lower masking bound outranks retention: give back the weakest
    // edges until enough patches stay maskable.
    const int lower_count = int(std::floor(cfg.lower_ratio * n));
    const int maskable = n - int(retained.size());
    if (maskable < lower_count) {
        const int need = lower_count - maskable;
        std::vector<int> by_edge = retained;
        std::stable_sort(by_edge.begin(), by_edge.end(), [&](int a, int b) {
            return edge.scores[std::size_t(a)] < edge.scores[std::size_t(b)];
        });
        out.released.assign(by_edge.begin(), by_edge.begin() + need);
        std::sort(out.released.begin(), out.released.end());
        out.release_fired = true;
        std::vector<int> kept;
        std::set_difference(retained.begin(), retained.end(), out.released.begin(),
                            out.released.end(), std::back_inserter(kept));
        retained = std::move(kept);
    }

    for (int p : retained) out.scores[std::size_t(p)] = -kInf;
    out.retained = std::move(retained);
    return out;
}

MaskPlan select_mask(const std::vector<double>& scores, const std::vector<int>& retained,
                     const MaskingConfig& cfg) {
    const int n = int(scores.size());
    if (n == 0) throw ShapeError("select_mask: empty score vector");
    const int lower_count = int(std::floor(cfg.lower_ratio * n));
    const int upper_count = int(std::floor(cfg.upper_ratio * n));

    std::vector<double> finite;
    int n_maskable = 0;
    for (double s : scores) {
        if (std::isfinite(s)) finite.push_back(s);
        if (s != -kInf) ++n_maskable;
    }

    int above = 0;
    if (finite.empty()) {
        above = n_maskable;  // only +inf candidates are rankable
    } else {
        const double threshold = median(finite);
        for (double s : scores) {
            if (s >= threshold) ++above;  // -inf never counts, +inf always does
        }
    }

    int k = std::clamp(above, lower_count, upper_count);
    k = std::min(k, n_maskable);

    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double sa = scores[std::size_t(a)], sb = scores[std::size_t(b)];
        if (sa != sb) return sa > sb;
        return a < b;
    });

    MaskPlan plan;
    plan.masked.assign(order.begin(), order.begin() + k);
    std::sort(plan.masked.begin(), plan.masked.end());
    plan.ratio = double(k) / double(n);
    plan.scores = scores;
    plan.retained_by_edge = retained;
    return plan;
}

MaskPlan generate_mask(const PatchGrid& patches, const EmbeddingMatrix& features, int epoch,
                       const MaskingConfig& cfg, const SinkhornConfig& sinkhorn_cfg,
                       const BlendSchedule& sched, StageTimes* times) {
    cfg.validate();
    const int n = patches.n_patches();
    if (n < 1) throw ShapeError("generate_mask: empty patch grid");
    if (features.rows != std::size_t(n)) {
        throw ShapeError("generate_mask: feature rows " + std::to_string(features.rows) +
                         " != patches " + std::to_string(n));
    }

    const auto t0 = Clock::now();
    EdgeScores edge_sc;
    if (cfg.use_edge) {
        const GrayImage gray = grid_to_grayscale(patches);
        const EdgeMap em = cfg.detector == EdgeDetector::kSobel
                               ? sobel_magnitude(gray)
                               : canny(gray, cfg.canny_low, cfg.canny_high);
        edge_sc = patch_edge_scores(em, patches.grid_h, patches.grid_w, patches.patch_size);
    }

    const auto t1 = Clock::now();
    const SimilarityMatrix s_x = cosine_similarity(normalize_rows(features));
    const SimilarityMatrix s_i = cosine_similarity(normalize_rows(pixel_embeddings(patches)));
    const double alpha = alpha_schedule(epoch, sched);
    SimilarityMatrix s = blend(s_x, s_i, alpha);

    const auto t2 = Clock::now();
    const SimilarityMatrix s_prime = cfg.use_otn ? refine(s, sinkhorn_cfg) : std::move(s);

    const auto t3 = Clock::now();
    std::mt19937_64 rng(cfg.seed);
    const CandidateSet cand = init_candidates(n, cfg, rng);
    const std::vector<double> raw_scores =
        expansion_scores(s_prime, cand, cfg, patches.grid_h, patches.grid_w);

    EdgeRetention retention;
    if (cfg.use_edge) {
        retention = apply_edge_retention(raw_scores, edge_sc, cfg);
    } else {
        retention.scores = raw_scores;
    }

    MaskPlan plan = select_mask(retention.scores, retention.retained, cfg);
    plan.candidates = cand.indices;
    plan.released_by_bound = retention.released;
    plan.bound_release_fired = retention.release_fired;
    plan.grid_h = patches.grid_h;
    plan.grid_w = patches.grid_w;

    const auto t4 = Clock::now();
    if (times) {
        times->edge_us = us_between(t0, t1);
        times->similarity_us = us_between(t1, t2);
        times->sinkhorn_us = us_between(t2, t3);
        times->selection_us = us_between(t3, t4);
        times->total_us = us_between(t0, t4);
    }
    return plan;
}

std::vector<int> random_mask(int n_patches, double ratio, std::mt19937_64& rng) {
    if (n_patches < 1) throw ConfigError("random_mask: need at least one patch");
    if (ratio < 0.0 || ratio >= 1.0) throw ConfigError("random_mask: ratio outside [0, 1)");
    const int k = std::clamp(int(std::lround(ratio * n_patches)), 0, n_patches);
    return sampled_prefix(n_patches, k, rng);
}

}  // namespace pgs
