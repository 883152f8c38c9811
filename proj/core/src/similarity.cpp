#include "pgs/similarity.hpp"

#include <cmath>
#include <random>

namespace pgs {

namespace {

// Unrolled accumulators so the loop vectorizes; rows are contiguous.
double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

}  // namespace

EmbeddingMatrix normalize_rows(const EmbeddingMatrix& x) {
    EmbeddingMatrix out = x;
    for (std::size_t r = 0; r < out.rows; ++r) {
        double* row = out.row_ptr(r);
        const double norm = std::sqrt(dot(row, row, out.cols));
        if (norm > 0.0) {
            for (std::size_t c = 0; c < out.cols; ++c) row[c] /= norm;
        }
    }
    return out;
}

SimilarityMatrix cosine_similarity(const EmbeddingMatrix& x) {
    SimilarityMatrix s(x.rows, x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* ri = x.row_ptr(i);
        s(i, i) = dot(ri, ri, x.cols);
        for (std::size_t j = i + 1; j < x.rows; ++j) {
            const double v = dot(ri, x.row_ptr(j), x.cols);
            s(i, j) = v;
            s(j, i) = v;
        }
    }
    return s;
}

SimilarityMatrix blend(const SimilarityMatrix& s_x, const SimilarityMatrix& s_i, double alpha) {
    require_same_shape(s_x, s_i, "blend");
    if (alpha < 0.0 || alpha > 1.0) {
        throw ConfigError("blend: alpha " + std::to_string(alpha) + " outside [0, 1]");
    }
    SimilarityMatrix out(s_x.rows, s_x.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = alpha * s_x.data[i] + (1.0 - alpha) * s_i.data[i];
    }
    return out;
}

double alpha_schedule(int epoch, const BlendSchedule& sched) {
    if (epoch < 0) throw ConfigError("alpha_schedule: negative epoch");
    if (sched.alpha_min > sched.alpha_max) {
        throw ConfigError("alpha_schedule: alpha_min exceeds alpha_max");
    }
    if (sched.ramp_epochs <= 0) return sched.alpha_max;
    const double t = std::min(1.0, double(epoch) / double(sched.ramp_epochs));
    return sched.alpha_min + (sched.alpha_max - sched.alpha_min) * t;
}

EmbeddingMatrix pixel_embeddings(const PatchGrid& grid) {
    const std::size_t n = std::size_t(grid.n_patches());
    const std::size_t d = std::size_t(grid.patch_dim());
    EmbeddingMatrix x(n, d);
    for (std::size_t p = 0; p < n; ++p) {
        const auto& patch = grid.patches[p];
        double* row = x.row_ptr(p);
        double mean = 0.0;
        for (std::size_t i = 0; i < d; ++i) mean += patch[i];
        mean /= double(d);
        for (std::size_t i = 0; i < d; ++i) row[i] = patch[i] - mean;
    }
    return x;
}

EmbeddingMatrix random_projection_features(const PatchGrid& grid, int dim, std::uint64_t seed) {
    if (dim <= 0) throw ConfigError("random_projection_features: dim must be positive");
    const std::size_t n = std::size_t(grid.n_patches());
    const std::size_t d = std::size_t(grid.patch_dim());

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix proj(std::size_t(dim), d);
    for (double& w : proj.data) w = gauss(rng);

    EmbeddingMatrix out(n, std::size_t(dim));
    std::vector<double> scaled(d);
    for (std::size_t p = 0; p < n; ++p) {
        const auto& patch = grid.patches[p];
        for (std::size_t i = 0; i < d; ++i) scaled[i] = patch[i] / 255.0;
        for (int k = 0; k < dim; ++k) {
            const double* w = proj.row_ptr(std::size_t(k));
            double acc = 0.0;
            for (std::size_t i = 0; i < d; ++i) acc += w[i] * scaled[i];
            out(p, std::size_t(k)) = acc;
        }
    }
    return out;
}

}  // namespace pgs
