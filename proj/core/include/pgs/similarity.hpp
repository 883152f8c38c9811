#pragma once

#include <cstdint>

#include "pgs/image.hpp"
#include "pgs/matrix.hpp"

namespace pgs {

// Linear ramp for the feature/image blending weight alpha.
struct BlendSchedule {
    double alpha_min = 0.0;
    double alpha_max = 0.8;
    int ramp_epochs = 16;
};

// Scales every nonzero row to unit L2 norm; zero rows stay zero.
EmbeddingMatrix normalize_rows(const EmbeddingMatrix& x);

// S = X X^T for a row-normalized X. Symmetric, entries in [-1, 1].
SimilarityMatrix cosine_similarity(const EmbeddingMatrix& x);

// Elementwise alpha * s_x + (1 - alpha) * s_i. alpha must lie in [0, 1].
SimilarityMatrix blend(const SimilarityMatrix& s_x, const SimilarityMatrix& s_i, double alpha);

// alpha_min + (alpha_max - alpha_min) * min(1, epoch / ramp_epochs).
// ramp_epochs = 0 pins the schedule at alpha_max.
double alpha_schedule(int epoch, const BlendSchedule& sched);

// Image-side affinity source: flattened patch pixels, mean-centered per patch.
// Rows are not normalized; feed through normalize_rows before cosine.
EmbeddingMatrix pixel_embeddings(const PatchGrid& grid);

// Feature-side affinity source for standalone use: a seeded random linear
// projection of flattened patch pixels (pixels scaled to [0, 1]).
// Inside the toy trainer the encoder's own patch embedding is used instead.
EmbeddingMatrix random_projection_features(const PatchGrid& grid, int dim, std::uint64_t seed);

}  // namespace pgs
