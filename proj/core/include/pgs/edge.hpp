#pragma once

#include <vector>

#include "pgs/image.hpp"

namespace pgs {

// Per-pixel gradient magnitude (Sobel) or binary edge mask (Canny).
struct EdgeMap {
    int width = 0;
    int height = 0;
    std::vector<double> magnitude;  // row-major, >= 0

    double at(int x, int y) const { return magnitude[std::size_t(y) * width + x]; }
    double& at(int x, int y) { return magnitude[std::size_t(y) * width + x]; }
};

// Per-patch edge scores, normalized so the strongest patch is 1
// (all zero when the map carries no edge energy).
struct EdgeScores {
    std::vector<double> scores;
};

// sqrt(Gx^2 + Gy^2) with the standard 3x3 kernels; borders replicate edges.
// Requires width, height >= 3.
EdgeMap sobel_magnitude(const GrayImage& g);

// Classic Canny: 5x5 Gaussian (sigma = 1), Sobel gradients, non-maximum
// suppression, double-threshold hysteresis. Output entries are 0 or 1.
// Requires width, height >= 5 and low <= high.
EdgeMap canny(const GrayImage& g, double low, double high);

// Mean magnitude per patch, divided by the per-image maximum patch mean.
EdgeScores patch_edge_scores(const EdgeMap& em, int grid_h, int grid_w, int patch_size);

}  // namespace pgs
