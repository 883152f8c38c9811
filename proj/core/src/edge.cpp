#include "pgs/edge.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace pgs {

namespace {

inline int clamp_idx(int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); }

// Sample with edge-replicate padding.
inline double sample(const GrayImage& g, int x, int y) {
    return g.at(clamp_idx(x, g.width - 1), clamp_idx(y, g.height - 1));
}

struct Gradients {
    std::vector<double> gx, gy;
};

Gradients sobel_gradients(const GrayImage& g) {
    Gradients out;
    out.gx.resize(g.data.size());
    out.gy.resize(g.data.size());
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            const double tl = sample(g, x - 1, y - 1), tc = sample(g, x, y - 1),
                         tr = sample(g, x + 1, y - 1);
            const double ml = sample(g, x - 1, y), mr = sample(g, x + 1, y);
            const double bl = sample(g, x - 1, y + 1), bc = sample(g, x, y + 1),
                         br = sample(g, x + 1, y + 1);
            const std::size_t i = std::size_t(y) * g.width + x;
            out.gx[i] = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
            out.gy[i] = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
        }
    }
    return out;
}

GrayImage gaussian_blur_5x5(const GrayImage& g) {
    // sigma = 1, sampled at integer offsets -2..2, normalized to sum 1.
    static const std::array<double, 5> k = [] {
        std::array<double, 5> w{};
        double sum = 0.0;
        for (int i = -2; i <= 2; ++i) {
            w[i + 2] = std::exp(-0.5 * i * i);
            sum += w[i + 2];
        }
        for (double& v : w) v /= sum;
        return w;
    }();

    GrayImage tmp{g.width, g.height, std::vector<double>(g.data.size())};
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i) acc += k[i + 2] * sample(g, x + i, y);
            tmp.at(x, y) = acc;
        }
    }
    GrayImage out{g.width, g.height, std::vector<double>(g.data.size())};
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i) acc += k[i + 2] * sample(tmp, x, y + i);
            out.at(x, y) = acc;
        }
    }
    return out;
}

}  // namespace

EdgeMap sobel_magnitude(const GrayImage& g) {
    if (g.width < 3 || g.height < 3) {
        throw ConfigError("sobel: image " + std::to_string(g.width) + "x" +
                          std::to_string(g.height) + " smaller than the 3x3 kernel");
    }
    const Gradients grad = sobel_gradients(g);
    EdgeMap em{g.width, g.height, std::vector<double>(g.data.size())};
    for (std::size_t i = 0; i < em.magnitude.size(); ++i) {
        em.magnitude[i] = std::hypot(grad.gx[i], grad.gy[i]);
    }
    return em;
}

EdgeMap canny(const GrayImage& g, double low, double high) {
    if (low > high) throw ConfigError("canny: low threshold exceeds high");
    if (low < 0.0) throw ConfigError("canny: thresholds must be nonnegative");
    if (g.width < 5 || g.height < 5) {
        throw ConfigError("canny: image " + std::to_string(g.width) + "x" +
                          std::to_string(g.height) + " smaller than the 5x5 Gaussian kernel");
    }

    const GrayImage smoothed = gaussian_blur_5x5(g);
    const Gradients grad = sobel_gradients(smoothed);

    std::vector<double> mag(g.data.size());
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::hypot(grad.gx[i], grad.gy[i]);

    // Non-maximum suppression along the quantized gradient direction.
    // Ties toward the positive direction are suppressed so step edges thin
    // to one pixel.
    constexpr double pi = std::numbers::pi;
    static constexpr int dirs[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
    std::vector<double> thin(mag.size(), 0.0);
    auto mag_at = [&](int x, int y) {
        return mag[std::size_t(clamp_idx(y, g.height - 1)) * g.width + clamp_idx(x, g.width - 1)];
    };
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            const std::size_t i = std::size_t(y) * g.width + x;
            if (mag[i] == 0.0) continue;
            double angle = std::atan2(grad.gy[i], grad.gx[i]);
            if (angle < 0.0) angle += pi;
            const int bin = static_cast<int>((angle + pi / 8.0) / (pi / 4.0)) % 4;
            const double fwd = mag_at(x + dirs[bin][0], y + dirs[bin][1]);
            const double bwd = mag_at(x - dirs[bin][0], y - dirs[bin][1]);
            if (mag[i] > fwd && mag[i] >= bwd) thin[i] = mag[i];
        }
    }

    // Double threshold + hysteresis: strong seeds flood through weak pixels
    // (8-connected).
    EdgeMap out{g.width, g.height, std::vector<double>(mag.size(), 0.0)};
    std::vector<std::size_t> stack;
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            const std::size_t i = std::size_t(y) * g.width + x;
            if (thin[i] > high && out.magnitude[i] == 0.0) {
                out.magnitude[i] = 1.0;
                stack.push_back(i);
                while (!stack.empty()) {
                    const std::size_t j = stack.back();
                    stack.pop_back();
                    const int jx = int(j % g.width), jy = int(j / g.width);
                    for (int dy = -1; dy <= 1; ++dy) {
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int nx = jx + dx, ny = jy + dy;
                            if (nx < 0 || ny < 0 || nx >= g.width || ny >= g.height) continue;
                            const std::size_t k = std::size_t(ny) * g.width + nx;
                            if (out.magnitude[k] == 0.0 && thin[k] > low) {
                                out.magnitude[k] = 1.0;
                                stack.push_back(k);
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

EdgeScores patch_edge_scores(const EdgeMap& em, int grid_h, int grid_w, int patch_size) {
    if (em.width != grid_w * patch_size || em.height != grid_h * patch_size) {
        throw ShapeError("patch_edge_scores: edge map " + std::to_string(em.width) + "x" +
                         std::to_string(em.height) + " does not match grid " +
                         std::to_string(grid_w * patch_size) + "x" +
                         std::to_string(grid_h * patch_size));
    }
    EdgeScores out;
    out.scores.resize(std::size_t(grid_h) * grid_w);
    double max_mean = 0.0;
    for (int gy = 0; gy < grid_h; ++gy) {
        for (int gx = 0; gx < grid_w; ++gx) {
            double acc = 0.0;
            for (int py = 0; py < patch_size; ++py) {
                for (int px = 0; px < patch_size; ++px) {
                    acc += em.at(gx * patch_size + px, gy * patch_size + py);
                }
            }
            const double mean = acc / (double(patch_size) * patch_size);
            out.scores[std::size_t(gy) * grid_w + gx] = mean;
            max_mean = std::max(max_mean, mean);
        }
    }
    if (max_mean > 0.0) {
        for (double& s : out.scores) s /= max_mean;
    }
    return out;
}

}  // namespace pgs
