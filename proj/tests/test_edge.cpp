#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pgs/edge.hpp"

using namespace pgs;

namespace {

GrayImage gray(int w, int h, double fill = 0.0) {
    return GrayImage{w, h, std::vector<double>(std::size_t(w) * h, fill)};
}

GrayImage random_gray(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    GrayImage g = gray(w, h);
    for (double& v : g.data) v = double(rng() % 2560) / 10.0;
    return g;
}

// Brute-force 2-D correlation with the Sobel kernels and replicate padding.
// Written as plain nested loops, independent of the implementation.
double brute_sobel_at(const GrayImage& g, int x, int y) {
    static const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    static const int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    double gx = 0.0, gy = 0.0;
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            int sx = x + dx, sy = y + dy;
            sx = sx < 0 ? 0 : (sx >= g.width ? g.width - 1 : sx);
            sy = sy < 0 ? 0 : (sy >= g.height ? g.height - 1 : sy);
            gx += kx[dy + 1][dx + 1] * g.at(sx, sy);
            gy += ky[dy + 1][dx + 1] * g.at(sx, sy);
        }
    }
    return std::sqrt(gx * gx + gy * gy);
}

}  // namespace

TEST_CASE("sobel of a constant image is identically zero") {
    const EdgeMap em = sobel_magnitude(gray(9, 7, 123.0));
    for (double v : em.magnitude) CHECK(v == 0.0);
}

TEST_CASE("sobel of a vertical step has magnitude 1020 on both step columns") {
    GrayImage g = gray(8, 8);
    for (int y = 0; y < 8; ++y) {
        for (int x = 4; x < 8; ++x) g.at(x, y) = 255.0;
    }
    const EdgeMap em = sobel_magnitude(g);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            const double expect = (x == 3 || x == 4) ? 1020.0 : 0.0;
            CHECK(em.at(x, y) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("sobel matches the brute-force convolution oracle on random images") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const GrayImage g = random_gray(8, 8, seed);
        const EdgeMap em = sobel_magnitude(g);
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 8; ++x) {
                CHECK(std::abs(em.at(x, y) - brute_sobel_at(g, x, y)) < 1e-9);
            }
        }
    }
}

TEST_CASE("sobel rejects images smaller than the kernel") {
    CHECK_THROWS_AS(sobel_magnitude(gray(2, 8)), ConfigError);
    CHECK_THROWS_AS(sobel_magnitude(gray(8, 2)), ConfigError);
}

TEST_CASE("canny of a constant image is all zero") {
    const EdgeMap em = canny(gray(16, 16, 200.0), 10.0, 30.0);
    for (double v : em.magnitude) CHECK(v == 0.0);
}

TEST_CASE("canny thins a sharp vertical step to a one-pixel line") {
    GrayImage g = gray(16, 16);
    for (int y = 0; y < 16; ++y) {
        for (int x = 8; x < 16; ++x) g.at(x, y) = 255.0;
    }
    const EdgeMap em = canny(g, 50.0, 100.0);
    for (int y = 0; y < 16; ++y) {
        int ones = 0;
        for (int x = 0; x < 16; ++x) {
            if (em.at(x, y) != 0.0) {
                CHECK(em.at(x, y) == 1.0);
                ++ones;
                CHECK(x == 8);
            }
        }
        CHECK(ones == 1);
    }
}

TEST_CASE("canny with an infinite high threshold returns an empty map") {
    GrayImage g = random_gray(12, 12, 3);
    const EdgeMap em = canny(g, 10.0, std::numeric_limits<double>::infinity());
    for (double v : em.magnitude) CHECK(v == 0.0);
}

TEST_CASE("canny rejects inverted thresholds") {
    CHECK_THROWS_AS(canny(gray(8, 8), 50.0, 10.0), ConfigError);
}

TEST_CASE("canny output is binary and lies on pixels whose smoothed gradient exceeds low") {
    // The reported edge set must be a subset of the weak-threshold set; the
    // subset relation is checked against an independently smoothed gradient.
    for (std::uint64_t seed = 10; seed < 14; ++seed) {
        const GrayImage g = random_gray(24, 24, seed);
        const double low = 120.0, high = 240.0;
        const EdgeMap em = canny(g, low, high);
        for (int y = 0; y < 24; ++y) {
            for (int x = 0; x < 24; ++x) {
                const double v = em.at(x, y);
                CHECK((v == 0.0 || v == 1.0));
            }
        }
        // Smoothed-gradient magnitude bound: reuse the brute Sobel on a
        // 5x5-Gaussian-smoothed copy built right here.
        GrayImage sm = gray(24, 24);
        std::vector<double> k(5);
        double ks = 0.0;
        for (int i = -2; i <= 2; ++i) {
            k[std::size_t(i + 2)] = std::exp(-0.5 * i * i);
            ks += k[std::size_t(i + 2)];
        }
        for (double& v : k) v /= ks;
        for (int y = 0; y < 24; ++y) {
            for (int x = 0; x < 24; ++x) {
                double acc = 0.0;
                for (int dy = -2; dy <= 2; ++dy) {
                    for (int dx = -2; dx <= 2; ++dx) {
                        int sx = std::clamp(x + dx, 0, 23), sy = std::clamp(y + dy, 0, 23);
                        acc += k[std::size_t(dx + 2)] * k[std::size_t(dy + 2)] * g.at(sx, sy);
                    }
                }
                sm.at(x, y) = acc;
            }
        }
        for (int y = 0; y < 24; ++y) {
            for (int x = 0; x < 24; ++x) {
                if (em.at(x, y) == 1.0) CHECK(brute_sobel_at(sm, x, y) > low);
            }
        }
    }
}

TEST_CASE("patch scores of an all-zero map are all zero") {
    EdgeMap em{8, 8, std::vector<double>(64, 0.0)};
    const EdgeScores s = patch_edge_scores(em, 2, 2, 4);
    for (double v : s.scores) CHECK(v == 0.0);
}

TEST_CASE("a single energetic patch scores 1 and the rest 0") {
    EdgeMap em{8, 8, std::vector<double>(64, 0.0)};
    em.at(6, 1) = 42.0;  // inside patch (gy=0, gx=1)
    const EdgeScores s = patch_edge_scores(em, 2, 2, 4);
    CHECK(s.scores[0] == 0.0);
    CHECK(s.scores[1] == 1.0);
    CHECK(s.scores[2] == 0.0);
    CHECK(s.scores[3] == 0.0);
}

TEST_CASE("patch scores normalize means {10,5,0,20} to {0.5,0.25,0,1}") {
    EdgeMap em{8, 8, std::vector<double>(64, 0.0)};
    const double means[4] = {10.0, 5.0, 0.0, 20.0};
    for (int p = 0; p < 4; ++p) {
        const int gy = p / 2, gx = p % 2;
        for (int y = 0; y < 4; ++y) {
            for (int x = 0; x < 4; ++x) em.at(gx * 4 + x, gy * 4 + y) = means[p];
        }
    }
    const EdgeScores s = patch_edge_scores(em, 2, 2, 4);
    CHECK(s.scores[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.scores[1] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(s.scores[2] == 0.0);
    CHECK(s.scores[3] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("patch scores are invariant to uniform scaling of the map") {
    const GrayImage g = random_gray(16, 16, 77);
    const EdgeMap em = sobel_magnitude(g);
    EdgeMap scaled = em;
    for (double& v : scaled.magnitude) v *= 4.0;  // power of two: exact
    const EdgeScores a = patch_edge_scores(em, 4, 4, 4);
    const EdgeScores b = patch_edge_scores(scaled, 4, 4, 4);
    for (std::size_t i = 0; i < a.scores.size(); ++i) CHECK(a.scores[i] == b.scores[i]);
}

TEST_CASE("patch scores reject mismatched dimensions") {
    EdgeMap em{8, 8, std::vector<double>(64, 0.0)};
    CHECK_THROWS_AS(patch_edge_scores(em, 3, 3, 4), ShapeError);
}
