#include <doctest.h>

#include <cmath>
#include <random>

#include "pgs/similarity.hpp"

using namespace pgs;

namespace {

EmbeddingMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    EmbeddingMatrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

}  // namespace

TEST_CASE("normalize_rows scales (3,4) to (0.6,0.8)") {
    const EmbeddingMatrix out = normalize_rows(from_rows({{3.0, 4.0}}));
    CHECK(out(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(out(0, 1) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("normalize_rows keeps unit rows and zero rows fixed") {
    const EmbeddingMatrix out = normalize_rows(from_rows({{1.0, 0.0}, {0.0, 0.0}}));
    CHECK(out(0, 0) == 1.0);
    CHECK(out(0, 1) == 0.0);
    CHECK(out(1, 0) == 0.0);
    CHECK(out(1, 1) == 0.0);
}

TEST_CASE("normalize_rows yields unit norms (idempotence up to rounding)") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    EmbeddingMatrix x(20, 7);
    for (double& v : x.data) v = gauss(rng);
    const EmbeddingMatrix n1 = normalize_rows(x);
    for (std::size_t r = 0; r < n1.rows; ++r) {
        double norm = 0.0;
        for (std::size_t c = 0; c < n1.cols; ++c) norm += n1(r, c) * n1(r, c);
        CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-9);
    }
}

TEST_CASE("cosine similarity of identical unit rows is the all-ones matrix") {
    const SimilarityMatrix s = cosine_similarity(from_rows({{1.0, 0.0}, {1.0, 0.0}}));
    CHECK(s(0, 0) == 1.0);
    CHECK(s(0, 1) == 1.0);
    CHECK(s(1, 0) == 1.0);
    CHECK(s(1, 1) == 1.0);
}

TEST_CASE("cosine similarity of orthonormal rows is the identity") {
    const SimilarityMatrix s = cosine_similarity(from_rows({{1.0, 0.0}, {0.0, 1.0}}));
    CHECK(s(0, 0) == 1.0);
    CHECK(s(1, 1) == 1.0);
    CHECK(s(0, 1) == 0.0);
    CHECK(s(1, 0) == 0.0);
}

TEST_CASE("cosine similarity of (1,0) and the diagonal unit is 1/sqrt(2)") {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const SimilarityMatrix s =
        cosine_similarity(from_rows({{1.0, 0.0}, {inv_sqrt2, inv_sqrt2}}));
    CHECK(s(0, 1) == doctest::Approx(0.7071067811865476).epsilon(1e-12));
    CHECK(s(1, 0) == s(0, 1));
}

TEST_CASE("cosine similarity is symmetric with unit diagonal for normalized inputs") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss;
    EmbeddingMatrix x(24, 9);
    for (double& v : x.data) v = gauss(rng);
    const SimilarityMatrix s = cosine_similarity(normalize_rows(x));
    for (std::size_t i = 0; i < s.rows; ++i) {
        CHECK(std::abs(s(i, i) - 1.0) < 1e-9);
        for (std::size_t j = 0; j < s.cols; ++j) {
            CHECK(std::abs(s(i, j) - s(j, i)) < 1e-9);
            CHECK(s(i, j) <= 1.0 + 1e-9);
            CHECK(s(i, j) >= -1.0 - 1e-9);
        }
    }
}

TEST_CASE("blend honors its endpoints and averages in between") {
    const SimilarityMatrix sx = from_rows({{0.2}});
    const SimilarityMatrix si = from_rows({{0.6}});
    CHECK(blend(sx, si, 1.0)(0, 0) == 0.2);
    CHECK(blend(sx, si, 0.0)(0, 0) == 0.6);
    CHECK(blend(sx, si, 0.5)(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("blend rejects shape mismatches and out-of-range alpha") {
    const SimilarityMatrix a(2, 2), b(3, 3);
    CHECK_THROWS_AS(blend(a, b, 0.5), ShapeError);
    CHECK_THROWS_AS(blend(a, a, 1.5), ConfigError);
    CHECK_THROWS_AS(blend(a, a, -0.1), ConfigError);
}

TEST_CASE("alpha_schedule ramps linearly between its endpoints") {
    BlendSchedule sched;
    sched.alpha_min = 0.0;
    sched.alpha_max = 0.8;
    sched.ramp_epochs = 16;
    CHECK(alpha_schedule(0, sched) == 0.0);
    CHECK(alpha_schedule(8, sched) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(alpha_schedule(16, sched) == 0.8);
    CHECK(alpha_schedule(100, sched) == 0.8);
}

TEST_CASE("alpha_schedule with a zero ramp sits at alpha_max") {
    BlendSchedule sched;
    sched.alpha_min = 0.1;
    sched.alpha_max = 0.7;
    sched.ramp_epochs = 0;
    CHECK(alpha_schedule(0, sched) == 0.7);
    CHECK(alpha_schedule(5, sched) == 0.7);
}

TEST_CASE("alpha_schedule is non-decreasing in the epoch") {
    BlendSchedule sched;
    sched.alpha_min = 0.05;
    sched.alpha_max = 0.9;
    sched.ramp_epochs = 13;
    double prev = -1.0;
    for (int e = 0; e < 40; ++e) {
        const double a = alpha_schedule(e, sched);
        CHECK(a >= prev);
        prev = a;
    }
}

TEST_CASE("pixel embeddings are mean-centered per patch") {
    PatchGrid grid;
    grid.grid_h = 1;
    grid.grid_w = 2;
    grid.patch_size = 2;
    grid.patches = {{0, 0, 0, 255, 255, 255, 0, 0, 0, 255, 255, 255},
                    {10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120}};
    const EmbeddingMatrix x = pixel_embeddings(grid);
    REQUIRE(x.rows == 2);
    REQUIRE(x.cols == 12);
    for (std::size_t r = 0; r < 2; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 12; ++c) sum += x(r, c);
        CHECK(std::abs(sum) < 1e-9);
    }
    // First patch alternates -127.5 / +127.5 around its mean.
    CHECK(x(0, 0) == doctest::Approx(-127.5));
    CHECK(x(0, 3) == doctest::Approx(127.5));
}

TEST_CASE("random projection features are reproducible and seed-sensitive") {
    PatchGrid grid;
    grid.grid_h = 1;
    grid.grid_w = 2;
    grid.patch_size = 2;
    grid.patches = {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11},
                    {11, 10, 9, 8, 7, 6, 5, 4, 3, 2, 1, 0}};
    const EmbeddingMatrix a = random_projection_features(grid, 8, 42);
    const EmbeddingMatrix b = random_projection_features(grid, 8, 42);
    const EmbeddingMatrix c = random_projection_features(grid, 8, 43);
    CHECK(a.data == b.data);
    CHECK(a.data != c.data);
}
