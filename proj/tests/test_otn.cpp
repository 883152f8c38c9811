#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pgs/otn.hpp"

using namespace pgs;

namespace {

// Independent alternating-normalization oracle. Works on a copy in
// column-major order and runs a fixed number of full cycles; shares no code
// with sinkhorn().
std::vector<double> oracle_sinkhorn(const Matrix& s, double shift_delta, int cycles) {
    const std::size_t n = s.rows;
    std::vector<double> colmaj(n * n);
    double mn = s.data[0];
    for (double v : s.data) mn = std::min(mn, v);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) colmaj[c * n + r] = s(r, c) - mn + shift_delta;
    }
    for (int it = 0; it < cycles; ++it) {
        for (std::size_t r = 0; r < n; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < n; ++c) sum += colmaj[c * n + r];
            for (std::size_t c = 0; c < n; ++c) colmaj[c * n + r] /= sum;
        }
        for (std::size_t c = 0; c < n; ++c) {
            double sum = 0.0;
            for (std::size_t r = 0; r < n; ++r) sum += colmaj[c * n + r];
            for (std::size_t r = 0; r < n; ++r) colmaj[c * n + r] /= sum;
        }
    }
    std::vector<double> rowmaj(n * n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) rowmaj[r * n + c] = colmaj[c * n + r];
    }
    return rowmaj;
}

Matrix random_positive(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Matrix m(n, n);
    for (double& v : m.data) v = 0.05 + double(rng() % 1000) / 500.0;
    return m;
}

double max_sum_deviation(const Matrix& m) {
    double dev = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) sum += m(r, c);
        dev = std::max(dev, std::abs(sum - 1.0));
    }
    for (std::size_t c = 0; c < m.cols; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < m.rows; ++r) sum += m(r, c);
        dev = std::max(dev, std::abs(sum - 1.0));
    }
    return dev;
}

}  // namespace

TEST_CASE("a scaled diagonal normalizes to (nearly) the identity in one cycle") {
    Matrix m(2, 2, 0.0);
    m(0, 0) = 2.0;
    m(1, 1) = 2.0;
    const SinkhornResult res = sinkhorn(m, {});
    CHECK(res.iterations == 1);
    CHECK(std::abs(res.m(0, 0) - 1.0) < 1e-5);
    CHECK(std::abs(res.m(1, 1) - 1.0) < 1e-5);
    CHECK(res.m(0, 1) < 1e-5);
    CHECK(res.m(1, 0) < 1e-5);
    CHECK(res.deviation < 1e-6);
}

TEST_CASE("an already doubly stochastic matrix passes through almost unchanged") {
    Matrix m(2, 2);
    m(0, 0) = 0.3;
    m(0, 1) = 0.7;
    m(1, 0) = 0.7;
    m(1, 1) = 0.3;
    const SinkhornResult res = sinkhorn(m, {});
    // The positivity shift perturbs entries by O(n * shift_delta).
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(res.m.data[i] - m.data[i]) < 1e-4);
    CHECK(res.deviation < 1e-6);
}

TEST_CASE("random positive matrices reach the tolerance and match the oracle") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Matrix m = random_positive(6, seed);
        SinkhornConfig cfg;
        const SinkhornResult res = sinkhorn(m, cfg);
        CHECK(res.deviation < cfg.tol);
        CHECK(max_sum_deviation(res.m) < 1e-6);

        const std::vector<double> oracle = oracle_sinkhorn(m, cfg.shift_delta, res.iterations);
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            CHECK(std::abs(res.m.data[i] - oracle[i]) < 1e-9);
        }
    }
}

TEST_CASE("the deviation trace is non-increasing") {
    for (std::uint64_t seed = 20; seed < 28; ++seed) {
        const SinkhornResult res = sinkhorn(random_positive(12, seed), {});
        for (std::size_t i = 1; i < res.trace.size(); ++i) {
            CHECK(res.trace[i] <= res.trace[i - 1] * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("symmetric inputs stay symmetric after full row+column cycles") {
    std::mt19937_64 rng(5);
    Matrix m(8, 8);
    for (std::size_t r = 0; r < 8; ++r) {
        for (std::size_t c = r; c < 8; ++c) {
            const double v = double(rng() % 1000) / 999.0 - 0.3;
            m(r, c) = v;
            m(c, r) = v;
        }
    }
    const SinkhornResult res = sinkhorn(m, {});
    for (std::size_t r = 0; r < 8; ++r) {
        for (std::size_t c = 0; c < 8; ++c) {
            CHECK(std::abs(res.m(r, c) - res.m(c, r)) < 1e-6);
        }
    }
}

TEST_CASE("sinkhorn is deterministic") {
    const Matrix m = random_positive(16, 99);
    const SinkhornResult a = sinkhorn(m, {});
    const SinkhornResult b = sinkhorn(m, {});
    CHECK(a.m.data == b.m.data);
    CHECK(a.iterations == b.iterations);
    CHECK(a.trace == b.trace);
}

TEST_CASE("sinkhorn rejects bad inputs") {
    CHECK_THROWS_AS(sinkhorn(Matrix(2, 3), {}), ShapeError);
    CHECK_THROWS_AS(sinkhorn(Matrix(0, 0), {}), ShapeError);
    Matrix nan_m(2, 2, 1.0);
    nan_m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(sinkhorn(nan_m, {}), NumericError);
    Matrix inf_m(2, 2, 1.0);
    inf_m(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(sinkhorn(inf_m, {}), NumericError);
    SinkhornConfig bad;
    bad.max_iters = 0;
    CHECK_THROWS_AS(sinkhorn(Matrix(2, 2, 1.0), bad), ConfigError);
}

TEST_CASE("the entropic kernel variant also reaches a doubly stochastic point") {
    SinkhornConfig cfg;
    cfg.entropic_kernel = true;
    cfg.epsilon = 0.5;
    const SinkhornResult res = sinkhorn(random_positive(10, 7), cfg);
    CHECK(max_sum_deviation(res.m) < 1e-6);
}

TEST_CASE("refine of the zero matrix is the uniform 1/n matrix") {
    const SimilarityMatrix out = refine(Matrix(4, 4, 0.0), {});
    for (double v : out.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("refine of a 1x1 matrix adds exactly one") {
    Matrix m(1, 1);
    m(0, 0) = -0.37;
    const SimilarityMatrix out = refine(m, {});
    CHECK(out(0, 0) == doctest::Approx(-0.37 + 1.0).epsilon(1e-12));
}

TEST_CASE("refine minus its input is doubly stochastic within tolerance") {
    std::mt19937_64 rng(31);
    Matrix m(4, 4);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = r; c < 4; ++c) {
            const double v = double(rng() % 2000) / 1000.0 - 1.0;
            m(r, c) = v;
            m(c, r) = v;
        }
    }
    const SimilarityMatrix out = refine(m, {});
    Matrix diff(4, 4);
    for (std::size_t i = 0; i < diff.data.size(); ++i) diff.data[i] = out.data[i] - m.data[i];
    CHECK(max_sum_deviation(diff) < 1e-6);
}

TEST_CASE("refine is deterministic") {
    const Matrix m = random_positive(5, 123);
    CHECK(refine(m, {}).data == refine(m, {}).data);
}
