#include "pgs/otn.hpp"

#include <algorithm>
#include <cmath>

namespace pgs {

namespace {

void validate(const SimilarityMatrix& s, const SinkhornConfig& cfg) {
    if (!s.square() || s.rows == 0) {
        throw ShapeError("sinkhorn: want a nonempty square matrix, got " +
                         std::to_string(s.rows) + "x" + std::to_string(s.cols));
    }
    for (double v : s.data) {
        if (!std::isfinite(v)) throw NumericError("sinkhorn: non-finite input entry");
    }
    if (cfg.max_iters < 1) throw ConfigError("sinkhorn: max_iters must be >= 1");
    if (cfg.tol <= 0.0) throw ConfigError("sinkhorn: tol must be positive");
    if (cfg.shift_delta <= 0.0) throw ConfigError("sinkhorn: shift_delta must be positive");
    if (cfg.entropic_kernel && cfg.epsilon <= 0.0) {
        throw ConfigError("sinkhorn: epsilon must be positive");
    }
}

}  // namespace

SinkhornResult sinkhorn(const SimilarityMatrix& s, const SinkhornConfig& cfg) {
    validate(s, cfg);
    const std::size_t n = s.rows;

    SinkhornResult res;
    res.m = s;
    if (cfg.entropic_kernel) {
        for (double& v : res.m.data) v = std::exp(v / cfg.epsilon);
    } else {
        // Cosine similarities can be negative; shift to strict positivity.
        const double mn = *std::min_element(res.m.data.begin(), res.m.data.end());
        for (double& v : res.m.data) v = v - mn + cfg.shift_delta;
    }

    std::vector<double> col_sums(n);
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        // Row pass.
        for (std::size_t r = 0; r < n; ++r) {
            double* row = res.m.row_ptr(r);
            double sum = 0.0;
            for (std::size_t c = 0; c < n; ++c) sum += row[c];
            const double inv = 1.0 / sum;
            for (std::size_t c = 0; c < n; ++c) row[c] *= inv;
        }
        // Column pass.
        std::fill(col_sums.begin(), col_sums.end(), 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            const double* row = res.m.row_ptr(r);
            for (std::size_t c = 0; c < n; ++c) col_sums[c] += row[c];
        }
        for (double& v : col_sums) v = 1.0 / v;
        for (std::size_t r = 0; r < n; ++r) {
            double* row = res.m.row_ptr(r);
            for (std::size_t c = 0; c < n; ++c) row[c] *= col_sums[c];
        }

        // Max deviation of any row or column sum from 1 after the full cycle.
        double dev = 0.0;
        std::fill(col_sums.begin(), col_sums.end(), 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            const double* row = res.m.row_ptr(r);
            double sum = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                sum += row[c];
                col_sums[c] += row[c];
            }
            dev = std::max(dev, std::abs(sum - 1.0));
        }
        for (double v : col_sums) dev = std::max(dev, std::abs(v - 1.0));

        res.iterations = iter;
        res.deviation = dev;
        res.trace.push_back(dev);
        if (dev < cfg.tol) break;
    }
    return res;
}

SimilarityMatrix refine(const SimilarityMatrix& s, const SinkhornConfig& cfg) {
    SinkhornResult ds = sinkhorn(s, cfg);
    SimilarityMatrix out = s;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += ds.m.data[i];
    return out;
}

}  // namespace pgs
