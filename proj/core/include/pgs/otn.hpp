#pragma once

#include <vector>

#include "pgs/matrix.hpp"

namespace pgs {

struct SinkhornConfig {
    int max_iters = 50;
    double tol = 1e-6;
    double shift_delta = 1e-6;  // positivity shift: S - min(S) + shift_delta
    // Alternative positivity handling for experiments: exp(S / epsilon)
    // instead of the additive shift.
    bool entropic_kernel = false;
    double epsilon = 0.1;
};

// Doubly stochastic matrix plus the convergence record that produced it.
struct SinkhornResult {
    Matrix m;                      // nonnegative, row/col sums ~ 1
    double deviation = 0.0;        // max |row or col sum - 1| at exit
    int iterations = 0;            // full row+column cycles performed
    std::vector<double> trace;     // deviation after each cycle
};

// Alternating row/column normalization. The input is first made strictly
// positive, then rows and columns are normalized in full cycles until the
// deviation drops below cfg.tol or cfg.max_iters cycles have run.
SinkhornResult sinkhorn(const SimilarityMatrix& s, const SinkhornConfig& cfg);

// S' = S + Sinkhorn(S), elementwise.
SimilarityMatrix refine(const SimilarityMatrix& s, const SinkhornConfig& cfg);

}  // namespace pgs
