#pragma once

#include <cstddef>
#include <vector>

#include "pgs/errors.hpp"

namespace pgs {

// Dense row-major matrix of doubles. Used both for patch embeddings
// (rows = patches) and for n x n similarity matrices.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row_ptr(std::size_t r) { return data.data() + r * cols; }
    const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

    bool square() const { return rows == cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": shape mismatch (" +
                         std::to_string(a.rows) + "x" + std::to_string(a.cols) + " vs " +
                         std::to_string(b.rows) + "x" + std::to_string(b.cols) + ")");
    }
}

using EmbeddingMatrix = Matrix;   // rows = patches, cols = embedding dim
using SimilarityMatrix = Matrix;  // square, n_patches x n_patches

}  // namespace pgs
