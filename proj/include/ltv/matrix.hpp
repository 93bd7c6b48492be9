#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace ltv {

// Row-major dense matrix of doubles. 64-bit floats throughout the project;
// metric reproducibility and gradient-check tolerances depend on it.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

    std::span<double> row_span(int r) { return {row(r), static_cast<std::size_t>(cols)}; }
    std::span<const double> row_span(int r) const { return {row(r), static_cast<std::size_t>(cols)}; }

    double& at(int r, int c) {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return data[static_cast<std::size_t>(r) * cols + c];
    }
    double at(int r, int c) const {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return data[static_cast<std::size_t>(r) * cols + c];
    }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    bool operator==(const Matrix&) const = default;
};

}  // namespace ltv
