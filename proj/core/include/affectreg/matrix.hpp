#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace affectreg {

// Row-major dense matrix of doubles. Just enough surface for the network
// and solver code; anything heavier belongs in the caller.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) {
        assert(r < rows && c < cols);
        return data[r * cols + c];
    }
    double at(std::size_t r, std::size_t c) const {
        assert(r < rows && c < cols);
        return data[r * cols + c];
    }

    std::span<double> row(std::size_t r) {
        assert(r < rows);
        return {data.data() + r * cols, cols};
    }
    std::span<const double> row(std::size_t r) const {
        assert(r < rows);
        return {data.data() + r * cols, cols};
    }
};

} // namespace affectreg
