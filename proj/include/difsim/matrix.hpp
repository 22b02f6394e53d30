#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace difsim {

using VecD = std::vector<double>;

// Dense row-major matrix of doubles. Rows are samples throughout the library.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    VecD row_vec(std::size_t r) const {
        return VecD(data.begin() + static_cast<std::ptrdiff_t>(r * cols),
                    data.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
    }

    static Matrix from_rows(const std::vector<VecD>& rows_in) {
        if (rows_in.empty()) return {};
        Matrix m(rows_in.size(), rows_in.front().size());
        for (std::size_t r = 0; r < rows_in.size(); ++r) {
            if (rows_in[r].size() != m.cols)
                throw std::invalid_argument("Matrix::from_rows: ragged input");
            for (std::size_t c = 0; c < m.cols; ++c) m.at(r, c) = rows_in[r][c];
        }
        return m;
    }

    bool operator==(const Matrix& other) const = default;
};

}  // namespace difsim
