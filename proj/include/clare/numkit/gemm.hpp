#pragma once

#include "clare/numkit/tensor.hpp"

#include <cstddef>

namespace clare::numkit {

/// Read-only strided view of a matrix; transposition is a stride swap.
struct MatrixView {
    const double* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::ptrdiff_t row_stride = 0;
    std::ptrdiff_t col_stride = 1;

    static MatrixView of(const Tensor& t);

    MatrixView transposed() const { return {data, cols, rows, col_stride, row_stride}; }
    double at(std::size_t i, std::size_t j) const {
        return data[static_cast<std::ptrdiff_t>(i) * row_stride + static_cast<std::ptrdiff_t>(j) * col_stride];
    }
};

/// C = A * B, or C += A * B when `accumulate` is set. C is row-major with
/// leading dimension `ldc`.
///
/// Every C(i, j) is the fused-multiply-add chain over k = 0..K-1 starting
/// from zero, independent of M, N and the tile an element lands in. Two
/// products that share row i of A and column j of B therefore agree bit for
/// bit even when the surrounding matrices differ in size.
void gemm(MatrixView a, MatrixView b, double* c, std::size_t ldc, bool accumulate);

} // namespace clare::numkit
