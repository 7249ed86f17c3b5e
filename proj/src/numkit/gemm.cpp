#include "clare/numkit/gemm.hpp"

#include "clare/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace clare::numkit {

namespace {

// 8 x 16 register tile: 16 accumulators of 8 doubles with AVX-512.
constexpr std::size_t kTileRows = 8;
constexpr std::size_t kTileCols = 16;

// Packs B into column panels of kTileCols, k-major inside each panel,
// zero-padded on the right edge.
void pack_b(const MatrixView& b, std::vector<double>& packed) {
    const std::size_t k_dim = b.rows;
    const std::size_t panels = (b.cols + kTileCols - 1) / kTileCols;
    packed.assign(panels * k_dim * kTileCols, 0.0);
    for (std::size_t p = 0; p < panels; ++p) {
        const std::size_t j0 = p * kTileCols;
        const std::size_t width = std::min(kTileCols, b.cols - j0);
        double* dst = packed.data() + p * k_dim * kTileCols;
        for (std::size_t k = 0; k < k_dim; ++k) {
            for (std::size_t c = 0; c < width; ++c) {
                dst[k * kTileCols + c] = b.at(k, j0 + c);
            }
        }
    }
}

void pack_a(const MatrixView& a, std::size_t i0, std::vector<double>& packed) {
    const std::size_t k_dim = a.cols;
    const std::size_t height = std::min(kTileRows, a.rows - i0);
    packed.assign(k_dim * kTileRows, 0.0);
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t k = 0; k < k_dim; ++k) {
            packed[k * kTileRows + r] = a.at(i0 + r, k);
        }
    }
}

void micro_kernel(std::size_t k_dim, const double* a_panel, const double* b_panel,
                  double (&acc)[kTileRows][kTileCols]) {
    for (std::size_t r = 0; r < kTileRows; ++r) {
        for (std::size_t c = 0; c < kTileCols; ++c) {
            acc[r][c] = 0.0;
        }
    }
    for (std::size_t k = 0; k < k_dim; ++k) {
        const double* b = b_panel + k * kTileCols;
        const double* a = a_panel + k * kTileRows;
#pragma GCC unroll 8
        for (std::size_t r = 0; r < kTileRows; ++r) {
            const double av = a[r];
#pragma GCC unroll 16
            for (std::size_t c = 0; c < kTileCols; ++c) {
                acc[r][c] = std::fma(av, b[c], acc[r][c]);
            }
        }
    }
}

} // namespace

MatrixView MatrixView::of(const Tensor& t) {
    return {t.data(), t.rows(), t.cols(), static_cast<std::ptrdiff_t>(t.cols()), 1};
}

void gemm(MatrixView a, MatrixView b, double* c, std::size_t ldc, bool accumulate) {
    if (a.cols != b.rows) {
        throw DimensionError("gemm: inner dimensions differ (" + std::to_string(a.rows) + "x" +
                             std::to_string(a.cols) + " times " + std::to_string(b.rows) + "x" +
                             std::to_string(b.cols) + ")");
    }
    const std::size_t m = a.rows;
    const std::size_t n = b.cols;
    const std::size_t k_dim = a.cols;
    if (m == 0 || n == 0) {
        return;
    }

    thread_local std::vector<double> b_packed;
    thread_local std::vector<double> a_packed;
    pack_b(b, b_packed);

    const std::size_t panels = (n + kTileCols - 1) / kTileCols;
    double acc[kTileRows][kTileCols];
    for (std::size_t i0 = 0; i0 < m; i0 += kTileRows) {
        const std::size_t height = std::min(kTileRows, m - i0);
        pack_a(a, i0, a_packed);
        for (std::size_t p = 0; p < panels; ++p) {
            const std::size_t j0 = p * kTileCols;
            const std::size_t width = std::min(kTileCols, n - j0);
            micro_kernel(k_dim, a_packed.data(), b_packed.data() + p * k_dim * kTileCols, acc);
            for (std::size_t r = 0; r < height; ++r) {
                double* dst = c + (i0 + r) * ldc + j0;
                if (accumulate) {
                    for (std::size_t col = 0; col < width; ++col) {
                        dst[col] += acc[r][col];
                    }
                } else {
                    for (std::size_t col = 0; col < width; ++col) {
                        dst[col] = acc[r][col];
                    }
                }
            }
        }
    }
}

} // namespace clare::numkit
