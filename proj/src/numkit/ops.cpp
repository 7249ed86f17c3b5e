#include "clare/numkit/ops.hpp"

#include "clare/errors.hpp"
#include "clare/numkit/gemm.hpp"

#include <algorithm>
#include <cmath>

namespace clare::numkit {

Tensor linear_forward(const Tensor& weight, const Tensor& bias, const Tensor& x) {
    if (weight.rank() != 2 || x.rank() != 2 || weight.cols() != x.cols()) {
        throw DimensionError("linear_forward: weight " + to_string(weight.shape()) + " cannot consume input " +
                             to_string(x.shape()));
    }
    if (bias.size() != weight.rows()) {
        throw DimensionError("linear_forward: bias " + to_string(bias.shape()) + " does not match weight " +
                             to_string(weight.shape()));
    }
    Tensor y({x.rows(), weight.rows()});
    gemm(MatrixView::of(x), MatrixView::of(weight).transposed(), y.data(), y.cols(), false);
    const std::size_t out = weight.rows();
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double* row = y.data() + i * out;
        for (std::size_t j = 0; j < out; ++j) {
            row[j] += bias[j];
        }
    }
    return y;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.values()) {
        v = v > 0.0 ? v : 0.0;
    }
    return y;
}

double stable_sigmoid(double v) {
    if (v >= 0.0) {
        return 1.0 / (1.0 + std::exp(-v));
    }
    const double e = std::exp(v);
    return e / (1.0 + e);
}

// log(1 + exp(v)) without overflow.
double softplus(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }

Tensor sigmoid(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.values()) {
        v = stable_sigmoid(v);
    }
    return y;
}

Tensor log_softmax_rows(const Tensor& logits) {
    Tensor out = logits;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto row = out.row(i);
        if (row.empty()) {
            continue;
        }
        const double peak = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (double v : row) {
            total += std::exp(v - peak);
        }
        const double log_norm = peak + std::log(total);
        for (double& v : row) {
            v -= log_norm;
        }
    }
    return out;
}

Tensor softmax_rows(const Tensor& logits) {
    Tensor out = logits;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto row = out.row(i);
        if (row.empty()) {
            continue;
        }
        const double peak = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (double& v : row) {
            v = std::exp(v - peak);
            total += v;
        }
        for (double& v : row) {
            v /= total;
        }
    }
    return out;
}

} // namespace clare::numkit
