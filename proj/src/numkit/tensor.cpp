#include "clare/numkit/tensor.hpp"

#include "clare/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

namespace clare::numkit {

std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != 0) {
            out += "x";
        }
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (element_count(shape_) != data_.size()) {
        throw DimensionError("tensor shape " + to_string(shape_) + " needs " +
                             std::to_string(element_count(shape_)) + " values, got " +
                             std::to_string(data_.size()));
    }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t n_rows = rows.size();
    const std::size_t n_cols = n_rows == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(n_rows * n_cols);
    for (const auto& r : rows) {
        if (r.size() != n_cols) {
            throw DimensionError("ragged matrix literal");
        }
        data.insert(data.end(), r.begin(), r.end());
    }
    return Tensor({n_rows, n_cols}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::rows() const {
    if (shape_.size() == 1) {
        return 1;
    }
    if (shape_.size() != 2) {
        throw DimensionError("expected rank-1 or rank-2 tensor, got " + to_string(shape_));
    }
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (shape_.size() == 1) {
        return shape_[0];
    }
    if (shape_.size() != 2) {
        throw DimensionError("expected rank-1 or rank-2 tensor, got " + to_string(shape_));
    }
    return shape_[1];
}

std::span<double> Tensor::row(std::size_t i) {
    const std::size_t c = cols();
    return {data_.data() + i * c, c};
}

std::span<const double> Tensor::row(std::size_t i) const {
    const std::size_t c = cols();
    return {data_.data() + i * c, c};
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool Tensor::operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_.size() == other.data_.size() &&
           (data_.empty() || std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0);
}

void require_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) {
        throw NumericError("non-finite value in " + what + " " + to_string(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
    if (a.shape() != b.shape()) {
        throw DimensionError(what + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    }
}

Tensor gather_rows(const Tensor& source, std::span<const std::size_t> indices) {
    const std::size_t c = source.cols();
    const std::size_t n = source.rows();
    Tensor out({indices.size(), c});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= n) {
            throw DimensionError("row index " + std::to_string(indices[i]) + " out of range for " +
                                 to_string(source.shape()));
        }
        std::copy_n(source.data() + indices[i] * c, c, out.data() + i * c);
    }
    return out;
}

Tensor concat_rows(const Tensor& top, const Tensor& bottom) {
    if (top.empty() && top.rank() != 2) {
        return bottom;
    }
    if (bottom.empty() && bottom.rank() != 2) {
        return top;
    }
    if (top.cols() != bottom.cols()) {
        throw DimensionError("concat_rows: column mismatch " + to_string(top.shape()) + " vs " +
                             to_string(bottom.shape()));
    }
    std::vector<double> data(top.values().begin(), top.values().end());
    data.insert(data.end(), bottom.values().begin(), bottom.values().end());
    return Tensor({top.rows() + bottom.rows(), top.cols()}, std::move(data));
}

} // namespace clare::numkit
