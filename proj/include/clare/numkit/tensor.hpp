#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace clare::numkit {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major array of doubles.
///
/// Rank-2 tensors are the workhorse (batch x features); rank-1 tensors hold
/// biases. The invariant product(shape) == size() is enforced at construction
/// and by every mutating member.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor vector(std::initializer_list<double> values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    // Rank-2 views; rank-1 tensors are treated as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    std::span<double> row(std::size_t i);
    std::span<const double> row(std::size_t i) const;

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }

    void fill(double value);
    bool all_finite() const noexcept;

    // Bitwise comparison of shape and payload.
    bool operator==(const Tensor& other) const;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Throws NumericError naming `what` if any entry is NaN or infinite.
void require_finite(const Tensor& t, const std::string& what);

/// Throws DimensionError naming both shapes unless they are equal.
void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what);

/// Stacks the selected rows of a rank-2 tensor into a new tensor.
Tensor gather_rows(const Tensor& source, std::span<const std::size_t> indices);

/// Concatenates rank-2 tensors with equal column counts along the row axis.
Tensor concat_rows(const Tensor& top, const Tensor& bottom);

} // namespace clare::numkit
