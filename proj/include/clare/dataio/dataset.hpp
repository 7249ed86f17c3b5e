#pragma once

#include "clare/numkit/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

namespace clare::dataio {

using numkit::Tensor;

inline constexpr std::size_t kMnistPixels = 784;

/// Images in [0, 1]^dim with integer labels and a per-class row index.
class LabeledDataset {
public:
    explicit LabeledDataset(std::size_t feature_dim = kMnistPixels);
    // Validates alignment and pixel range.
    LabeledDataset(Tensor images, std::vector<std::int32_t> labels);

    const Tensor& images() const noexcept { return images_; }
    std::span<const std::int32_t> labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return labels_.size(); }
    bool empty() const noexcept { return labels_.empty(); }
    std::size_t feature_dim() const noexcept { return images_.cols(); }

    const std::map<std::int32_t, std::vector<std::size_t>>& class_index() const noexcept { return index_; }
    std::vector<std::int32_t> classes() const;
    std::size_t count(std::int32_t cls) const;

    bool operator==(const LabeledDataset& other) const {
        return images_ == other.images_ && labels_ == other.labels_;
    }

private:
    Tensor images_;
    std::vector<std::int32_t> labels_;
    std::map<std::int32_t, std::vector<std::size_t>> index_;
};

struct MnistSplits {
    LabeledDataset train;
    LabeledDataset test;
};

/// Loads the four standard MNIST files (plain or .gz) and scales pixels by
/// 1/255.
MnistSplits load_mnist(const std::filesystem::path& dir);

/// Pairs an unsigned-byte image file with its label file.
LabeledDataset load_idx_pair(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Rows whose label is in `class_ids`, original order preserved. Throws if
/// an id has no rows in `dataset`.
LabeledDataset subset_by_classes(const LabeledDataset& dataset, std::span<const std::int32_t> class_ids);

/// Rows of `a` followed by rows of `b`.
LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b);

/// Writes images (quantized to bytes) and labels as an IDX pair with
/// 28x28 image dims when the width is 784, otherwise [n x width].
void write_idx_pair(const LabeledDataset& dataset, const std::filesystem::path& images,
                    const std::filesystem::path& labels);

/// Gaussian blobs around class centers clipped to [0, 1].
///
/// Every center is a corner of the {0.2, 0.8}^dim grid: class k sits at 0.8
/// on the coordinates d with d mod n_classes == k and at 0.2 elsewhere.
/// `spread` is the expected L2 norm of the noise, i.e. per-coordinate
/// standard deviation spread / sqrt(dim).
LabeledDataset make_toy_dataset(std::size_t n_classes, std::size_t n_per_class, std::size_t dim, double spread,
                                std::uint64_t seed);

/// Center of class k under make_toy_dataset's layout.
Tensor toy_center(std::size_t n_classes, std::size_t dim, std::size_t k);

} // namespace clare::dataio
