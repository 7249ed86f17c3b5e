#include "clare/dataio/dataset.hpp"

#include "clare/dataio/idx.hpp"
#include "clare/errors.hpp"
#include "clare/numkit/random.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace clare::dataio {

namespace {

std::filesystem::path locate(const std::filesystem::path& dir, const std::string& stem) {
    for (const auto& candidate : {dir / stem, dir / (stem + ".gz")}) {
        if (std::filesystem::exists(candidate)) {
            return candidate;
        }
    }
    throw MissingFileError("MNIST file " + (dir / stem).string() + "[.gz] not found");
}

} // namespace

LabeledDataset::LabeledDataset(std::size_t feature_dim) : images_({0, feature_dim}) {}

LabeledDataset::LabeledDataset(Tensor images, std::vector<std::int32_t> labels)
    : images_(std::move(images)), labels_(std::move(labels)) {
    if (images_.rank() != 2) {
        throw DimensionError("dataset images must be [n x dim], got " + numkit::to_string(images_.shape()));
    }
    if (images_.rows() != labels_.size()) {
        throw DimensionError("dataset has " + std::to_string(images_.rows()) + " images but " +
                             std::to_string(labels_.size()) + " labels");
    }
    for (std::size_t i = 0; i < images_.size(); ++i) {
        if (!(images_[i] >= 0.0 && images_[i] <= 1.0)) {
            throw NumericError("pixel " + std::to_string(i) + " = " + std::to_string(images_[i]) +
                               " is outside [0, 1]");
        }
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        index_[labels_[i]].push_back(i);
    }
}

std::vector<std::int32_t> LabeledDataset::classes() const {
    std::vector<std::int32_t> out;
    out.reserve(index_.size());
    for (const auto& [cls, rows] : index_) {
        out.push_back(cls);
    }
    return out;
}

std::size_t LabeledDataset::count(std::int32_t cls) const {
    const auto it = index_.find(cls);
    return it == index_.end() ? 0 : it->second.size();
}

LabeledDataset load_idx_pair(const std::filesystem::path& images, const std::filesystem::path& labels) {
    const auto image_bytes = read_file_bytes(images);
    const auto label_bytes = read_file_bytes(labels);
    const IdxArray img = parse_idx(image_bytes);
    const IdxArray lab = parse_idx(label_bytes);
    if (img.header.dims.empty()) {
        throw ParseError("image file " + images.string() + " has rank 0", 3);
    }
    if (lab.header.dims.size() != 1) {
        throw ParseError("label file " + labels.string() + " must have rank 1", 3);
    }
    const std::size_t n = img.header.dims[0];
    if (lab.header.dims[0] != n) {
        throw DimensionError(images.string() + " holds " + std::to_string(n) + " images but " + labels.string() +
                             " holds " + std::to_string(lab.header.dims[0]) + " labels");
    }
    const std::size_t width = n == 0 ? kMnistPixels : img.data.size() / n;
    Tensor pixels({n, width});
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        pixels[i] = static_cast<double>(img.data[i]) / 255.0;
    }
    std::vector<std::int32_t> ys(lab.data.begin(), lab.data.end());
    return LabeledDataset(std::move(pixels), std::move(ys));
}

MnistSplits load_mnist(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw MissingFileError("MNIST directory " + dir.string() + " does not exist");
    }
    return {load_idx_pair(locate(dir, "train-images-idx3-ubyte"), locate(dir, "train-labels-idx1-ubyte")),
            load_idx_pair(locate(dir, "t10k-images-idx3-ubyte"), locate(dir, "t10k-labels-idx1-ubyte"))};
}

LabeledDataset subset_by_classes(const LabeledDataset& dataset, std::span<const std::int32_t> class_ids) {
    const std::set<std::int32_t> wanted(class_ids.begin(), class_ids.end());
    for (const auto id : wanted) {
        if (dataset.count(id) == 0) {
            throw ConditionError("class " + std::to_string(id) + " has no rows in the dataset");
        }
    }
    std::vector<std::size_t> rows;
    std::vector<std::int32_t> labels;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (wanted.contains(dataset.labels()[i])) {
            rows.push_back(i);
            labels.push_back(dataset.labels()[i]);
        }
    }
    if (rows.empty()) {
        return LabeledDataset(dataset.feature_dim());
    }
    return LabeledDataset(numkit::gather_rows(dataset.images(), rows), std::move(labels));
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
    if (a.feature_dim() != b.feature_dim()) {
        throw DimensionError("cannot concatenate datasets of width " + std::to_string(a.feature_dim()) + " and " +
                             std::to_string(b.feature_dim()));
    }
    std::vector<std::int32_t> labels(a.labels().begin(), a.labels().end());
    labels.insert(labels.end(), b.labels().begin(), b.labels().end());
    if (labels.empty()) {
        return LabeledDataset(a.feature_dim());
    }
    return LabeledDataset(numkit::concat_rows(a.images(), b.images()), std::move(labels));
}

void write_idx_pair(const LabeledDataset& dataset, const std::filesystem::path& images,
                    const std::filesystem::path& labels) {
    IdxArray img;
    const auto n = static_cast<std::uint32_t>(dataset.size());
    if (dataset.feature_dim() == kMnistPixels) {
        img.header.dims = {n, 28, 28};
    } else {
        img.header.dims = {n, static_cast<std::uint32_t>(dataset.feature_dim())};
    }
    img.data.reserve(dataset.images().size());
    for (const double v : dataset.images().values()) {
        img.data.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    }
    IdxArray lab;
    lab.header.dims = {n};
    for (const auto y : dataset.labels()) {
        if (y < 0 || y > 255) {
            throw DimensionError("label " + std::to_string(y) + " does not fit an unsigned byte");
        }
        lab.data.push_back(static_cast<std::uint8_t>(y));
    }
    write_file_bytes(images, write_idx(img));
    write_file_bytes(labels, write_idx(lab));
}

Tensor toy_center(std::size_t n_classes, std::size_t dim, std::size_t k) {
    Tensor center({dim}, 0.2);
    for (std::size_t d = k; d < dim; d += n_classes) {
        center[d] = 0.8;
    }
    return center;
}

LabeledDataset make_toy_dataset(std::size_t n_classes, std::size_t n_per_class, std::size_t dim, double spread,
                                std::uint64_t seed) {
    if (n_classes == 0 || n_per_class == 0 || dim == 0 || !(spread >= 0.0)) {
        throw ConfigError("toy dataset parameters must be positive");
    }
    if (n_classes > dim) {
        throw ConfigError("toy dataset in " + std::to_string(dim) + " dimensions has only " + std::to_string(dim) +
                          " distinct centers, " + std::to_string(n_classes) + " requested");
    }
    numkit::Rng rng(seed);
    const double sigma = spread / std::sqrt(static_cast<double>(dim));
    Tensor images({n_classes * n_per_class, dim});
    std::vector<std::int32_t> labels;
    labels.reserve(n_classes * n_per_class);
    for (std::size_t k = 0; k < n_classes; ++k) {
        const Tensor center = toy_center(n_classes, dim, k);
        for (std::size_t i = 0; i < n_per_class; ++i) {
            auto row = images.row(labels.size());
            for (std::size_t d = 0; d < dim; ++d) {
                row[d] = std::clamp(center[d] + sigma * rng.normal(), 0.0, 1.0);
            }
            labels.push_back(static_cast<std::int32_t>(k));
        }
    }
    return LabeledDataset(std::move(images), std::move(labels));
}

} // namespace clare::dataio
