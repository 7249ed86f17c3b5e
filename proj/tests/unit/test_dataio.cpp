#include "clare/dataio/dataset.hpp"
#include "clare/dataio/idx.hpp"
#include "clare/errors.hpp"

#include <gtest/gtest.h>

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>

using namespace clare;
using namespace clare::dataio;

namespace {

const std::vector<std::uint8_t> kFixture2x2 = {0x00, 0x00, 0x08, 0x03, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00,
                                               0x00, 0x02, 0x00, 0x00, 0x00, 0x02, 0xAA, 0xBB, 0xCC, 0xDD};

std::filesystem::path temp_path(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

std::filesystem::path mnist_dir() {
    const char* env = std::getenv("CLARE_DATA_DIR");
    return env ? std::filesystem::path(env) : std::filesystem::path();
}

} // namespace

TEST(ParseIdx, HandEncodedImage) {
    const auto array = parse_idx(kFixture2x2);
    EXPECT_EQ(array.header.type_code, 0x08);
    EXPECT_EQ(array.header.dims, (std::vector<std::uint32_t>{1, 2, 2}));
    EXPECT_EQ(array.data, (std::vector<std::uint8_t>{0xAA, 0xBB, 0xCC, 0xDD}));
}

TEST(ParseIdx, EmptyLabelArray) {
    const std::vector<std::uint8_t> bytes = {0x00, 0x00, 0x08, 0x01, 0x00, 0x00, 0x00, 0x00};
    const auto array = parse_idx(bytes);
    EXPECT_EQ(array.header.dims, (std::vector<std::uint32_t>{0}));
    EXPECT_TRUE(array.data.empty());
}

TEST(ParseIdx, TruncatedPayloadNamesLengths) {
    auto bytes = kFixture2x2;
    bytes.pop_back();
    try {
        parse_idx(bytes);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("expected 4"), std::string::npos) << what;
        EXPECT_NE(what.find("got 3"), std::string::npos) << what;
        EXPECT_EQ(e.offset(), 19u);
    }
}

TEST(ParseIdx, BadMagicAndTypeCodeHaveDistinctOffsets) {
    auto magic = kFixture2x2;
    magic[1] = 0x01;
    auto type = kFixture2x2;
    type[2] = 0x0D;
    std::size_t magic_offset = 99;
    std::size_t type_offset = 99;
    try {
        parse_idx(magic);
    } catch (const ParseError& e) {
        magic_offset = e.offset();
    }
    try {
        parse_idx(type);
    } catch (const ParseError& e) {
        type_offset = e.offset();
        EXPECT_NE(std::string(e.what()).find("0x0D"), std::string::npos) << e.what();
    }
    EXPECT_EQ(magic_offset, 0u);
    EXPECT_EQ(type_offset, 2u);
}

TEST(ParseIdx, TruncatedHeaderAndTrailingBytes) {
    const std::vector<std::uint8_t> header = {0x00, 0x00, 0x08, 0x03, 0x00, 0x00};
    EXPECT_THROW(parse_idx(header), ParseError);
    auto extra = kFixture2x2;
    extra.push_back(0x00);
    EXPECT_THROW(parse_idx(extra), ParseError);
}

TEST(WriteIdx, RoundTrip) {
    const auto array = parse_idx(kFixture2x2);
    EXPECT_EQ(write_idx(array), kFixture2x2);
}

TEST(ReadFileBytes, InflatesGzip) {
    const auto path = temp_path("clare_fixture.idx.gz");
    {
        gzFile f = gzopen(path.string().c_str(), "wb");
        ASSERT_NE(f, nullptr);
        gzwrite(f, kFixture2x2.data(), static_cast<unsigned>(kFixture2x2.size()));
        gzclose(f);
    }
    EXPECT_EQ(read_file_bytes(path), kFixture2x2);
    std::filesystem::remove(path);
    EXPECT_THROW(read_file_bytes(path), MissingFileError);
}

TEST(LabeledDataset, ValidatesAlignmentAndRange) {
    EXPECT_THROW(LabeledDataset(Tensor({2, 3}, 0.5), {0}), DimensionError);
    EXPECT_THROW(LabeledDataset(Tensor({1, 3}, 1.5), {0}), NumericError);
}

TEST(LabeledDataset, IdxPairRoundTrip) {
    const LabeledDataset data(Tensor::matrix({{0.0, 1.0, 0.2}, {1.0, 0.0, 0.6}}), {3, 7});
    const auto images = temp_path("clare_pair_images");
    const auto labels = temp_path("clare_pair_labels");
    write_idx_pair(data, images, labels);
    const auto back = load_idx_pair(images, labels);
    EXPECT_EQ(back.labels().size(), 2u);
    EXPECT_EQ(back.labels()[1], 7);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_NEAR(back.images()[i], data.images()[i], 0.5 / 255.0 + 1e-12);
    }
    std::filesystem::remove(images);
    std::filesystem::remove(labels);
}

TEST(LabeledDataset, CountMismatchBetweenFiles) {
    const LabeledDataset two(Tensor({2, 4}, 0.0), {0, 1});
    const LabeledDataset three(Tensor({3, 4}, 0.0), {0, 1, 2});
    const auto images = temp_path("clare_mm_images");
    const auto labels = temp_path("clare_mm_labels");
    const auto spare = temp_path("clare_mm_images3");
    write_idx_pair(two, images, labels);
    write_idx_pair(three, spare, temp_path("clare_mm_labels3"));
    EXPECT_THROW(load_idx_pair(spare, labels), DimensionError);
    for (const auto& p : {images, labels, spare, temp_path("clare_mm_labels3")}) {
        std::filesystem::remove(p);
    }
}

TEST(SubsetByClasses, AllEmptyAndSingle) {
    const auto data = make_toy_dataset(4, 10, 8, 0.3, 1);
    const std::vector<std::int32_t> all = {0, 1, 2, 3};
    EXPECT_EQ(subset_by_classes(data, all), data);
    EXPECT_TRUE(subset_by_classes(data, std::vector<std::int32_t>{}).empty());
    const std::vector<std::int32_t> three = {3};
    const auto only = subset_by_classes(data, three);
    EXPECT_EQ(only.size(), data.count(3));
    for (const auto y : only.labels()) {
        EXPECT_EQ(y, 3);
    }
    const std::vector<std::int32_t> unknown = {9};
    EXPECT_THROW(subset_by_classes(data, unknown), ConditionError);
}

TEST(Concat, StacksRows) {
    const auto a = make_toy_dataset(2, 3, 4, 0.1, 1);
    const auto b = make_toy_dataset(2, 2, 4, 0.1, 2);
    const auto c = concat(a, b);
    EXPECT_EQ(c.size(), 10u);
    EXPECT_EQ(c.labels()[6], b.labels()[0]);
}

TEST(ToyDataset, ZeroSpreadGivesCenters) {
    const auto data = make_toy_dataset(3, 5, 6, 0.0, 4);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto center = toy_center(3, 6, static_cast<std::size_t>(data.labels()[i]));
        for (std::size_t j = 0; j < 6; ++j) {
            EXPECT_EQ(data.images()(i, j), center[j]);
        }
    }
}

TEST(ToyDataset, SameSeedIsBitIdentical) {
    EXPECT_EQ(make_toy_dataset(3, 20, 10, 0.5, 77), make_toy_dataset(3, 20, 10, 0.5, 77));
    EXPECT_FALSE(make_toy_dataset(3, 20, 10, 0.5, 77) == make_toy_dataset(3, 20, 10, 0.5, 78));
}

TEST(ToyDataset, NearestCentroidIsPerfectAtSmallSpread) {
    const std::size_t classes = 4;
    const std::size_t dim = 16;
    // Centers differ in 2 * dim / classes coordinates by 0.6 each.
    double min_distance = std::numeric_limits<double>::max();
    for (std::size_t a = 0; a < classes; ++a) {
        for (std::size_t b = a + 1; b < classes; ++b) {
            const auto ca = toy_center(classes, dim, a);
            const auto cb = toy_center(classes, dim, b);
            double s = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                s += (ca[j] - cb[j]) * (ca[j] - cb[j]);
            }
            min_distance = std::min(min_distance, std::sqrt(s));
        }
    }
    const double spread = 0.24 * min_distance;
    const auto data = make_toy_dataset(classes, 200, dim, spread, 5);
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::max();
        for (std::size_t k = 0; k < classes; ++k) {
            const auto c = toy_center(classes, dim, k);
            double s = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                s += (data.images()(i, j) - c[j]) * (data.images()(i, j) - c[j]);
            }
            if (s < best_d) {
                best_d = s;
                best = k;
            }
        }
        EXPECT_EQ(static_cast<std::int32_t>(best), data.labels()[i]);
    }
}

TEST(ToyDataset, TooManyClassesForDimension) { EXPECT_THROW(make_toy_dataset(5, 2, 4, 0.1, 1), ConfigError); }

TEST(Mnist, MissingDirectoryIsReported) {
    try {
        load_mnist("/nonexistent/mnist");
        FAIL() << "expected MissingFileError";
    } catch (const MissingFileError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/mnist"), std::string::npos);
    }
}

TEST(Mnist, StandardFiles) {
    const auto dir = mnist_dir();
    if (dir.empty()) {
        GTEST_SKIP() << "CLARE_DATA_DIR is not set";
    }
    const auto splits = load_mnist(dir);
    EXPECT_EQ(splits.train.size(), 60000u);
    EXPECT_EQ(splits.test.size(), 10000u);
    EXPECT_EQ(splits.train.classes().size(), 10u);
    EXPECT_EQ(splits.test.classes().size(), 10u);
    const auto [lo, hi] = std::minmax_element(splits.train.images().values().begin(), splits.train.images().values().end());
    EXPECT_GE(*lo, 0.0);
    EXPECT_LE(*hi, 1.0);
    EXPECT_GT(*hi, 0.9);
    for (const auto cls : splits.train.classes()) {
        EXPECT_GE(splits.train.count(cls), 5400u);
        EXPECT_LE(splits.train.count(cls), 6800u);
    }
}
