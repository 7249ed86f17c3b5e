#include "clare/model/checkpoint.hpp"

#include "clare/errors.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace clare::model {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'L', 'R', 'E'};

void put_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> bytes = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                                       static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.write(bytes.data(), bytes.size());
}

void put_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    std::array<char, 8> bytes{};
    for (std::size_t i = 0; i < 8; ++i) {
        bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    }
    out.write(bytes.data(), bytes.size());
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }
    std::size_t offset() const { return offset_; }

    void bytes(char* dst, std::size_t n, const char* what) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw ParseError(std::string("checkpoint truncated while reading ") + what, offset_);
        }
        offset_ += n;
    }

    std::uint32_t u32(const char* what) {
        std::array<unsigned char, 4> b{};
        bytes(reinterpret_cast<char*>(b.data()), 4, what);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }

    double f64(const char* what) {
        std::array<unsigned char, 8> b{};
        bytes(reinterpret_cast<char*>(b.data()), 8, what);
        std::uint64_t bits = 0;
        for (std::size_t i = 0; i < 8; ++i) {
            bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        }
        return std::bit_cast<double>(bits);
    }

private:
    std::istream& in_;
    std::size_t offset_ = 0;
};

} // namespace

void write_checkpoint(std::ostream& out, std::uint32_t class_no, std::uint32_t latent_dim, const ParamTape& params) {
    out.write(kMagic.data(), kMagic.size());
    put_u32(out, kCheckpointVersion);
    put_u32(out, class_no);
    put_u32(out, latent_dim);
    for (const auto& p : params) {
        put_u32(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put_u32(out, static_cast<std::uint32_t>(p.value.rank()));
        for (const std::size_t d : p.value.shape()) {
            put_u32(out, static_cast<std::uint32_t>(d));
        }
        for (const double v : p.value.values()) {
            put_f64(out, v);
        }
    }
    if (!out) {
        throw std::runtime_error("failed writing checkpoint");
    }
}

Checkpoint read_checkpoint(std::istream& in) {
    Reader r(in);
    std::array<char, 4> magic{};
    r.bytes(magic.data(), magic.size(), "magic");
    if (magic != kMagic) {
        throw ParseError("not a checkpoint (bad magic)", 0);
    }
    const std::size_t version_offset = r.offset();
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion) {
        throw ParseError("unsupported checkpoint version " + std::to_string(version), version_offset);
    }
    Checkpoint ck;
    ck.class_no = r.u32("class count");
    ck.latent_dim = r.u32("latent width");
    while (!r.at_end()) {
        const std::uint32_t name_len = r.u32("name length");
        if (name_len > 4096) {
            throw ParseError("implausible parameter name length " + std::to_string(name_len), r.offset() - 4);
        }
        std::string name(name_len, '\0');
        r.bytes(name.data(), name_len, "parameter name");
        const std::uint32_t rank = r.u32("rank");
        if (rank > 8) {
            throw ParseError("implausible tensor rank " + std::to_string(rank), r.offset() - 4);
        }
        numkit::Shape shape(rank);
        for (auto& d : shape) {
            d = r.u32("dimension");
        }
        std::vector<double> data(numkit::element_count(shape));
        for (double& v : data) {
            v = r.f64("payload");
        }
        ck.params.add(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    return ck;
}

void save_model(const ClareModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    write_checkpoint(out, static_cast<std::uint32_t>(model.class_no()), static_cast<std::uint32_t>(model.latent_dim()),
                     model.params());
}

ClareModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFileError("cannot open checkpoint " + path.string());
    }
    return model_from_checkpoint(read_checkpoint(in));
}

ClareModel model_from_checkpoint(Checkpoint checkpoint) {
    const auto& fc1 = checkpoint.params.value(names::kEncFc1Weight);
    const auto& fc2 = checkpoint.params.value(names::kEncFc2Weight);
    if (fc1.rank() != 2 || fc2.rank() != 2) {
        throw DimensionError("checkpoint encoder weights are not matrices");
    }
    ModelShape shape;
    shape.input_dim = fc1.cols();
    shape.hidden1 = fc1.rows();
    shape.hidden2 = fc2.rows();
    shape.latent_dim = checkpoint.latent_dim;
    shape.class_no = checkpoint.class_no;
    return ClareModel::from_params(shape, std::move(checkpoint.params));
}

} // namespace clare::model
