#include "clare/replay/replay.hpp"

#include "clare/errors.hpp"
#include "clare/model/checkpoint.hpp"
#include "clare/numkit/random.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace clare::replay {

namespace {

constexpr std::size_t kDecodeChunk = 512;

bool is_decoder_param(const std::string& name) { return name.rfind("dec.", 0) == 0; }

} // namespace

DecoderSnapshot::DecoderSnapshot(ParamTape decoder, std::size_t class_no, std::size_t latent_dim,
                                 std::size_t increment, SnapshotState state)
    : decoder_(std::move(decoder)), class_no_(class_no), latent_dim_(latent_dim), increment_(increment), state_(state) {
    const auto& cond = decoder_.value(model::names::kDecFc1Cond);
    const auto& fc1 = decoder_.value(model::names::kDecFc1Weight);
    if (cond.rank() != 2 || cond.cols() != class_no_ || fc1.rank() != 2 || fc1.cols() != latent_dim_) {
        throw DimensionError("decoder snapshot tensors do not match class_no " + std::to_string(class_no_) +
                             " and latent width " + std::to_string(latent_dim_));
    }
}

DecoderSnapshot take_snapshot(const ClareModel& model, std::size_t increment, SnapshotState state) {
    ParamTape decoder;
    for (const auto& p : model.params()) {
        if (is_decoder_param(p.name)) {
            decoder.add(p.name, p.value);
        }
    }
    return DecoderSnapshot(std::move(decoder), model.class_no(), model.latent_dim(), increment, state);
}

void write_snapshot(std::ostream& out, const DecoderSnapshot& snapshot) {
    model::write_checkpoint(out, static_cast<std::uint32_t>(snapshot.class_no()),
                            static_cast<std::uint32_t>(snapshot.latent_dim()), snapshot.decoder());
}

DecoderSnapshot read_snapshot(std::istream& in, std::size_t increment) {
    model::Checkpoint ck = model::read_checkpoint(in);
    return DecoderSnapshot(std::move(ck.params), ck.class_no, ck.latent_dim, increment, SnapshotState::Trained);
}

dataio::LabeledDataset ReplayBuffer::as_dataset() const {
    if (labels.empty()) {
        return dataio::LabeledDataset(images.rank() == 2 ? images.cols() : dataio::kMnistPixels);
    }
    return dataio::LabeledDataset(images, labels);
}

ReplayBuffer generate_replay(const DecoderSnapshot& snapshot, const ClassCounts& per_class_counts,
                             std::uint64_t seed) {
    for (const auto& [cls, count] : per_class_counts) {
        if (cls < 0 || static_cast<std::size_t>(cls) >= snapshot.class_no()) {
            throw ConditionError("replay requested for class " + std::to_string(cls) + ", snapshot knows " +
                                 std::to_string(snapshot.class_no()) + " classes");
        }
        if (count < 0) {
            throw ConfigError("negative replay count " + std::to_string(count) + " for class " + std::to_string(cls));
        }
    }

    const std::size_t width = snapshot.decoder().value(model::names::kDecOutWeight).rows();
    const std::size_t dz = snapshot.latent_dim();
    ReplayBuffer buffer;
    buffer.provenance = {snapshot.increment(), seed, snapshot.trained()};
    std::vector<double> pixels;
    for (const auto& [cls, count] : per_class_counts) {
        numkit::Rng rng(numkit::derive_seed(seed, static_cast<std::uint64_t>(cls)));
        for (std::int64_t done = 0; done < count;) {
            const auto rows = static_cast<std::size_t>(std::min<std::int64_t>(kDecodeChunk, count - done));
            const Tensor z = rng.normal_tensor({rows, dz});
            const std::vector<std::int32_t> classes(rows, cls);
            const Tensor x = model::decode_with(snapshot.decoder(), dz, z, classes);
            pixels.insert(pixels.end(), x.values().begin(), x.values().end());
            buffer.labels.insert(buffer.labels.end(), rows, cls);
            done += static_cast<std::int64_t>(rows);
        }
    }
    buffer.images = Tensor({buffer.labels.size(), width}, std::move(pixels));
    return buffer;
}

ClassCounts balance_counts(std::span<const std::int32_t> learned_classes,
                           const std::map<std::int32_t, std::size_t>& new_class_counts) {
    if (new_class_counts.empty()) {
        throw ConfigError("balance_counts: no incoming classes");
    }
    std::vector<std::size_t> counts;
    for (const auto& [cls, n] : new_class_counts) {
        if (n == 0) {
            throw ConfigError("balance_counts: incoming class " + std::to_string(cls) + " has no samples");
        }
        counts.push_back(n);
    }
    std::sort(counts.begin(), counts.end());
    const std::size_t mid = counts.size() / 2;
    const std::int64_t median =
        counts.size() % 2 == 1
            ? static_cast<std::int64_t>(counts[mid])
            : std::llround((static_cast<double>(counts[mid - 1]) + static_cast<double>(counts[mid])) / 2.0);

    ClassCounts out;
    for (const auto cls : learned_classes) {
        out[cls] = median;
    }
    return out;
}

} // namespace clare::replay
