#pragma once

#include "clare/dataio/dataset.hpp"
#include "clare/model/clare_model.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

namespace clare::replay {

using model::ClareModel;
using numkit::ParamTape;
using numkit::Tensor;

enum class SnapshotState { Trained, Untrained };

/// Frozen copy of a model's decoder, taken at the end of an increment.
class DecoderSnapshot {
public:
    DecoderSnapshot(ParamTape decoder, std::size_t class_no, std::size_t latent_dim, std::size_t increment,
                    SnapshotState state);

    const ParamTape& decoder() const noexcept { return decoder_; }
    std::size_t class_no() const noexcept { return class_no_; }
    std::size_t latent_dim() const noexcept { return latent_dim_; }
    std::size_t increment() const noexcept { return increment_; }
    bool trained() const noexcept { return state_ == SnapshotState::Trained; }

private:
    ParamTape decoder_;
    std::size_t class_no_;
    std::size_t latent_dim_;
    std::size_t increment_;
    SnapshotState state_;
};

/// Deep-copies the decoder parameters of `model`.
DecoderSnapshot take_snapshot(const ClareModel& model, std::size_t increment,
                              SnapshotState state = SnapshotState::Trained);

// Snapshots use the model checkpoint container (decoder parameters only).
void write_snapshot(std::ostream& out, const DecoderSnapshot& snapshot);
DecoderSnapshot read_snapshot(std::istream& in, std::size_t increment);

struct ReplayProvenance {
    std::size_t snapshot_increment = 0;
    std::uint64_t seed = 0;
    bool snapshot_trained = true;
};

struct ReplayBuffer {
    Tensor images;
    std::vector<std::int32_t> labels;
    ReplayProvenance provenance;

    std::size_t size() const noexcept { return labels.size(); }
    dataio::LabeledDataset as_dataset() const;
};

using ClassCounts = std::map<std::int32_t, std::int64_t>;

/// For each (class, count): count latent draws from N(0, I), decoded under
/// that class. Classes come out in ascending order. Each class uses its own
/// generator stream derived from (seed, class), so a class's samples do not
/// depend on which other classes were requested.
ReplayBuffer generate_replay(const DecoderSnapshot& snapshot, const ClassCounts& per_class_counts,
                             std::uint64_t seed);

/// Replay counts that balance old classes against incoming data: every
/// learned class gets the median of the new classes' sample counts (mean of
/// the two middle counts, rounded to nearest, when their number is even).
ClassCounts balance_counts(std::span<const std::int32_t> learned_classes,
                           const std::map<std::int32_t, std::size_t>& new_class_counts);

} // namespace clare::replay
