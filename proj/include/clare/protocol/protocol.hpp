#pragma once

#include "clare/dataio/dataset.hpp"
#include "clare/harness/evaluate.hpp"
#include "clare/model/clare_model.hpp"
#include "clare/model/losses.hpp"
#include "clare/numkit/optimizer.hpp"
#include "clare/protocol/schedule.hpp"
#include "clare/replay/replay.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace clare::protocol {

using dataio::LabeledDataset;
using model::ClareModel;
using model::LossBreakdown;

enum class StartMode { Scratch, Warm };

std::string to_string(StartMode mode);
StartMode parse_start_mode(const std::string& text);

struct TrainConfig {
    std::size_t epochs = 15;
    std::size_t batch_size = 128;
    numkit::OptimizerConfig optimizer;
    std::size_t hidden1 = 512;
    std::size_t hidden2 = 256;
    std::size_t latent_dim = 64;
    double beta = 1.0;
    bool replay = true;
    StartMode start = StartMode::Scratch;
    // Keep the most recent replay buffer in the state (for dumping).
    bool keep_last_replay = false;
    // Progress sink; silent when empty.
    std::function<void(const std::string&)> log;
};

struct MetricsRecord {
    std::size_t increment = 0;
    std::vector<std::int32_t> classes_seen;
    double overall_accuracy = 0.0; // percent, over all seen classes
    std::vector<harness::ClassAccuracy> per_class;
    double wall_seconds = 0.0;
    std::size_t train_samples = 0;
    std::size_t replay_samples = 0;
    std::vector<LossBreakdown> loss_trace; // per-epoch means
};

/// Everything carried from one increment to the next.
struct IncrementState {
    // Dataset labels in learning order; position = the model's class index.
    std::vector<std::int32_t> learned;
    std::optional<ClareModel> model;
    std::optional<replay::DecoderSnapshot> snapshot;
    std::optional<replay::ReplayBuffer> last_replay;
    std::vector<MetricsRecord> history;
};

/// Runs `epochs` of minibatch descent on the joint objective. `data` must
/// carry the model's dense class indices as labels. Returns the per-epoch
/// mean loss components.
std::vector<LossBreakdown> train_model(ClareModel& model, const LabeledDataset& data, const TrainConfig& config,
                                       numkit::Rng& rng);

/// Learns one new group of classes: replays old classes from the stored
/// decoder snapshot (when enabled and something was learned), trains a
/// model on replay + new data, snapshots its decoder and evaluates on the
/// rows of `test` whose labels have been seen.
IncrementState run_increment(IncrementState state, const LabeledDataset& new_group_data, const LabeledDataset& test,
                             const TrainConfig& config, std::uint64_t seed);

/// Folds run_increment over the schedule. Phase k uses the seed derived
/// from (seed, k). Returns the final state; its history has one record per
/// group.
IncrementState run_schedule(const LabeledDataset& train, const LabeledDataset& test, const Schedule& schedule,
                            const TrainConfig& config, std::uint64_t seed);

std::vector<MetricsRecord> run_experiment(const LabeledDataset& train, const LabeledDataset& test,
                                          const Schedule& schedule, const TrainConfig& config, std::uint64_t seed);

/// All classes in a single group: the non-incremental upper bound.
MetricsRecord run_joint_baseline(const LabeledDataset& train, const LabeledDataset& test, const TrainConfig& config,
                                 std::uint64_t seed);

/// Same schedule with replay off and warm starts: each phase fine-tunes the
/// previous model on the new group's data alone.
std::vector<MetricsRecord> run_finetune_baseline(const LabeledDataset& train, const LabeledDataset& test,
                                                 const Schedule& schedule, const TrainConfig& config,
                                                 std::uint64_t seed);

} // namespace clare::protocol
