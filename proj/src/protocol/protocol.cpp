#include "clare/protocol/protocol.hpp"

#include "clare/errors.hpp"
#include "clare/numkit/random.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <sstream>

namespace clare::protocol {

namespace {

// Generator streams inside one phase.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kReplayStream = 3;
constexpr std::uint64_t kExpandStream = 4;

std::string format_loss(const LossBreakdown& l) {
    std::ostringstream out;
    out.precision(5);
    out << "loss " << l.total << " (ce " << l.classification << ", rec " << l.reconstruction << ", kl " << l.kl << ")";
    return out.str();
}

} // namespace

std::string to_string(StartMode mode) { return mode == StartMode::Scratch ? "scratch" : "warm"; }

StartMode parse_start_mode(const std::string& text) {
    if (text == "scratch") {
        return StartMode::Scratch;
    }
    if (text == "warm") {
        return StartMode::Warm;
    }
    throw ConfigError("unknown start mode '" + text + "' (expected scratch or warm)");
}

std::vector<LossBreakdown> train_model(ClareModel& model, const LabeledDataset& data, const TrainConfig& config,
                                       numkit::Rng& rng) {
    if (data.empty()) {
        throw ConfigError("cannot train on an empty dataset");
    }
    if (config.batch_size == 0) {
        throw ConfigError("batch size must be positive");
    }
    numkit::Optimizer optimizer(config.optimizer, model.params());
    const model::LossOptions options{config.beta, true, true};

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<LossBreakdown> trace;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        LossBreakdown sum;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> rows(order.data() + start, end - start);
            const auto x = numkit::gather_rows(data.images(), rows);
            std::vector<std::int32_t> labels;
            labels.reserve(rows.size());
            for (const auto r : rows) {
                labels.push_back(data.labels()[r]);
            }
            const auto noise = rng.normal_tensor({rows.size(), model.latent_dim()});

            model.params().zero_grad();
            const auto parts = model::accumulate_gradients(model, x, labels, noise, options);
            optimizer.step(model.params());

            const auto weight = static_cast<double>(rows.size());
            sum.total += weight * parts.total;
            sum.classification += weight * parts.classification;
            sum.reconstruction += weight * parts.reconstruction;
            sum.kl += weight * parts.kl;
        }
        const auto n = static_cast<double>(order.size());
        trace.push_back({sum.total / n, sum.classification / n, sum.reconstruction / n, sum.kl / n});
        if (config.log) {
            config.log("  epoch " + std::to_string(epoch + 1) + "/" + std::to_string(config.epochs) + ": " +
                       format_loss(trace.back()));
        }
    }
    return trace;
}

IncrementState run_increment(IncrementState state, const LabeledDataset& new_group_data, const LabeledDataset& test,
                             const TrainConfig& config, std::uint64_t seed) {
    const auto started = std::chrono::steady_clock::now();
    if (new_group_data.empty()) {
        throw ConfigError("increment has no training data");
    }
    const auto new_classes = new_group_data.classes();
    for (const auto cls : new_classes) {
        if (std::find(state.learned.begin(), state.learned.end(), cls) != state.learned.end()) {
            throw ConfigError("class " + std::to_string(cls) + " was already learned in an earlier increment");
        }
    }
    const std::size_t increment = state.history.size();
    const std::size_t old_count = state.learned.size();

    std::vector<std::int32_t> seen = state.learned;
    seen.insert(seen.end(), new_classes.begin(), new_classes.end());
    std::map<std::int32_t, std::int32_t> dense_of;
    for (std::size_t i = 0; i < seen.size(); ++i) {
        dense_of[seen[i]] = static_cast<std::int32_t>(i);
    }

    std::vector<std::int32_t> dense_labels;
    dense_labels.reserve(new_group_data.size());
    for (const auto y : new_group_data.labels()) {
        dense_labels.push_back(dense_of.at(y));
    }
    LabeledDataset merged(new_group_data.images(), std::move(dense_labels));

    std::size_t replay_samples = 0;
    if (config.replay && old_count > 0) {
        if (!state.snapshot) {
            throw UsageError("replay requested but no decoder snapshot is stored");
        }
        std::vector<std::int32_t> old_dense(old_count);
        std::iota(old_dense.begin(), old_dense.end(), 0);
        std::map<std::int32_t, std::size_t> incoming;
        for (const auto& [cls, rows] : merged.class_index()) {
            incoming[cls] = rows.size();
        }
        const auto counts = replay::balance_counts(old_dense, incoming);
        auto buffer = replay::generate_replay(*state.snapshot, counts, numkit::derive_seed(seed, kReplayStream));
        replay_samples = buffer.size();
        merged = dataio::concat(buffer.as_dataset(), merged);
        if (config.keep_last_replay) {
            state.last_replay = std::move(buffer);
        }
        if (config.log) {
            config.log("increment " + std::to_string(increment) + ": replayed " + std::to_string(replay_samples) +
                       " samples for " + std::to_string(old_count) + " old classes");
        }
    }

    model::ModelShape shape;
    shape.input_dim = new_group_data.feature_dim();
    shape.hidden1 = config.hidden1;
    shape.hidden2 = config.hidden2;
    shape.latent_dim = config.latent_dim;
    shape.class_no = seen.size();

    std::optional<ClareModel> model;
    if (config.start == StartMode::Warm && state.model) {
        numkit::Rng expand_rng(numkit::derive_seed(seed, kExpandStream));
        model = model::expand_classes(*state.model, seen.size(), expand_rng);
    } else {
        numkit::Rng init_rng(numkit::derive_seed(seed, kInitStream));
        model.emplace(shape, init_rng);
    }

    if (config.log) {
        config.log("increment " + std::to_string(increment) + ": training on " + std::to_string(merged.size()) +
                   " samples, " + std::to_string(seen.size()) + " classes");
    }
    numkit::Rng train_rng(numkit::derive_seed(seed, kTrainStream));
    MetricsRecord record;
    record.loss_trace = train_model(*model, merged, config, train_rng);

    state.snapshot = replay::take_snapshot(*model, increment);

    const auto test_seen = dataio::subset_by_classes(test, seen);
    const auto evaluation = harness::evaluate(*model, test_seen, seen);

    record.increment = increment;
    record.classes_seen = seen;
    record.overall_accuracy = evaluation.overall;
    record.per_class = evaluation.per_class;
    record.train_samples = merged.size();
    record.replay_samples = replay_samples;
    record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (config.log) {
        std::ostringstream msg;
        msg.precision(4);
        msg << "increment " << increment << ": accuracy " << evaluation.overall << "% over " << seen.size()
            << " classes (" << record.wall_seconds << " s)";
        config.log(msg.str());
    }

    state.learned = std::move(seen);
    state.model = std::move(model);
    state.history.push_back(std::move(record));
    return state;
}

IncrementState run_schedule(const LabeledDataset& train, const LabeledDataset& test, const Schedule& schedule,
                            const TrainConfig& config, std::uint64_t seed) {
    if (schedule.groups.empty()) {
        throw ConfigError("empty schedule");
    }
    IncrementState state;
    for (std::size_t phase = 0; phase < schedule.groups.size(); ++phase) {
        const auto group_data = dataio::subset_by_classes(train, schedule.groups[phase]);
        state = run_increment(std::move(state), group_data, test, config, numkit::derive_seed(seed, phase));
    }
    return state;
}

std::vector<MetricsRecord> run_experiment(const LabeledDataset& train, const LabeledDataset& test,
                                          const Schedule& schedule, const TrainConfig& config, std::uint64_t seed) {
    return run_schedule(train, test, schedule, config, seed).history;
}

MetricsRecord run_joint_baseline(const LabeledDataset& train, const LabeledDataset& test, const TrainConfig& config,
                                 std::uint64_t seed) {
    const auto classes = train.classes();
    const Schedule single = build_schedule(classes, classes.size());
    return run_experiment(train, test, single, config, seed).front();
}

std::vector<MetricsRecord> run_finetune_baseline(const LabeledDataset& train, const LabeledDataset& test,
                                                 const Schedule& schedule, const TrainConfig& config,
                                                 std::uint64_t seed) {
    TrainConfig finetune = config;
    finetune.replay = false;
    finetune.start = StartMode::Warm;
    return run_experiment(train, test, schedule, finetune, seed);
}

} // namespace clare::protocol
