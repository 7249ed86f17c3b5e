#include "clare/harness/cli.hpp"

#include "clare/dataio/dataset.hpp"
#include "clare/errors.hpp"
#include "clare/harness/config.hpp"
#include "clare/harness/report.hpp"
#include "clare/numkit/random.hpp"
#include "clare/protocol/protocol.hpp"
#include "clare/protocol/schedule.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>

namespace clare::harness {

namespace {

// Seed streams for the synthetic dataset, disjoint from the phase indices.
constexpr std::uint64_t kToyTrainStream = 0x7071;
constexpr std::uint64_t kToyTestStream = 0x7072;

struct Splits {
    dataio::LabeledDataset train;
    dataio::LabeledDataset test;
};

Splits load_data(const ExperimentConfig& config, std::uint64_t seed) {
    if (config.dataset == DatasetKind::Toy) {
        const auto& t = config.toy;
        return {dataio::make_toy_dataset(t.classes, t.per_class, t.dim, t.spread,
                                         numkit::derive_seed(seed, kToyTrainStream)),
                dataio::make_toy_dataset(t.classes, t.per_class, t.dim, t.spread,
                                         numkit::derive_seed(seed, kToyTestStream))};
    }
    auto splits = dataio::load_mnist(config.data_dir);
    return {std::move(splits.train), std::move(splits.test)};
}

void dump_replay(const protocol::IncrementState& state, const std::string& prefix, std::ostream& err) {
    if (!state.last_replay) {
        err << "note: no replay buffer was generated, nothing dumped to " << prefix << "\n";
        return;
    }
    const auto& buffer = *state.last_replay;
    std::vector<std::int32_t> labels;
    labels.reserve(buffer.size());
    for (const auto dense : buffer.labels) {
        labels.push_back(state.learned.at(static_cast<std::size_t>(dense)));
    }
    const dataio::LabeledDataset original(buffer.images, std::move(labels));
    dataio::write_idx_pair(original, prefix + "-images-idx3-ubyte", prefix + "-labels-idx1-ubyte");
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Class-incremental learning with conditional generative replay"};
    ExperimentConfig config;
    if (const char* env = std::getenv("CLARE_DATA_DIR")) {
        config.data_dir = env;
    }
    std::string mode = "clare";
    std::string dataset = "mnist";
    std::string optimizer = "adam";
    std::string replay = "on";
    std::string start = "scratch";
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> seeds;
    bool quiet = false;

    app.set_config("--config", "", "Read flags from a TOML/INI file; command-line flags take precedence");
    app.add_option("--mode", mode, "Experiment: clare, joint or finetune")
        ->check(CLI::IsMember({"clare", "joint", "finetune"}))
        ->capture_default_str();
    app.add_option("--dataset", dataset, "Data source: mnist or toy")
        ->check(CLI::IsMember({"mnist", "toy"}))
        ->capture_default_str();
    app.add_option("--data-dir", config.data_dir, "Directory with the MNIST IDX files (default $CLARE_DATA_DIR)");
    app.add_option("--g", config.group_size, "Classes per increment")->capture_default_str();
    app.add_option("--epochs", config.epochs, "Epochs per increment")->capture_default_str();
    app.add_option("--batch", config.batch_size, "Minibatch size")->capture_default_str();
    app.add_option("--lr", config.learning_rate, "Learning rate")->capture_default_str();
    app.add_option("--optimizer", optimizer, "adam or sgd")
        ->check(CLI::IsMember({"adam", "sgd"}))
        ->capture_default_str();
    app.add_option("--latent-dim", config.latent_dim, "Latent dimension")->capture_default_str();
    app.add_option("--beta", config.beta, "Weight of the KL term")->capture_default_str();
    app.add_option("--replay", replay, "Generative replay: on or off")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    app.add_option("--start", start, "Per-increment initialisation: scratch or warm")
        ->check(CLI::IsMember({"scratch", "warm"}))
        ->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "Master seed")->capture_default_str();
    auto* seeds_opt = app.add_option("--seeds", seeds, "Comma-separated seeds, one run each")->delimiter(',');
    seed_opt->excludes(seeds_opt);
    app.add_option("--out", config.out_path, "Report path (JSON)")->capture_default_str();
    app.add_option("--csv", config.csv_path, "Optional flat CSV of per-class accuracies");
    app.add_option("--dump-replay", config.dump_replay,
                   "Write the last replay buffer as PATH-images-idx3-ubyte / PATH-labels-idx1-ubyte");
    app.add_option("--toy-classes", config.toy.classes, "Toy dataset: number of classes")->capture_default_str();
    app.add_option("--toy-per-class", config.toy.per_class, "Toy dataset: rows per class")->capture_default_str();
    app.add_option("--toy-dim", config.toy.dim, "Toy dataset: feature dimension")->capture_default_str();
    app.add_option("--toy-spread", config.toy.spread, "Toy dataset: expected noise norm")->capture_default_str();
    app.add_flag("--quiet", quiet, "Suppress progress messages");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        config.mode = parse_mode(mode);
        config.dataset = parse_dataset_kind(dataset);
        config.optimizer = numkit::parse_optimizer_kind(optimizer);
        config.replay = replay == "on";
        config.start = protocol::parse_start_mode(start);
        config.seeds = seeds.empty() ? std::vector<std::uint64_t>{seed} : seeds;
        config.validate();
        if (config.dataset == DatasetKind::Mnist) {
            if (config.data_dir.empty()) {
                throw ConfigError("no data directory: pass --data-dir or set CLARE_DATA_DIR");
            }
            if (!std::filesystem::is_directory(config.data_dir)) {
                throw ConfigError("data directory not found: " + config.data_dir);
            }
        }
        if (config.mode == Mode::Clare && !config.replay) {
            err << "warning: replay is off in clare mode; running as an ablation\n";
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        const auto started = std::chrono::steady_clock::now();
        auto train_config = config.train_config();
        if (!quiet) {
            train_config.log = [&err](const std::string& line) { err << line << "\n"; };
        }
        std::vector<RunResult> runs;
        for (const auto run_seed : config.seeds) {
            const auto data = load_data(config, run_seed);
            const auto classes = data.train.classes();
            const std::size_t g = config.mode == Mode::Joint ? classes.size() : config.group_size;
            const auto schedule = protocol::build_schedule(classes, g);
            if (!quiet) {
                err << "seed " << run_seed << ": " << schedule.groups.size() << " increment(s) of up to " << g
                    << " classes\n";
            }
            auto state = protocol::run_schedule(data.train, data.test, schedule, train_config, run_seed);
            if (!config.dump_replay.empty() && run_seed == config.seeds.back()) {
                dump_replay(state, config.dump_replay, err);
            }
            runs.push_back({run_seed, std::move(state.history), {}});
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        const auto report = make_report(config, std::move(runs), elapsed);
        if (!config.out_path.empty()) {
            write_report(report, config.out_path);
        }
        if (!config.csv_path.empty()) {
            write_csv(report, config.csv_path);
        }
        out << format_table(report);
        return kExitOk;
    } catch (const MissingFileError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

} // namespace clare::harness
