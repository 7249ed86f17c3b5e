#include "clare/harness/config.hpp"

#include "clare/errors.hpp"

namespace clare::harness {

std::string to_string(Mode mode) {
    switch (mode) {
    case Mode::Clare:
        return "clare";
    case Mode::Joint:
        return "joint";
    case Mode::Finetune:
        return "finetune";
    }
    return "clare";
}

Mode parse_mode(const std::string& text) {
    if (text == "clare") {
        return Mode::Clare;
    }
    if (text == "joint") {
        return Mode::Joint;
    }
    if (text == "finetune") {
        return Mode::Finetune;
    }
    throw ConfigError("unknown mode '" + text + "' (expected clare, joint or finetune)");
}

std::string to_string(DatasetKind kind) { return kind == DatasetKind::Mnist ? "mnist" : "toy"; }

DatasetKind parse_dataset_kind(const std::string& text) {
    if (text == "mnist") {
        return DatasetKind::Mnist;
    }
    if (text == "toy") {
        return DatasetKind::Toy;
    }
    throw ConfigError("unknown dataset '" + text + "' (expected mnist or toy)");
}

void ExperimentConfig::validate() const {
    if (group_size == 0) {
        throw ConfigError("--g must be at least 1");
    }
    if (epochs == 0 || batch_size == 0) {
        throw ConfigError("--epochs and --batch must be positive");
    }
    if (!(learning_rate > 0.0) || !(beta > 0.0)) {
        throw ConfigError("--lr and --beta must be positive");
    }
    if (latent_dim == 0 || latent_dim > 256) {
        throw ConfigError("--latent-dim must be in [1, 256]");
    }
    if (seeds.empty()) {
        throw ConfigError("at least one seed is required");
    }
    if (dataset == DatasetKind::Toy && (toy.classes == 0 || toy.per_class == 0 || toy.dim == 0 || !(toy.spread > 0.0))) {
        throw ConfigError("toy dataset parameters must be positive");
    }
}

protocol::TrainConfig ExperimentConfig::train_config() const {
    protocol::TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = batch_size;
    tc.optimizer.kind = optimizer;
    tc.optimizer.learning_rate = learning_rate;
    tc.latent_dim = latent_dim;
    tc.beta = beta;
    tc.replay = replay;
    tc.start = start;
    if (mode == Mode::Finetune) {
        tc.replay = false;
        tc.start = protocol::StartMode::Warm;
    }
    tc.keep_last_replay = !dump_replay.empty();
    return tc;
}

nlohmann::json to_json(const ExperimentConfig& c) {
    return {
        {"mode", to_string(c.mode)},
        {"dataset", to_string(c.dataset)},
        {"data_dir", c.data_dir},
        {"g", c.group_size},
        {"epochs", c.epochs},
        {"batch", c.batch_size},
        {"lr", c.learning_rate},
        {"optimizer", numkit::to_string(c.optimizer)},
        {"latent_dim", c.latent_dim},
        {"beta", c.beta},
        {"replay", c.replay},
        {"start", protocol::to_string(c.start)},
        {"seeds", c.seeds},
        {"out", c.out_path},
        {"csv", c.csv_path},
        {"dump_replay", c.dump_replay},
        {"toy",
         {{"classes", c.toy.classes}, {"per_class", c.toy.per_class}, {"dim", c.toy.dim}, {"spread", c.toy.spread}}},
    };
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    try {
        ExperimentConfig c;
        c.mode = parse_mode(j.at("mode").get<std::string>());
        c.dataset = parse_dataset_kind(j.at("dataset").get<std::string>());
        c.data_dir = j.at("data_dir").get<std::string>();
        c.group_size = j.at("g").get<std::size_t>();
        c.epochs = j.at("epochs").get<std::size_t>();
        c.batch_size = j.at("batch").get<std::size_t>();
        c.learning_rate = j.at("lr").get<double>();
        c.optimizer = numkit::parse_optimizer_kind(j.at("optimizer").get<std::string>());
        c.latent_dim = j.at("latent_dim").get<std::size_t>();
        c.beta = j.at("beta").get<double>();
        c.replay = j.at("replay").get<bool>();
        c.start = protocol::parse_start_mode(j.at("start").get<std::string>());
        c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        c.out_path = j.at("out").get<std::string>();
        c.csv_path = j.at("csv").get<std::string>();
        c.dump_replay = j.at("dump_replay").get<std::string>();
        const auto& toy = j.at("toy");
        c.toy.classes = toy.at("classes").get<std::size_t>();
        c.toy.per_class = toy.at("per_class").get<std::size_t>();
        c.toy.dim = toy.at("dim").get<std::size_t>();
        c.toy.spread = toy.at("spread").get<double>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

} // namespace clare::harness
