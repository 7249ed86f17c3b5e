#pragma once

#include "clare/numkit/optimizer.hpp"
#include "clare/protocol/protocol.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace clare::harness {

enum class Mode { Clare, Joint, Finetune };
enum class DatasetKind { Mnist, Toy };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);
std::string to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(const std::string& text);

struct ToyConfig {
    std::size_t classes = 4;
    std::size_t per_class = 300;
    std::size_t dim = 64;
    double spread = 0.5;

    bool operator==(const ToyConfig&) const = default;
};

struct ExperimentConfig {
    Mode mode = Mode::Clare;
    DatasetKind dataset = DatasetKind::Mnist;
    std::string data_dir;
    std::size_t group_size = 1;
    std::size_t epochs = 15;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    numkit::OptimizerKind optimizer = numkit::OptimizerKind::Adam;
    std::size_t latent_dim = 64;
    double beta = 1.0;
    bool replay = true;
    protocol::StartMode start = protocol::StartMode::Scratch;
    std::vector<std::uint64_t> seeds = {1};
    std::string out_path = "clare_report.json";
    std::string csv_path;
    std::string dump_replay;
    ToyConfig toy;

    bool operator==(const ExperimentConfig&) const = default;

    // Throws ConfigError on non-positive sizes, rates or an empty seed list.
    void validate() const;

    // Training settings for the selected mode: joint ignores the group size,
    // finetune forces replay off and warm starts.
    protocol::TrainConfig train_config() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

} // namespace clare::harness
