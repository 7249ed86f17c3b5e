#pragma once

#include "clare/dataio/dataset.hpp"
#include "clare/model/clare_model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace clare::harness {

struct ClassAccuracy {
    std::int32_t label = 0;
    double accuracy = 0.0; // percent
    std::size_t support = 0;

    bool operator==(const ClassAccuracy&) const = default;
};

struct Evaluation {
    double overall = 0.0; // percent
    std::vector<ClassAccuracy> per_class;
};

/// Argmax of each probability row mapped through `dense_to_label`. Ties go
/// to the lowest column index.
std::vector<std::int32_t> predict_labels(const numkit::Tensor& probabilities,
                                         std::span<const std::int32_t> dense_to_label);

/// Overall and per-class accuracy (percent) of `predicted` against `truth`.
/// Per-class entries follow ascending label order of the classes in `truth`.
Evaluation score_predictions(std::span<const std::int32_t> predicted, std::span<const std::int32_t> truth);

/// Classifies every row of `test` and scores the result. `dense_to_label`
/// maps the model's class indices to dataset labels.
Evaluation evaluate(const model::ClareModel& model, const dataio::LabeledDataset& test,
                    std::span<const std::int32_t> dense_to_label);

} // namespace clare::harness
