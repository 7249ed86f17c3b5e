#include "clare/harness/evaluate.hpp"

#include "clare/errors.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

namespace clare::harness {

namespace {
constexpr std::size_t kEvalChunk = 1000;
}

std::vector<std::int32_t> predict_labels(const numkit::Tensor& probabilities,
                                         std::span<const std::int32_t> dense_to_label) {
    if (probabilities.cols() != dense_to_label.size()) {
        throw DimensionError("predict_labels: " + std::to_string(probabilities.cols()) + " columns but " +
                             std::to_string(dense_to_label.size()) + " class labels");
    }
    std::vector<std::int32_t> out;
    out.reserve(probabilities.rows());
    for (std::size_t i = 0; i < probabilities.rows(); ++i) {
        const auto row = probabilities.row(i);
        // max_element returns the first maximum.
        const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        out.push_back(dense_to_label[best]);
    }
    return out;
}

Evaluation score_predictions(std::span<const std::int32_t> predicted, std::span<const std::int32_t> truth) {
    if (truth.empty()) {
        throw ConfigError("cannot evaluate on an empty test set");
    }
    if (predicted.size() != truth.size()) {
        throw DimensionError(std::to_string(predicted.size()) + " predictions for " + std::to_string(truth.size()) +
                             " test rows");
    }
    std::map<std::int32_t, std::pair<std::size_t, std::size_t>> tally; // label -> (correct, total)
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        auto& [hit, total] = tally[truth[i]];
        ++total;
        if (predicted[i] == truth[i]) {
            ++hit;
            ++correct;
        }
    }
    Evaluation out;
    out.overall = 100.0 * static_cast<double>(correct) / static_cast<double>(truth.size());
    for (const auto& [label, counts] : tally) {
        out.per_class.push_back(
            {label, 100.0 * static_cast<double>(counts.first) / static_cast<double>(counts.second), counts.second});
    }
    return out;
}

Evaluation evaluate(const model::ClareModel& model, const dataio::LabeledDataset& test,
                    std::span<const std::int32_t> dense_to_label) {
    if (test.empty()) {
        throw ConfigError("cannot evaluate on an empty test set");
    }
    std::vector<std::int32_t> predicted;
    predicted.reserve(test.size());
    for (std::size_t start = 0; start < test.size(); start += kEvalChunk) {
        const std::size_t end = std::min(test.size(), start + kEvalChunk);
        std::vector<std::size_t> rows(end - start);
        std::iota(rows.begin(), rows.end(), start);
        const auto probs = model::classify(model, numkit::gather_rows(test.images(), rows));
        const auto labels = predict_labels(probs, dense_to_label);
        predicted.insert(predicted.end(), labels.begin(), labels.end());
    }
    return score_predictions(predicted, test.labels());
}

} // namespace clare::harness
