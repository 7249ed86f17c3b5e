#include "clare/model/losses.hpp"

#include "clare/errors.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace clare::model {

namespace {

using numkit::Graph;
using numkit::Var;

struct Objective {
    Var total;
    LossBreakdown parts;
};

Objective build_objective(Graph& g, const ModelShape& shape, const Tensor& x, std::span<const std::int32_t> labels,
                          const Tensor& noise, const LossOptions& options) {
    if (x.rank() != 2 || x.cols() != shape.input_dim) {
        throw DimensionError("expected inputs of width " + std::to_string(shape.input_dim) + ", got " +
                             numkit::to_string(x.shape()));
    }
    if (labels.size() != x.rows() || x.rows() == 0) {
        throw DimensionError(std::to_string(labels.size()) + " labels for a batch of " + std::to_string(x.rows()));
    }
    for (const std::int32_t y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= shape.class_no) {
            throw ConditionError("label " + std::to_string(y) + " outside [0, " + std::to_string(shape.class_no) + ")");
        }
    }
    if (!options.classifier_term && !options.generative_term) {
        throw UsageError("objective with both terms disabled");
    }

    const Var projection = graph::encoder_projection(g, g.input(x));
    Objective out;
    std::vector<Var> terms;

    if (options.classifier_term) {
        const std::vector<std::int32_t> no_class(x.rows(), numkit::kNoClass);
        const auto plain = graph::encoder_from_projection(g, projection, no_class);
        const Var ce = g.softmax_cross_entropy(graph::classifier_logits(g, plain.mu), labels);
        out.parts.classification = g.scalar(ce);
        terms.push_back(ce);
    }
    if (options.generative_term) {
        numkit::require_same_shape(noise, Tensor({x.rows(), shape.latent_dim}), "latent noise");
        const auto cond = graph::encoder_from_projection(g, projection, labels);
        const Var z = g.reparameterize(cond.mu, cond.log_var, noise);
        const Var rec = g.bce_with_logits(graph::decoder_logits(g, z, labels), x);
        const Var kl = g.kl_standard_normal(cond.mu, cond.log_var);
        out.parts.reconstruction = g.scalar(rec);
        out.parts.kl = g.scalar(kl);
        terms.push_back(rec);
        terms.push_back(options.beta == 1.0 ? kl : g.scale(kl, options.beta));
    }

    out.total = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) {
        out.total = g.add(out.total, terms[i]);
    }
    out.parts.total = g.scalar(out.total);
    return out;
}

} // namespace

double kl_divergence(const LatentGaussian& g) {
    numkit::require_same_shape(g.mu, g.log_var, "kl_divergence");
    const std::size_t batch = g.mu.rows();
    if (batch == 0) {
        throw DimensionError("kl_divergence: empty batch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < g.mu.size(); ++i) {
        total += g.mu[i] * g.mu[i] + std::exp(g.log_var[i]) - 1.0 - g.log_var[i];
    }
    return 0.5 * total / static_cast<double>(batch);
}

double reconstruction_loss(const Tensor& x, const Tensor& x_hat) {
    numkit::require_same_shape(x, x_hat, "reconstruction_loss");
    const std::size_t batch = x.rows();
    if (batch == 0) {
        throw DimensionError("reconstruction_loss: empty batch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double p = x_hat[i];
        if (!(p > 0.0 && p < 1.0)) {
            throw NumericError("reconstruction value " + std::to_string(p) + " at index " + std::to_string(i) +
                               " is outside (0, 1)");
        }
        total -= x[i] * std::log(p) + (1.0 - x[i]) * std::log1p(-p);
    }
    return total / static_cast<double>(batch);
}

double classification_loss(const Tensor& probabilities, std::span<const std::int32_t> labels) {
    const std::size_t batch = probabilities.rows();
    if (labels.size() != batch || batch == 0) {
        throw DimensionError(std::to_string(labels.size()) + " labels for " + std::to_string(batch) +
                             " probability rows");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const std::int32_t y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= probabilities.cols()) {
            throw ConditionError("label " + std::to_string(y) + " outside [0, " +
                                 std::to_string(probabilities.cols()) + ")");
        }
        total -= std::log(probabilities(i, static_cast<std::size_t>(y)));
    }
    if (!std::isfinite(total)) {
        throw NumericError("classification loss is not finite (zero probability on a true label)");
    }
    return total / static_cast<double>(batch);
}

LossBreakdown total_loss(const ClareModel& model, const Tensor& x, std::span<const std::int32_t> labels,
                         const Tensor& noise, const LossOptions& options) {
    Graph g(model.params());
    return build_objective(g, model.shape(), x, labels, noise, options).parts;
}

LossBreakdown accumulate_gradients(ClareModel& model, const Tensor& x, std::span<const std::int32_t> labels,
                                   const Tensor& noise, const LossOptions& options) {
    Graph g(model.params());
    const Objective objective = build_objective(g, model.shape(), x, labels, noise, options);
    g.backward(objective.total, model.params());
    return objective.parts;
}

} // namespace clare::model
