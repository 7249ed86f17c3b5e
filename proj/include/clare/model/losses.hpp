#pragma once

#include "clare/model/clare_model.hpp"

#include <cstdint>
#include <span>

namespace clare::model {

/// Batch mean of 0.5 * sum_j (mu_j^2 + exp(log_var_j) - 1 - log_var_j):
/// KL divergence from N(mu, diag(exp(log_var))) to N(0, I).
double kl_divergence(const LatentGaussian& g);

/// Batch mean of the per-row summed binary cross-entropy between targets
/// x in [0, 1] and reconstructions x_hat, which must lie strictly in (0, 1).
double reconstruction_loss(const Tensor& x, const Tensor& x_hat);

/// Mean negative log-probability of the true labels.
double classification_loss(const Tensor& probabilities, std::span<const std::int32_t> labels);

struct LossBreakdown {
    double total = 0.0;
    double classification = 0.0;
    double reconstruction = 0.0;
    double kl = 0.0;
};

struct LossOptions {
    double beta = 1.0;
    // Switches for the two terms of the joint objective; used to isolate
    // one term's gradients.
    bool classifier_term = true;
    bool generative_term = true;
};

/// Joint objective: cross-entropy of the classifier head plus the
/// conditional ELBO (reconstruction + beta * KL) of the encoder/decoder.
///
/// The classifier reads the zero-conditioned posterior mean, exactly as at
/// prediction time; the generative branch encodes with the true labels and
/// decodes z = mu + sigma * noise. Both branches share the first encoder
/// projection. `noise` is [batch x latent_dim] standard-normal.
LossBreakdown total_loss(const ClareModel& model, const Tensor& x, std::span<const std::int32_t> labels,
                         const Tensor& noise, const LossOptions& options = {});

/// Evaluates the same objective and adds its gradients into the model tape.
/// Gradients are accumulated, not overwritten; zero them first.
LossBreakdown accumulate_gradients(ClareModel& model, const Tensor& x, std::span<const std::int32_t> labels,
                                   const Tensor& noise, const LossOptions& options = {});

} // namespace clare::model
