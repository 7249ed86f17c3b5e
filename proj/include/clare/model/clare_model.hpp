#pragma once

#include "clare/numkit/graph.hpp"
#include "clare/numkit/param_tape.hpp"
#include "clare/numkit/random.hpp"
#include "clare/numkit/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace clare::model {

using numkit::ParamTape;
using numkit::Rng;
using numkit::Tensor;

/// Layer widths. The defaults are the MNIST architecture: encoder
/// 784 (+class code) -> 512 -> 256 -> (mu, log_var) of width latent_dim,
/// classifier latent_dim -> class_no, decoder latent_dim (+class code) ->
/// 256 -> 512 -> 784.
struct ModelShape {
    std::size_t input_dim = 784;
    std::size_t hidden1 = 512;
    std::size_t hidden2 = 256;
    std::size_t latent_dim = 64;
    std::size_t class_no = 0;

    bool operator==(const ModelShape&) const = default;
};

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

// Parameter names, in tape order.
namespace names {
inline constexpr const char* kEncFc1Weight = "enc.fc1.weight";
inline constexpr const char* kEncFc1Cond = "enc.fc1.cond";
inline constexpr const char* kEncFc1Bias = "enc.fc1.bias";
inline constexpr const char* kEncFc2Weight = "enc.fc2.weight";
inline constexpr const char* kEncFc2Bias = "enc.fc2.bias";
inline constexpr const char* kEncMuWeight = "enc.mu.weight";
inline constexpr const char* kEncMuBias = "enc.mu.bias";
inline constexpr const char* kEncLogVarWeight = "enc.logvar.weight";
inline constexpr const char* kEncLogVarBias = "enc.logvar.bias";
inline constexpr const char* kClsWeight = "cls.weight";
inline constexpr const char* kClsBias = "cls.bias";
inline constexpr const char* kDecFc1Weight = "dec.fc1.weight";
inline constexpr const char* kDecFc1Cond = "dec.fc1.cond";
inline constexpr const char* kDecFc1Bias = "dec.fc1.bias";
inline constexpr const char* kDecFc2Weight = "dec.fc2.weight";
inline constexpr const char* kDecFc2Bias = "dec.fc2.bias";
inline constexpr const char* kDecOutWeight = "dec.out.weight";
inline constexpr const char* kDecOutBias = "dec.out.bias";
} // namespace names

/// Encoder, classifier head and conditional decoder in one parameter tape.
///
/// Class conditioning is stored as separate `*.cond` tables of shape
/// [layer width x class_no]; together with the matching `*.weight` they
/// form the weight matrix of a layer whose input is the concatenation of
/// the features and the one-hot class code.
class ClareModel {
public:
    ClareModel(ModelShape shape, Rng& rng);

    // Adopts an existing tape (checkpoint load). Validates every shape.
    static ClareModel from_params(ModelShape shape, ParamTape params);

    const ModelShape& shape() const noexcept { return shape_; }
    std::size_t class_no() const noexcept { return shape_.class_no; }
    std::size_t latent_dim() const noexcept { return shape_.latent_dim; }

    ParamTape& params() noexcept { return params_; }
    const ParamTape& params() const noexcept { return params_; }

private:
    ClareModel() = default;

    ModelShape shape_;
    ParamTape params_;
};

void validate_shape(const ModelShape& shape);
// Throws DimensionError if the tape does not hold exactly the parameters
// `shape` requires, in order.
void validate_params(const ModelShape& shape, const ParamTape& params);

struct LatentGaussian {
    Tensor mu;
    Tensor log_var;
};

/// One-hot rows for `classes` (kNoClass gives an all-zero row).
Tensor one_hot(std::span<const std::int32_t> classes, std::size_t width);

/// Gaussian posterior over the latent code for inputs `x` under class codes
/// `classes` (one per row, kNoClass for the zero code). Deterministic.
LatentGaussian encode(const ClareModel& model, const Tensor& x, std::span<const std::int32_t> classes);

/// z = mu + exp(log_var / 2) * noise.
Tensor reparameterize(const LatentGaussian& g, const Tensor& noise);

/// Pixel probabilities in (0, 1) for latent codes `z` under `classes`.
Tensor decode(const ClareModel& model, const Tensor& z, std::span<const std::int32_t> classes);
/// Same, for a tape that holds at least the decoder parameters.
Tensor decode_with(const ParamTape& decoder, std::size_t latent_dim, const Tensor& z,
                   std::span<const std::int32_t> classes);

/// Class logits from the classifier head applied to the posterior mean of
/// the zero-conditioned encoding (the label is unknown at prediction time).
Tensor classify_logits(const ClareModel& model, const Tensor& x);
/// Softmax of classify_logits; rows sum to one.
Tensor classify(const ClareModel& model, const Tensor& x);

/// Widens the class head and both condition tables to `new_class_no`.
/// Existing slices are copied verbatim; new slices are freshly initialized.
ClareModel expand_classes(const ClareModel& model, std::size_t new_class_no, Rng& rng);

namespace graph {

struct EncoderVars {
    numkit::Var mu;
    numkit::Var log_var;
};

// linear(x, enc.fc1) without the class code; shareable between branches
// that differ only in conditioning.
numkit::Var encoder_projection(numkit::Graph& g, numkit::Var x);
EncoderVars encoder_from_projection(numkit::Graph& g, numkit::Var projection, std::span<const std::int32_t> classes);
numkit::Var classifier_logits(numkit::Graph& g, numkit::Var mu);
numkit::Var decoder_logits(numkit::Graph& g, numkit::Var z, std::span<const std::int32_t> classes);

} // namespace graph

} // namespace clare::model
