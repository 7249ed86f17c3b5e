#include "clare/model/clare_model.hpp"

#include "clare/errors.hpp"
#include "clare/numkit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace clare::model {

namespace {

using numkit::Graph;
using numkit::Shape;
using numkit::Var;

struct ParamSpec {
    const char* name;
    Shape shape;
    // Glorot fan sizes of the layer the tensor belongs to; zero fans mean
    // zero-initialized (biases).
    std::size_t fan_in;
    std::size_t fan_out;
};

std::vector<ParamSpec> param_specs(const ModelShape& s) {
    using namespace names;
    const std::size_t enc_in = s.input_dim + s.class_no;
    const std::size_t dec_in = s.latent_dim + s.class_no;
    return {
        {kEncFc1Weight, {s.hidden1, s.input_dim}, enc_in, s.hidden1},
        {kEncFc1Cond, {s.hidden1, s.class_no}, enc_in, s.hidden1},
        {kEncFc1Bias, {s.hidden1}, 0, 0},
        {kEncFc2Weight, {s.hidden2, s.hidden1}, s.hidden1, s.hidden2},
        {kEncFc2Bias, {s.hidden2}, 0, 0},
        {kEncMuWeight, {s.latent_dim, s.hidden2}, s.hidden2, s.latent_dim},
        {kEncMuBias, {s.latent_dim}, 0, 0},
        {kEncLogVarWeight, {s.latent_dim, s.hidden2}, s.hidden2, s.latent_dim},
        {kEncLogVarBias, {s.latent_dim}, 0, 0},
        {kClsWeight, {s.class_no, s.latent_dim}, s.latent_dim, s.class_no},
        {kClsBias, {s.class_no}, 0, 0},
        {kDecFc1Weight, {s.hidden2, s.latent_dim}, dec_in, s.hidden2},
        {kDecFc1Cond, {s.hidden2, s.class_no}, dec_in, s.hidden2},
        {kDecFc1Bias, {s.hidden2}, 0, 0},
        {kDecFc2Weight, {s.hidden1, s.hidden2}, s.hidden2, s.hidden1},
        {kDecFc2Bias, {s.hidden1}, 0, 0},
        {kDecOutWeight, {s.input_dim, s.hidden1}, s.hidden1, s.input_dim},
        {kDecOutBias, {s.input_dim}, 0, 0},
    };
}

Tensor run_decoder(const ParamTape& params, const Tensor& z, std::span<const std::int32_t> classes) {
    Graph g(params);
    const Var logits = graph::decoder_logits(g, g.input(z), classes);
    Tensor pixels = numkit::sigmoid(g.value(logits));
    // Saturated logits round to exactly 0 or 1; keep outputs strictly inside.
    constexpr double lo = std::numeric_limits<double>::denorm_min();
    const double hi = std::nextafter(1.0, 0.0);
    for (double& v : pixels.values()) {
        v = std::clamp(v, lo, hi);
    }
    return pixels;
}

void require_input_width(const ModelShape& shape, const Tensor& x) {
    if (x.rank() != 2 || x.cols() != shape.input_dim) {
        throw DimensionError("expected inputs of width " + std::to_string(shape.input_dim) + ", got " +
                             numkit::to_string(x.shape()));
    }
}

void require_rows(std::span<const std::int32_t> classes, std::size_t rows) {
    if (classes.size() != rows) {
        throw DimensionError(std::to_string(classes.size()) + " condition codes for " + std::to_string(rows) +
                             " rows");
    }
}

} // namespace

void validate_shape(const ModelShape& shape) {
    if (shape.input_dim == 0 || shape.hidden1 == 0 || shape.hidden2 == 0 || shape.latent_dim == 0) {
        throw ConfigError("model layer widths must be positive");
    }
    if (shape.class_no == 0) {
        throw ConfigError("model needs at least one class");
    }
    if (shape.latent_dim > shape.hidden2) {
        throw ConfigError("latent width " + std::to_string(shape.latent_dim) + " exceeds the encoder's last hidden width " +
                          std::to_string(shape.hidden2));
    }
}

void validate_params(const ModelShape& shape, const ParamTape& params) {
    validate_shape(shape);
    const auto specs = param_specs(shape);
    if (params.size() != specs.size()) {
        throw DimensionError("model tape holds " + std::to_string(params.size()) + " parameters, expected " +
                             std::to_string(specs.size()));
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (params[i].name != specs[i].name || params[i].value.shape() != specs[i].shape) {
            throw DimensionError("parameter " + std::to_string(i) + " is '" + params[i].name + "' " +
                                 numkit::to_string(params[i].value.shape()) + ", expected '" + specs[i].name + "' " +
                                 numkit::to_string(specs[i].shape));
        }
    }
}

ClareModel::ClareModel(ModelShape shape, Rng& rng) : shape_(shape) {
    validate_shape(shape_);
    for (auto& spec : param_specs(shape_)) {
        Tensor value(spec.shape);
        if (spec.fan_in != 0) {
            numkit::glorot_uniform(value, spec.fan_in, spec.fan_out, rng);
        }
        params_.add(spec.name, std::move(value));
    }
}

ClareModel ClareModel::from_params(ModelShape shape, ParamTape params) {
    validate_params(shape, params);
    ClareModel model;
    model.shape_ = shape;
    model.params_ = std::move(params);
    model.params_.zero_grad();
    return model;
}

Tensor one_hot(std::span<const std::int32_t> classes, std::size_t width) {
    Tensor out({classes.size(), width});
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] == numkit::kNoClass) {
            continue;
        }
        if (classes[i] < 0 || static_cast<std::size_t>(classes[i]) >= width) {
            throw ConditionError("class " + std::to_string(classes[i]) + " outside [0, " + std::to_string(width) + ")");
        }
        out(i, static_cast<std::size_t>(classes[i])) = 1.0;
    }
    return out;
}

namespace graph {

Var encoder_projection(Graph& g, Var x) {
    return g.linear(x, g.param(names::kEncFc1Weight), g.param(names::kEncFc1Bias));
}

EncoderVars encoder_from_projection(Graph& g, Var projection, std::span<const std::int32_t> classes) {
    const Var h1 = g.relu(g.add_condition(projection, g.param(names::kEncFc1Cond), classes));
    const Var h2 = g.relu(g.linear(h1, g.param(names::kEncFc2Weight), g.param(names::kEncFc2Bias)));
    const Var mu = g.linear(h2, g.param(names::kEncMuWeight), g.param(names::kEncMuBias));
    const Var log_var = g.clamp(g.linear(h2, g.param(names::kEncLogVarWeight), g.param(names::kEncLogVarBias)),
                                kLogVarMin, kLogVarMax);
    return {mu, log_var};
}

Var classifier_logits(Graph& g, Var mu) { return g.linear(mu, g.param(names::kClsWeight), g.param(names::kClsBias)); }

Var decoder_logits(Graph& g, Var z, std::span<const std::int32_t> classes) {
    const Var h1 = g.relu(g.add_condition(g.linear(z, g.param(names::kDecFc1Weight), g.param(names::kDecFc1Bias)),
                                          g.param(names::kDecFc1Cond), classes));
    const Var h2 = g.relu(g.linear(h1, g.param(names::kDecFc2Weight), g.param(names::kDecFc2Bias)));
    return g.linear(h2, g.param(names::kDecOutWeight), g.param(names::kDecOutBias));
}

} // namespace graph

LatentGaussian encode(const ClareModel& model, const Tensor& x, std::span<const std::int32_t> classes) {
    require_input_width(model.shape(), x);
    require_rows(classes, x.rows());
    Graph g(model.params());
    const auto vars = graph::encoder_from_projection(g, graph::encoder_projection(g, g.input(x)), classes);
    return {g.value(vars.mu), g.value(vars.log_var)};
}

Tensor reparameterize(const LatentGaussian& g, const Tensor& noise) {
    numkit::require_same_shape(g.mu, g.log_var, "reparameterize(mu, log_var)");
    numkit::require_same_shape(g.mu, noise, "reparameterize(mu, noise)");
    Tensor z(g.mu.shape());
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = g.mu[i] + std::exp(0.5 * g.log_var[i]) * noise[i];
    }
    return z;
}

Tensor decode(const ClareModel& model, const Tensor& z, std::span<const std::int32_t> classes) {
    return decode_with(model.params(), model.latent_dim(), z, classes);
}

Tensor decode_with(const ParamTape& decoder, std::size_t latent_dim, const Tensor& z,
                   std::span<const std::int32_t> classes) {
    if (z.rank() != 2 || z.cols() != latent_dim) {
        throw DimensionError("expected latent codes of width " + std::to_string(latent_dim) + ", got " +
                             numkit::to_string(z.shape()));
    }
    require_rows(classes, z.rows());
    return run_decoder(decoder, z, classes);
}

Tensor classify_logits(const ClareModel& model, const Tensor& x) {
    require_input_width(model.shape(), x);
    const std::vector<std::int32_t> no_class(x.rows(), numkit::kNoClass);
    Graph g(model.params());
    const auto vars = graph::encoder_from_projection(g, graph::encoder_projection(g, g.input(x)), no_class);
    return g.value(graph::classifier_logits(g, vars.mu));
}

Tensor classify(const ClareModel& model, const Tensor& x) { return numkit::softmax_rows(classify_logits(model, x)); }

ClareModel expand_classes(const ClareModel& model, std::size_t new_class_no, Rng& rng) {
    const ModelShape& old_shape = model.shape();
    if (new_class_no <= old_shape.class_no) {
        throw UsageError("expand_classes: cannot go from " + std::to_string(old_shape.class_no) + " to " +
                         std::to_string(new_class_no) + " classes (only widening is supported)");
    }
    ModelShape shape = old_shape;
    shape.class_no = new_class_no;

    ParamTape params;
    for (auto& spec : param_specs(shape)) {
        const Tensor& old = model.params().value(spec.name);
        if (old.shape() == spec.shape) {
            params.add(spec.name, old);
            continue;
        }
        Tensor fresh(spec.shape);
        if (spec.fan_in != 0) {
            numkit::glorot_uniform(fresh, spec.fan_in, spec.fan_out, rng);
        }
        if (old.rank() == 1) {
            // class bias: [class_no]
            std::copy(old.values().begin(), old.values().end(), fresh.values().begin());
        } else if (std::string(spec.name) == names::kClsWeight) {
            // rows are classes
            std::copy(old.values().begin(), old.values().end(), fresh.values().begin());
        } else {
            // condition tables: columns are classes
            for (std::size_t r = 0; r < old.rows(); ++r) {
                for (std::size_t c = 0; c < old.cols(); ++c) {
                    fresh(r, c) = old(r, c);
                }
            }
        }
        params.add(spec.name, std::move(fresh));
    }
    return ClareModel::from_params(shape, std::move(params));
}

} // namespace clare::model
