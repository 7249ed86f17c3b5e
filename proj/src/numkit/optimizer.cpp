#include "clare/numkit/optimizer.hpp"

#include "clare/errors.hpp"

#include <cmath>

namespace clare::numkit {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer_kind(const std::string& text) {
    if (text == "sgd") {
        return OptimizerKind::Sgd;
    }
    if (text == "adam") {
        return OptimizerKind::Adam;
    }
    throw ConfigError("unknown optimizer '" + text + "' (expected sgd or adam)");
}

Optimizer::Optimizer(OptimizerConfig config, const ParamTape& tape) : config_(config) {
    if (!(config_.learning_rate > 0.0)) {
        throw ConfigError("learning rate must be positive");
    }
    if (config_.kind == OptimizerKind::Adam) {
        for (const auto& p : tape) {
            first_moment_.emplace_back(p.value.shape());
            second_moment_.emplace_back(p.value.shape());
        }
    }
}

void Optimizer::step(ParamTape& tape) {
    for (const auto& p : tape) {
        if (p.grad.shape() != p.value.shape()) {
            throw UsageError("gradient of '" + p.name + "' has shape " + to_string(p.grad.shape()) +
                             ", parameter has " + to_string(p.value.shape()));
        }
        if (!p.grad.all_finite()) {
            throw NumericError("non-finite gradient for parameter '" + p.name + "'");
        }
    }
    ++step_;
    const double lr = config_.learning_rate;
    if (config_.kind == OptimizerKind::Sgd) {
        for (auto& p : tape) {
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                p.value[i] -= lr * p.grad[i];
            }
        }
        return;
    }

    if (first_moment_.size() != tape.size()) {
        throw UsageError("optimizer state was built for a different parameter tape");
    }
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double t = static_cast<double>(step_);
    const double correction1 = 1.0 - std::pow(b1, t);
    const double correction2 = 1.0 - std::pow(b2, t);
    for (std::size_t k = 0; k < tape.size(); ++k) {
        Parameter& p = tape[k];
        Tensor& m = first_moment_[k];
        Tensor& v = second_moment_[k];
        if (m.shape() != p.value.shape()) {
            throw UsageError("moment buffer for '" + p.name + "' no longer matches the parameter shape");
        }
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
    }
}

} // namespace clare::numkit
