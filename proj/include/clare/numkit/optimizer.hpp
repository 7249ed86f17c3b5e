#pragma once

#include "clare/numkit/param_tape.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace clare::numkit {

enum class OptimizerKind { Sgd, Adam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& text);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First-order update rule with per-parameter moment buffers.
///
/// Buffers are sized from the tape at construction; a tape whose shapes
/// change afterwards (e.g. after widening the class head) needs a new
/// optimizer.
class Optimizer {
public:
    Optimizer(OptimizerConfig config, const ParamTape& tape);

    // Applies one update from the gradients currently held in `tape`.
    // Throws NumericError naming the parameter if a gradient is not finite.
    void step(ParamTape& tape);

    std::uint64_t steps_taken() const noexcept { return step_; }
    const OptimizerConfig& config() const noexcept { return config_; }

private:
    OptimizerConfig config_;
    std::vector<Tensor> first_moment_;
    std::vector<Tensor> second_moment_;
    std::uint64_t step_ = 0;
};

} // namespace clare::numkit
