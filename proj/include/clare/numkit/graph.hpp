#pragma once

#include "clare/numkit/param_tape.hpp"
#include "clare/numkit/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace clare::numkit {

/// Handle to a node recorded on a Graph.
struct Var {
    static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
    std::size_t id = kInvalid;

    bool valid() const noexcept { return id != kInvalid; }
};

/// Label value meaning "no class": the all-zero condition code.
inline constexpr std::int32_t kNoClass = -1;

/// Records one forward pass over a fixed set of feed-forward ops and
/// replays it in reverse to produce parameter gradients.
///
/// Values are computed eagerly as ops are appended. Parameters and inputs
/// are referenced, not copied: the ParamTape and every tensor handed to
/// input() must outlive the graph. Constant operands of the other ops
/// (noise, targets, weights) are copied. A graph supports a single backward().
class Graph {
public:
    explicit Graph(const ParamTape& params);
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var input(const Tensor& value);
    Var param(std::size_t index);
    Var param(const std::string& name);

    // x [batch x in], weight [out x in], bias [out] -> [batch x out]
    Var linear(Var x, Var weight, Var bias);
    // h[i, :] += table[:, classes[i]]; kNoClass rows are left untouched.
    // Equivalent to appending one-hot columns to the layer input and the
    // matching columns to its weight matrix.
    Var add_condition(Var h, Var table, std::span<const std::int32_t> classes);
    Var relu(Var x);
    Var sigmoid(Var x);
    // Clamp with zero gradient outside [lo, hi].
    Var clamp(Var x, double lo, double hi);
    Var add(Var a, Var b);
    Var scale(Var x, double factor);
    // mu + exp(log_var / 2) * noise, noise held constant.
    Var reparameterize(Var mu, Var log_var, const Tensor& noise);

    // Scalar reductions. Batch reductions average over rows.
    Var kl_standard_normal(Var mu, Var log_var);
    Var bce_with_logits(Var logits, const Tensor& target);
    Var softmax_cross_entropy(Var logits, std::span<const std::int32_t> labels);
    Var weighted_sum(Var x, const Tensor& weights);

    const Tensor& value(Var v) const;
    double scalar(Var v) const;
    std::size_t node_count() const noexcept { return nodes_.size(); }

    /// Adds d(loss)/d(param) into the gradient slots of `tape`, which must be
    /// the tape this graph reads its parameters from.
    void backward(Var loss, ParamTape& tape);

private:
    struct Node {
        Tensor value;
        const Tensor* external = nullptr;
        Tensor grad;
        bool needs_grad = false;
        std::size_t param_index = Var::kInvalid;
        std::function<void()> backprop;
    };

    Node& node(Var v);
    const Node& node(Var v) const;
    Var push(Tensor value, bool needs_grad, const char* op);
    Tensor& grad_slot(Var v);
    bool needs_grad(Var v) const { return node(v).needs_grad; }

    const ParamTape& params_;
    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

} // namespace clare::numkit
