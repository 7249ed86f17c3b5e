#include "clare/numkit/graph.hpp"

#include "clare/errors.hpp"
#include "clare/numkit/gemm.hpp"
#include "clare/numkit/ops.hpp"

#include <algorithm>
#include <cmath>

namespace clare::numkit {

std::size_t ParamTape::add(std::string name, Tensor value) {
    if (find(name)) {
        throw UsageError("duplicate parameter name '" + name + "'");
    }
    Tensor grad(value.shape());
    params_.push_back({std::move(name), std::move(value), std::move(grad)});
    return params_.size() - 1;
}

std::optional<std::size_t> ParamTape::find(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

std::size_t ParamTape::index_of(const std::string& name) const {
    if (auto i = find(name)) {
        return *i;
    }
    throw UsageError("unknown parameter '" + name + "'");
}

void ParamTape::zero_grad() {
    for (auto& p : params_) {
        if (p.grad.shape() != p.value.shape()) {
            p.grad = Tensor(p.value.shape());
        } else {
            p.grad.fill(0.0);
        }
    }
}

Graph::Graph(const ParamTape& params) : params_(params) { nodes_.reserve(64); }

Graph::Node& Graph::node(Var v) {
    if (v.id >= nodes_.size()) {
        throw UsageError("graph variable does not belong to this graph");
    }
    return nodes_[v.id];
}

const Graph::Node& Graph::node(Var v) const {
    if (v.id >= nodes_.size()) {
        throw UsageError("graph variable does not belong to this graph");
    }
    return nodes_[v.id];
}

const Tensor& Graph::value(Var v) const {
    const Node& n = node(v);
    return n.external != nullptr ? *n.external : n.value;
}

double Graph::scalar(Var v) const {
    const Tensor& t = value(v);
    if (t.size() != 1) {
        throw DimensionError("expected a scalar, got " + to_string(t.shape()));
    }
    return t[0];
}

Var Graph::push(Tensor value, bool grad, const char* op) {
    require_finite(value, std::string("output of ") + op);
    Node n;
    n.value = std::move(value);
    n.needs_grad = grad;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Tensor& Graph::grad_slot(Var v) {
    Node& n = node(v);
    if (n.grad.empty() && !value(v).empty()) {
        n.grad = Tensor(value(v).shape());
    }
    return n.grad;
}

Var Graph::input(const Tensor& value) {
    Node n;
    n.external = &value;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Graph::param(std::size_t index) {
    if (index >= params_.size()) {
        throw UsageError("parameter index " + std::to_string(index) + " out of range");
    }
    Node n;
    n.external = &params_[index].value;
    n.needs_grad = true;
    n.param_index = index;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Graph::param(const std::string& name) { return param(params_.index_of(name)); }

Var Graph::linear(Var x, Var weight, Var bias) {
    const Var out = push(linear_forward(value(weight), value(bias), value(x)),
                         needs_grad(x) || needs_grad(weight) || needs_grad(bias), "linear");
    node(out).backprop = [this, out, x, weight, bias] {
        const Tensor& g = nodes_[out.id].grad;
        if (needs_grad(x)) {
            Tensor& dx = grad_slot(x);
            gemm(MatrixView::of(g), MatrixView::of(value(weight)), dx.data(), dx.cols(), true);
        }
        if (needs_grad(weight)) {
            Tensor& dw = grad_slot(weight);
            gemm(MatrixView::of(g).transposed(), MatrixView::of(value(x)), dw.data(), dw.cols(), true);
        }
        if (needs_grad(bias)) {
            Tensor& db = grad_slot(bias);
            for (std::size_t i = 0; i < g.rows(); ++i) {
                const auto row = g.row(i);
                for (std::size_t j = 0; j < row.size(); ++j) {
                    db[j] += row[j];
                }
            }
        }
    };
    return out;
}

Var Graph::add_condition(Var h, Var table, std::span<const std::int32_t> classes) {
    const Tensor& hv = value(h);
    const Tensor& tv = value(table);
    if (hv.rank() != 2 || tv.rank() != 2 || tv.rows() != hv.cols()) {
        throw DimensionError("add_condition: table " + to_string(tv.shape()) + " does not fit activations " +
                             to_string(hv.shape()));
    }
    if (classes.size() != hv.rows()) {
        throw DimensionError("add_condition: " + std::to_string(classes.size()) + " condition codes for " +
                             std::to_string(hv.rows()) + " rows");
    }
    const std::size_t width = tv.cols();
    for (const std::int32_t c : classes) {
        if (c != kNoClass && (c < 0 || static_cast<std::size_t>(c) >= width)) {
            throw ConditionError("condition class " + std::to_string(c) + " outside [0, " + std::to_string(width) +
                                 ")");
        }
    }
    Tensor result = hv;
    const std::size_t cols = hv.cols();
    for (std::size_t i = 0; i < hv.rows(); ++i) {
        if (classes[i] == kNoClass) {
            continue;
        }
        const auto c = static_cast<std::size_t>(classes[i]);
        double* row = result.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) {
            row[j] += tv.data()[j * width + c];
        }
    }
    const Var out = push(std::move(result), needs_grad(h) || needs_grad(table), "add_condition");
    node(out).backprop = [this, out, h, table, cls = std::vector<std::int32_t>(classes.begin(), classes.end())] {
        const Tensor& g = nodes_[out.id].grad;
        if (needs_grad(h)) {
            Tensor& dh = grad_slot(h);
            for (std::size_t i = 0; i < g.size(); ++i) {
                dh[i] += g[i];
            }
        }
        if (needs_grad(table)) {
            Tensor& dt = grad_slot(table);
            const std::size_t w = dt.cols();
            const std::size_t cols = g.cols();
            for (std::size_t i = 0; i < g.rows(); ++i) {
                if (cls[i] == kNoClass) {
                    continue;
                }
                const auto c = static_cast<std::size_t>(cls[i]);
                for (std::size_t j = 0; j < cols; ++j) {
                    dt.data()[j * w + c] += g(i, j);
                }
            }
        }
    };
    return out;
}

Var Graph::relu(Var x) {
    const Var out = push(numkit::relu(value(x)), needs_grad(x), "relu");
    node(out).backprop = [this, out, x] {
        const Tensor& g = nodes_[out.id].grad;
        const Tensor& xv = value(x);
        Tensor& dx = grad_slot(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (xv[i] > 0.0) {
                dx[i] += g[i];
            }
        }
    };
    return out;
}

Var Graph::sigmoid(Var x) {
    const Var out = push(numkit::sigmoid(value(x)), needs_grad(x), "sigmoid");
    node(out).backprop = [this, out, x] {
        const Tensor& g = nodes_[out.id].grad;
        const Tensor& y = nodes_[out.id].value;
        Tensor& dx = grad_slot(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            dx[i] += g[i] * y[i] * (1.0 - y[i]);
        }
    };
    return out;
}

Var Graph::clamp(Var x, double lo, double hi) {
    Tensor y = value(x);
    for (double& v : y.values()) {
        v = std::clamp(v, lo, hi);
    }
    const Var out = push(std::move(y), needs_grad(x), "clamp");
    node(out).backprop = [this, out, x, lo, hi] {
        const Tensor& g = nodes_[out.id].grad;
        const Tensor& xv = value(x);
        Tensor& dx = grad_slot(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (xv[i] >= lo && xv[i] <= hi) {
                dx[i] += g[i];
            }
        }
    };
    return out;
}

Var Graph::add(Var a, Var b) {
    require_same_shape(value(a), value(b), "add");
    Tensor y = value(a);
    const Tensor& bv = value(b);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] += bv[i];
    }
    const Var out = push(std::move(y), needs_grad(a) || needs_grad(b), "add");
    node(out).backprop = [this, out, a, b] {
        const Tensor& g = nodes_[out.id].grad;
        for (const Var v : {a, b}) {
            if (!needs_grad(v)) {
                continue;
            }
            Tensor& d = grad_slot(v);
            for (std::size_t i = 0; i < g.size(); ++i) {
                d[i] += g[i];
            }
        }
    };
    return out;
}

Var Graph::scale(Var x, double factor) {
    Tensor y = value(x);
    for (double& v : y.values()) {
        v *= factor;
    }
    const Var out = push(std::move(y), needs_grad(x), "scale");
    node(out).backprop = [this, out, x, factor] {
        const Tensor& g = nodes_[out.id].grad;
        Tensor& dx = grad_slot(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            dx[i] += factor * g[i];
        }
    };
    return out;
}

Var Graph::reparameterize(Var mu, Var log_var, const Tensor& noise) {
    const Tensor& m = value(mu);
    const Tensor& lv = value(log_var);
    require_same_shape(m, lv, "reparameterize(mu, log_var)");
    require_same_shape(m, noise, "reparameterize(mu, noise)");
    Tensor z(m.shape());
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = m[i] + std::exp(0.5 * lv[i]) * noise[i];
    }
    const Var out = push(std::move(z), needs_grad(mu) || needs_grad(log_var), "reparameterize");
    node(out).backprop = [this, out, mu, log_var, noise] {
        const Tensor& g = nodes_[out.id].grad;
        if (needs_grad(mu)) {
            Tensor& dm = grad_slot(mu);
            for (std::size_t i = 0; i < g.size(); ++i) {
                dm[i] += g[i];
            }
        }
        if (needs_grad(log_var)) {
            const Tensor& lvv = value(log_var);
            Tensor& dl = grad_slot(log_var);
            for (std::size_t i = 0; i < g.size(); ++i) {
                dl[i] += g[i] * noise[i] * 0.5 * std::exp(0.5 * lvv[i]);
            }
        }
    };
    return out;
}

Var Graph::kl_standard_normal(Var mu, Var log_var) {
    const Tensor& m = value(mu);
    const Tensor& lv = value(log_var);
    require_same_shape(m, lv, "kl_standard_normal");
    const std::size_t batch = m.rows();
    if (batch == 0) {
        throw DimensionError("kl_standard_normal: empty batch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        total += m[i] * m[i] + std::exp(lv[i]) - 1.0 - lv[i];
    }
    const Var out = push(Tensor({1}, {0.5 * total / static_cast<double>(batch)}),
                         needs_grad(mu) || needs_grad(log_var), "kl_standard_normal");
    node(out).backprop = [this, out, mu, log_var, batch] {
        const double g = nodes_[out.id].grad[0] / static_cast<double>(batch);
        const Tensor& mv = value(mu);
        const Tensor& lvv = value(log_var);
        if (needs_grad(mu)) {
            Tensor& dm = grad_slot(mu);
            for (std::size_t i = 0; i < mv.size(); ++i) {
                dm[i] += g * mv[i];
            }
        }
        if (needs_grad(log_var)) {
            Tensor& dl = grad_slot(log_var);
            for (std::size_t i = 0; i < lvv.size(); ++i) {
                dl[i] += g * 0.5 * (std::exp(lvv[i]) - 1.0);
            }
        }
    };
    return out;
}

Var Graph::bce_with_logits(Var logits, const Tensor& target) {
    const Tensor& l = value(logits);
    require_same_shape(l, target, "bce_with_logits");
    const std::size_t batch = l.rows();
    if (batch == 0) {
        throw DimensionError("bce_with_logits: empty batch");
    }
    // -[t log s(l) + (1 - t) log(1 - s(l))] = softplus(l) - t * l
    double total = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) {
        total += softplus(l[i]) - target[i] * l[i];
    }
    const Var out = push(Tensor({1}, {total / static_cast<double>(batch)}), needs_grad(logits), "bce_with_logits");
    node(out).backprop = [this, out, logits, target, batch] {
        const double g = nodes_[out.id].grad[0] / static_cast<double>(batch);
        const Tensor& lv = value(logits);
        Tensor& dl = grad_slot(logits);
        for (std::size_t i = 0; i < lv.size(); ++i) {
            dl[i] += g * (stable_sigmoid(lv[i]) - target[i]);
        }
    };
    return out;
}

Var Graph::softmax_cross_entropy(Var logits, std::span<const std::int32_t> labels) {
    const Tensor& l = value(logits);
    const std::size_t batch = l.rows();
    if (labels.size() != batch || batch == 0) {
        throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                             to_string(l.shape()));
    }
    const std::size_t classes = l.cols();
    for (const std::int32_t y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= classes) {
            throw ConditionError("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
        }
    }
    Tensor log_probs = log_softmax_rows(l);
    double total = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        total -= log_probs(i, static_cast<std::size_t>(labels[i]));
    }
    const Var out = push(Tensor({1}, {total / static_cast<double>(batch)}), needs_grad(logits),
                         "softmax_cross_entropy");
    node(out).backprop = [this, out, logits, log_probs = std::move(log_probs),
                          ys = std::vector<std::int32_t>(labels.begin(), labels.end())] {
        const double g = nodes_[out.id].grad[0] / static_cast<double>(ys.size());
        Tensor& dl = grad_slot(logits);
        const std::size_t c = log_probs.cols();
        for (std::size_t i = 0; i < ys.size(); ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                const double p = std::exp(log_probs(i, j));
                dl(i, j) += g * (p - (static_cast<std::size_t>(ys[i]) == j ? 1.0 : 0.0));
            }
        }
    };
    return out;
}

Var Graph::weighted_sum(Var x, const Tensor& weights) {
    const Tensor& xv = value(x);
    if (xv.size() != weights.size()) {
        throw DimensionError("weighted_sum: " + to_string(xv.shape()) + " vs weights " + to_string(weights.shape()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) {
        total += xv[i] * weights[i];
    }
    const Var out = push(Tensor({1}, {total}), needs_grad(x), "weighted_sum");
    node(out).backprop = [this, out, x, weights] {
        const double g = nodes_[out.id].grad[0];
        Tensor& dx = grad_slot(x);
        for (std::size_t i = 0; i < dx.size(); ++i) {
            dx[i] += g * weights[i];
        }
    };
    return out;
}

void Graph::backward(Var loss, ParamTape& tape) {
    if (&tape != &params_) {
        throw UsageError("backward: gradients must go to the tape the forward pass read from");
    }
    if (nodes_.empty() || !loss.valid() || loss.id >= nodes_.size()) {
        throw UsageError("backward called without a recorded forward pass");
    }
    if (backward_done_) {
        throw UsageError("backward already ran on this graph");
    }
    if (value(loss).size() != 1) {
        throw DimensionError("backward: loss must be a scalar, got " + to_string(value(loss).shape()));
    }
    backward_done_ = true;
    if (!needs_grad(loss)) {
        return;
    }
    grad_slot(loss)[0] = 1.0;
    for (std::size_t id = loss.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.needs_grad || n.grad.empty()) {
            continue;
        }
        if (n.backprop) {
            n.backprop();
        }
        if (n.param_index != Var::kInvalid) {
            Tensor& dst = tape[n.param_index].grad;
            if (dst.shape() != n.grad.shape()) {
                dst = Tensor(n.grad.shape());
            }
            for (std::size_t i = 0; i < dst.size(); ++i) {
                dst[i] += n.grad[i];
            }
        }
    }
}

} // namespace clare::numkit
