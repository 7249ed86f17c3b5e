#pragma once

#include "clare/numkit/tensor.hpp"

namespace clare::numkit {

/// y[i, j] = sum_k x[i, k] * W[j, k] + b[j] for W [out x in], b [out], x [batch x in].
Tensor linear_forward(const Tensor& weight, const Tensor& bias, const Tensor& x);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

// Row-wise softmax with the row maximum subtracted before exponentiation.
Tensor softmax_rows(const Tensor& logits);
Tensor log_softmax_rows(const Tensor& logits);

// Numerically stable scalar helpers shared with the graph ops.
double stable_sigmoid(double v);
double softplus(double v);

} // namespace clare::numkit
