#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "opnn/tensor.hpp"

namespace opnn {

enum class Padding { Valid, Same };

// (m,k) x (k,n) -> (m,n)
Tensor matmul(const Tensor& a, const Tensor& b);

// Cross-correlation (no kernel flip) over the last axis.
//   input  (batch, in_channels, width)
//   kernel (out_channels, in_channels, k)
//   bias   (out_channels)
// Valid padding: out_width = width - (k-1)*dilation.
// Same padding: out_width = width, zeros split evenly with the extra on the right.
Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              std::size_t dilation = 1, Padding padding = Padding::Valid);

// Pointwise ops; binary forms require identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // Hadamard
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);

// Explicit scalar-tensor broadcasting.
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);

// Explicit leading-axis broadcasting: b's shape must equal a's shape with the
// first axis dropped; b is applied to every slice along a's first axis.
// Backward for b sums over that axis. Covers bias adds and peephole products.
Tensor add_bcast(const Tensor& a, const Tensor& b);
Tensor mul_bcast(const Tensor& a, const Tensor& b);

Tensor concat(const std::vector<Tensor>& tensors, std::size_t axis);

// Half-open [start, stop) along one axis.
Tensor slice(const Tensor& t, std::size_t axis, std::size_t start, std::size_t stop);

Tensor reshape(const Tensor& t, std::vector<std::size_t> new_shape);

// Sum of all elements, as a scalar tensor.
Tensor sum(const Tensor& t);

// (1/N) * sum((pred - target)^2); shapes must match.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

// Fresh parameter drawn uniformly from [-1/sqrt(fan_in), +1/sqrt(fan_in)].
Tensor uniform_fan_in_init(std::vector<std::size_t> shape, std::size_t fan_in, std::mt19937_64& rng);

}  // namespace opnn
