#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "iswsst/tensor.hpp"

namespace iswsst {

enum class UnaryOp { Sigmoid, Relu, Cos, Sin, Abs, Neg, Exp, Log };
enum class BinaryOp { Add, Sub, Mul };

// Pointwise ops. Binary operands must have equal shapes, or one of them
// must hold a single element (scalar broadcast).
Tensor elementwise(UnaryOp op, const Tensor& x);
Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b);

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::Add, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::Sub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::Mul, a, b); }
inline Tensor sigmoid(const Tensor& x) { return elementwise(UnaryOp::Sigmoid, x); }
inline Tensor relu(const Tensor& x) { return elementwise(UnaryOp::Relu, x); }
inline Tensor cos(const Tensor& x) { return elementwise(UnaryOp::Cos, x); }
inline Tensor sin(const Tensor& x) { return elementwise(UnaryOp::Sin, x); }
// d|x|/dx is taken as 0 at x == 0.
inline Tensor abs(const Tensor& x) { return elementwise(UnaryOp::Abs, x); }
inline Tensor neg(const Tensor& x) { return elementwise(UnaryOp::Neg, x); }
inline Tensor exp(const Tensor& x) { return elementwise(UnaryOp::Exp, x); }
inline Tensor log(const Tensor& x) { return elementwise(UnaryOp::Log, x); }

Tensor add_scalar(const Tensor& x, double c);
Tensor mul_scalar(const Tensor& x, double c);

// [m x k] x [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Max-subtracted softmax along `axis`.
Tensor softmax(const Tensor& x, std::size_t axis);

// Single element at a flat index, as a one-element tensor.
Tensor select(const Tensor& x, std::size_t flat);

// Column block [begin, begin + count) of a rank-2 tensor, and its inverse.
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
Tensor concat_cols(std::span<const Tensor> parts);

// Row-broadcast helpers for [n x d] by [d], column-broadcast for [m x n] by [m].
Tensor add_row_vector(const Tensor& x, const Tensor& v);
Tensor mul_row_vector(const Tensor& x, const Tensor& v);
Tensor add_col_vector(const Tensor& x, const Tensor& v);

// Per-row standardization of [n x d]: (x - mean) / sqrt(var + eps).
Tensor standardize_rows(const Tensor& x, double eps = 1e-5);

// [C x H x W] -> [C], spatial mean per channel.
Tensor channel_mean(const Tensor& x);
// [C x H x W] scaled per channel by g [C].
Tensor scale_channels(const Tensor& x, const Tensor& g);

// Nearest-neighbour upsampling of [C x H x W] by an integer factor.
Tensor upsample_nearest(const Tensor& x, std::size_t factor);

// Mean negative log-likelihood of per-pixel distributions [K x H x W]
// against class ids (row-major H x W). Probabilities are floored at 1e-12.
Tensor nll_loss(const Tensor& probs, std::span<const std::uint8_t> labels);

}  // namespace iswsst
