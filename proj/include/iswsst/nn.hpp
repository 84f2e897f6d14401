#pragma once

#include <string>

#include "iswsst/ops.hpp"
#include "iswsst/parameter.hpp"

namespace iswsst {

// x [n x in] * weight [in x out] + bias [out]
inline Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return add_row_vector(matmul(x, weight), bias);
}

// Per-token standardization over channels with learnable scale and shift.
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterSet& params, const std::string& prefix, std::size_t dim, DType dtype);

  Tensor operator()(const Tensor& x) const;

 private:
  Tensor scale_;
  Tensor shift_;
};

// [C x H x W] <-> [(H*W) x C] token views.
Tensor image_to_tokens(const Tensor& x);
Tensor tokens_to_image(const Tensor& tokens, std::size_t height, std::size_t width);

}  // namespace iswsst
