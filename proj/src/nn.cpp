#include "iswsst/nn.hpp"

#include "iswsst/error.hpp"

namespace iswsst {

LayerNorm::LayerNorm(ParameterSet& params, const std::string& prefix, std::size_t dim, DType dtype)
    : scale_(params.add(prefix + ".scale", Tensor::ones({dim}, dtype))),
      shift_(params.add(prefix + ".shift", Tensor::zeros({dim}, dtype))) {}

Tensor LayerNorm::operator()(const Tensor& x) const {
  return add_row_vector(mul_row_vector(standardize_rows(x), scale_), shift_);
}

Tensor image_to_tokens(const Tensor& x) {
  if (x.rank() != 3) throw DimensionError("expected C x H x W, got " + shape_str(x.shape()));
  return transpose(reshape(x, {x.dim(0), x.dim(1) * x.dim(2)}));
}

Tensor tokens_to_image(const Tensor& tokens, std::size_t height, std::size_t width) {
  if (tokens.rank() != 2 || tokens.dim(0) != height * width) {
    throw DimensionError("token grid " + shape_str(tokens.shape()) + " does not match " + std::to_string(height) +
                         "x" + std::to_string(width));
  }
  return reshape(transpose(tokens), {tokens.dim(1), height, width});
}

}  // namespace iswsst
