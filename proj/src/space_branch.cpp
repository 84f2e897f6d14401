#include "iswsst/space_branch.hpp"

#include <cmath>

#include "iswsst/error.hpp"
#include "iswsst/ops.hpp"

namespace iswsst {

namespace {

struct PatchGrid {
  std::size_t channels, height, width, patch;

  std::size_t cols() const { return width / patch; }
  std::size_t tokens() const { return (height / patch) * cols(); }
  std::size_t features() const { return channels * patch * patch; }
  // Flat image index of feature f in patch t.
  std::size_t source(std::size_t t, std::size_t f) const {
    const std::size_t pr = t / cols(), pc = t % cols();
    const std::size_t c = f / (patch * patch), r = (f / patch) % patch, q = f % patch;
    return (c * height + pr * patch + r) * width + pc * patch + q;
  }
};

void check_grid(std::size_t height, std::size_t width, std::size_t patch) {
  if (patch == 0 || height % patch != 0 || width % patch != 0) {
    throw ContractError("extents " + std::to_string(height) + "x" + std::to_string(width) +
                        " are not divisible by patch " + std::to_string(patch));
  }
}

}  // namespace

Tensor patchify(const Tensor& x, std::size_t patch) {
  if (x.rank() != 3) throw DimensionError("patchify expects C x H x W, got " + shape_str(x.shape()));
  check_grid(x.dim(1), x.dim(2), patch);
  const PatchGrid grid{x.dim(0), x.dim(1), x.dim(2), patch};
  const std::size_t n = grid.tokens(), f = grid.features();
  auto v = x.values();
  std::vector<double> out(n * f);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t k = 0; k < f; ++k) out[t * f + k] = v[grid.source(t, k)];
  return record_op("patchify", {n, f}, x.dtype(), std::move(out), {x},
                   [grid, n, f](std::span<const double> g, std::span<const std::span<double>> gin) {
                     for (std::size_t t = 0; t < n; ++t)
                       for (std::size_t k = 0; k < f; ++k) gin[0][grid.source(t, k)] += g[t * f + k];
                   });
}

Tensor unpatchify(const Tensor& patches, std::size_t channels, std::size_t height, std::size_t width,
                  std::size_t patch) {
  check_grid(height, width, patch);
  const PatchGrid grid{channels, height, width, patch};
  const std::size_t n = grid.tokens(), f = grid.features();
  if (patches.shape() != Shape{n, f}) {
    throw DimensionError("unpatchify expects " + shape_str({n, f}) + ", got " + shape_str(patches.shape()));
  }
  auto v = patches.values();
  std::vector<double> out(channels * height * width);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t k = 0; k < f; ++k) out[grid.source(t, k)] = v[t * f + k];
  return record_op("unpatchify", {channels, height, width}, patches.dtype(), std::move(out), {patches},
                   [grid, n, f](std::span<const double> g, std::span<const std::span<double>> gin) {
                     for (std::size_t t = 0; t < n; ++t)
                       for (std::size_t k = 0; k < f; ++k) gin[0][t * f + k] += g[grid.source(t, k)];
                   });
}

PatchEmbed::PatchEmbed(ParameterSet& params, const std::string& prefix, std::size_t channels, std::size_t height,
                       std::size_t width, std::size_t patch, std::size_t dim, DType dtype, Rng& rng)
    : channels_(channels), height_(height), width_(width), patch_(patch) {
  check_grid(height, width, patch);
  tokens_ = (height / patch) * (width / patch);
  const std::size_t f = channels * patch * patch;
  weight_ = params.add(prefix + ".w", fan_in_uniform({f, dim}, f, rng, dtype));
  bias_ = params.add(prefix + ".b", Tensor::zeros({dim}, dtype));
  positions_ = params.add(prefix + ".pos", uniform_tensor({tokens_, dim}, 0.02, rng, dtype));
}

Tensor PatchEmbed::operator()(const Tensor& x) const {
  if (x.rank() != 3 || x.dim(0) != channels_ || x.dim(1) != height_ || x.dim(2) != width_) {
    throw ContractError("patch embedding expects " + shape_str({channels_, height_, width_}) + ", got " +
                        shape_str(x.shape()));
  }
  return add(linear(patchify(x, patch_), weight_, bias_), positions_);
}

MhsaBlock::MhsaBlock(ParameterSet& params, const std::string& prefix, std::size_t dim, std::size_t heads,
                     DType dtype, Rng& rng)
    : dim_(dim),
      heads_(heads),
      norm_attn_(params, prefix + ".norm_attn", dim, dtype),
      norm_ffn_(params, prefix + ".norm_ffn", dim, dtype) {
  if (heads == 0 || dim % heads != 0) {
    throw ContractError("attention dim " + std::to_string(dim) + " is not divisible by " + std::to_string(heads) +
                        " heads");
  }
  w_q_ = params.add(prefix + ".w_q", fan_in_uniform({dim, dim}, dim, rng, dtype));
  w_k_ = params.add(prefix + ".w_k", fan_in_uniform({dim, dim}, dim, rng, dtype));
  w_v_ = params.add(prefix + ".w_v", fan_in_uniform({dim, dim}, dim, rng, dtype));
  w_o_ = params.add(prefix + ".w_o", fan_in_uniform({dim, dim}, dim, rng, dtype));
  b_o_ = params.add(prefix + ".b_o", Tensor::zeros({dim}, dtype));
  w_1_ = params.add(prefix + ".ffn.w1", fan_in_uniform({dim, 2 * dim}, dim, rng, dtype));
  b_1_ = params.add(prefix + ".ffn.b1", Tensor::zeros({2 * dim}, dtype));
  w_2_ = params.add(prefix + ".ffn.w2", fan_in_uniform({2 * dim, dim}, 2 * dim, rng, dtype));
  b_2_ = params.add(prefix + ".ffn.b2", Tensor::zeros({dim}, dtype));
}

Tensor MhsaBlock::forward(const Tensor& tokens, std::vector<Tensor>* attention) const {
  if (tokens.rank() != 2 || tokens.dim(1) != dim_) {
    throw DimensionError("attention block expects n x " + std::to_string(dim_) + ", got " +
                         shape_str(tokens.shape()));
  }
  const std::size_t head_dim = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Tensor h = norm_attn_(tokens);
  Tensor q = matmul(h, w_q_);
  Tensor k = matmul(h, w_k_);
  Tensor v = matmul(h, w_v_);
  std::vector<Tensor> heads;
  for (std::size_t i = 0; i < heads_; ++i) {
    Tensor qh = slice_cols(q, i * head_dim, head_dim);
    Tensor kh = slice_cols(k, i * head_dim, head_dim);
    Tensor vh = slice_cols(v, i * head_dim, head_dim);
    Tensor weights = softmax(mul_scalar(matmul(qh, transpose(kh)), scale), 1);
    if (attention) attention->push_back(weights);
    heads.push_back(matmul(weights, vh));
  }
  Tensor attended = linear(concat_cols(heads), w_o_, b_o_);
  Tensor y = add(tokens, attended);
  Tensor ffn = linear(relu(linear(norm_ffn_(y), w_1_, b_1_)), w_2_, b_2_);
  return add(y, ffn);
}

SpaceBranch::SpaceBranch(ParameterSet& params, const std::string& prefix, const SpaceBranchConfig& config,
                         DType dtype, Rng& rng)
    : config_(config) {
  const auto& enc = config.encoder;
  embed_ = PatchEmbed(params, prefix + ".embed", config.in_channels, config.grid_height, config.grid_width, enc.patch,
                      enc.dim, dtype, rng);
  for (std::size_t l = 0; l < enc.layers; ++l) {
    blocks_.emplace_back(params, prefix + ".layer" + std::to_string(l), enc.dim, enc.heads, dtype, rng);
  }
  norm_out_ = LayerNorm(params, prefix + ".norm_out", enc.dim, dtype);
  if (config.channel_attention) {
    attention_ =
        ChannelAttention(params, prefix + ".attn", enc.dim, effective_reduction(enc.dim, config.reduction), dtype, rng);
  }
  const std::size_t f = config.in_channels * enc.patch * enc.patch;
  out_w_ = params.add(prefix + ".out.w", Tensor::zeros({enc.dim, f}, dtype));
  out_b_ = params.add(prefix + ".out.b", Tensor::zeros({f}, dtype));
}

Tensor SpaceBranch::features(const Tensor& ll) const {
  Tensor tokens = embed_(ll);
  for (const auto& block : blocks_) tokens = block.forward(tokens);
  tokens = norm_out_(tokens);
  if (config_.channel_attention) {
    const std::size_t p = config_.encoder.patch;
    const std::size_t gh = config_.grid_height / p, gw = config_.grid_width / p;
    tokens = image_to_tokens(attention_(tokens_to_image(tokens, gh, gw)));
  }
  return tokens;
}

Tensor SpaceBranch::forward(const Tensor& ll) const {
  Tensor delta = unpatchify(linear(features(ll), out_w_, out_b_), config_.in_channels, config_.grid_height,
                            config_.grid_width, config_.encoder.patch);
  return add(ll, delta);
}

}  // namespace iswsst
