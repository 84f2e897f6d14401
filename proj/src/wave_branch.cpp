#include "iswsst/wave_branch.hpp"

#include "iswsst/error.hpp"
#include "iswsst/ops.hpp"

namespace iswsst {

PhaseMode parse_phase_mode(const std::string& text) {
  if (text == "content") return PhaseMode::Content;
  if (text == "static") return PhaseMode::Static;
  throw ContractError("unknown phase mode: " + text + " (content|static)");
}

std::string phase_mode_name(PhaseMode mode) { return mode == PhaseMode::Content ? "content" : "static"; }

Tensor content_phase(const Tensor& x, const Tensor& phase_proj) { return matmul(x, phase_proj); }

WaveToken to_wave(const Tensor& x, const Tensor& phase) {
  if (x.shape() != phase.shape()) {
    throw DimensionError("wave amplitude " + shape_str(x.shape()) + " and phase " + shape_str(phase.shape()) +
                         " differ");
  }
  Tensor amplitude = abs(x);
  return {amplitude, phase, mul(amplitude, cos(phase)), mul(amplitude, sin(phase))};
}

Tensor channel_fc(const Tensor& x, const Tensor& weight) {
  if (x.rank() != 2 || weight.rank() != 2 || weight.dim(1) != x.dim(1)) {
    throw DimensionError("channel_fc: tokens " + shape_str(x.shape()) + " with weight " + shape_str(weight.shape()));
  }
  return matmul(x, transpose(weight));
}

Tensor token_mix(const WaveToken& wave, const Tensor& w_t, const Tensor& w_i) {
  const std::size_t n = wave.real.dim(0);
  if (w_t.shape() != Shape{n, n} || w_i.shape() != Shape{n, n}) {
    throw DimensionError("token_mix: " + std::to_string(n) + " tokens with weights " + shape_str(w_t.shape()) +
                         " and " + shape_str(w_i.shape()));
  }
  return add(matmul(w_t, wave.real), matmul(w_i, wave.imag));
}

WaveBlock::WaveBlock(ParameterSet& params, const std::string& prefix, std::size_t tokens, std::size_t dim,
                     PhaseMode mode, DType dtype, Rng& rng)
    : tokens_(tokens),
      dim_(dim),
      mode_(mode),
      norm_mix_(params, prefix + ".norm_mix", dim, dtype),
      norm_channel_(params, prefix + ".norm_channel", dim, dtype) {
  Shape phase_shape = mode == PhaseMode::Content ? Shape{dim, dim} : Shape{tokens, dim};
  phase_ = params.add(prefix + ".phase", Tensor::zeros(phase_shape, dtype));
  w_t_ = params.add(prefix + ".w_t", fan_in_uniform({tokens, tokens}, tokens, rng, dtype));
  w_i_ = params.add(prefix + ".w_i", fan_in_uniform({tokens, tokens}, tokens, rng, dtype));
  w_c_ = params.add(prefix + ".w_c", fan_in_uniform({dim, dim}, dim, rng, dtype));
}

Tensor WaveBlock::phase(const Tensor& normalized) const {
  if (mode_ == PhaseMode::Content) return content_phase(normalized, phase_);
  return phase_;
}

Tensor WaveBlock::forward(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(0) != tokens_ || x.dim(1) != dim_) {
    throw DimensionError("wave block expects " + shape_str({tokens_, dim_}) + " tokens, got " + shape_str(x.shape()));
  }
  Tensor h = norm_mix_(x);
  Tensor mixed = add(x, token_mix(to_wave(h, phase(h)), w_t_, w_i_));
  return add(mixed, channel_fc(norm_channel_(mixed), w_c_));
}

WaveBranch::WaveBranch(ParameterSet& params, const std::string& prefix, const WaveBranchConfig& config, DType dtype,
                       Rng& rng)
    : config_(config) {
  const std::size_t c = config.in_channels, d = config.dim;
  const std::size_t tokens = config.grid_height * config.grid_width;
  embed_w_ = params.add(prefix + ".embed.w", fan_in_uniform({c, d}, c, rng, dtype));
  embed_b_ = params.add(prefix + ".embed.b", Tensor::zeros({d}, dtype));
  for (std::size_t b = 0; b < config.blocks; ++b) {
    blocks_.emplace_back(params, prefix + ".block" + std::to_string(b), tokens, d, config.phase, dtype, rng);
  }
  norm_out_ = LayerNorm(params, prefix + ".norm_out", d, dtype);
  if (config.channel_attention) {
    attention_ = ChannelAttention(params, prefix + ".attn", d, effective_reduction(d, config.reduction), dtype, rng);
  }
  out_w_ = params.add(prefix + ".out.w", Tensor::zeros({d, c}, dtype));
  out_b_ = params.add(prefix + ".out.b", Tensor::zeros({c}, dtype));
}

Tensor WaveBranch::forward(const Tensor& ll) const {
  if (ll.rank() != 3 || ll.dim(0) != config_.in_channels || ll.dim(1) != config_.grid_height ||
      ll.dim(2) != config_.grid_width) {
    throw ContractError("wave branch expects " +
                        shape_str({config_.in_channels, config_.grid_height, config_.grid_width}) + ", got " +
                        shape_str(ll.shape()));
  }
  Tensor tokens = linear(image_to_tokens(ll), embed_w_, embed_b_);
  for (const auto& block : blocks_) tokens = block.forward(tokens);
  tokens = norm_out_(tokens);
  if (config_.channel_attention) {
    tokens = image_to_tokens(attention_(tokens_to_image(tokens, config_.grid_height, config_.grid_width)));
  }
  Tensor delta = tokens_to_image(linear(tokens, out_w_, out_b_), config_.grid_height, config_.grid_width);
  return add(ll, delta);
}

}  // namespace iswsst
