#pragma once

// Phase-aware token mixing. Each token x_j becomes a wave with amplitude
// |x_j| and a content-dependent phase theta_j; tokens are aggregated as
//   u_j = sum_k W_t[j, k] (|x_k| cos theta_k) + W_i[j, k] (|x_k| sin theta_k)
// and channels are mixed per token by a linear map.

#include <string>
#include <vector>

#include "iswsst/fusion.hpp"
#include "iswsst/nn.hpp"
#include "iswsst/parameter.hpp"

namespace iswsst {

struct WaveToken {
  Tensor amplitude;  // |x|, n x d
  Tensor phase;      // theta, n x d
  Tensor real;       // amplitude * cos(phase)
  Tensor imag;       // amplitude * sin(phase)
};

enum class PhaseMode { Content, Static };

PhaseMode parse_phase_mode(const std::string& text);
std::string phase_mode_name(PhaseMode mode);

// theta = x * phase_proj, a per-channel linear projection of the token.
Tensor content_phase(const Tensor& x, const Tensor& phase_proj);
WaveToken to_wave(const Tensor& x, const Tensor& phase);

// Row j of the result is W_c x_j.
Tensor channel_fc(const Tensor& x, const Tensor& weight);

// Real-valued aggregation across tokens; W_t and W_i are n x n.
Tensor token_mix(const WaveToken& wave, const Tensor& w_t, const Tensor& w_i);

// Pre-norm residual block: x + token_mix(wave(norm(x))), then
// y + channel_fc(norm(y)).
class WaveBlock {
 public:
  WaveBlock(ParameterSet& params, const std::string& prefix, std::size_t tokens, std::size_t dim, PhaseMode mode,
            DType dtype, Rng& rng);

  Tensor forward(const Tensor& x) const;
  // Phase assigned to already-normalized tokens.
  Tensor phase(const Tensor& normalized) const;

  const Tensor& w_t() const { return w_t_; }
  const Tensor& w_i() const { return w_i_; }
  const Tensor& w_c() const { return w_c_; }
  // d x d projection (content mode) or n x d table (static mode).
  const Tensor& phase_param() const { return phase_; }

 private:
  std::size_t tokens_;
  std::size_t dim_;
  PhaseMode mode_;
  LayerNorm norm_mix_;
  LayerNorm norm_channel_;
  Tensor phase_;
  Tensor w_t_;
  Tensor w_i_;
  Tensor w_c_;
};

struct WaveBranchConfig {
  std::size_t in_channels = 4;
  std::size_t grid_height = 8;
  std::size_t grid_width = 8;
  std::size_t dim = 32;
  std::size_t blocks = 2;
  PhaseMode phase = PhaseMode::Content;
  bool channel_attention = true;
  std::size_t reduction = 4;
};

// Consumes the coarse low-pass component (C x h x w, one token per cell),
// returns a processed component of the same shape: ll + project(features).
// The output projection starts at zero, so a fresh branch passes ll
// through unchanged.
class WaveBranch {
 public:
  WaveBranch(ParameterSet& params, const std::string& prefix, const WaveBranchConfig& config, DType dtype, Rng& rng);

  Tensor forward(const Tensor& ll) const;
  const std::vector<WaveBlock>& blocks() const { return blocks_; }

 private:
  WaveBranchConfig config_;
  Tensor embed_w_;
  Tensor embed_b_;
  std::vector<WaveBlock> blocks_;
  LayerNorm norm_out_;
  ChannelAttention attention_;
  Tensor out_w_;
  Tensor out_b_;
};

}  // namespace iswsst
