#pragma once

#include <string>
#include <vector>

#include "iswsst/fusion.hpp"
#include "iswsst/nn.hpp"
#include "iswsst/parameter.hpp"

namespace iswsst {

struct SpaceEncoderConfig {
  std::size_t patch = 4;
  std::size_t dim = 32;
  std::size_t heads = 2;
  std::size_t layers = 2;
};

// Non-overlapping p x p patches of a C x H x W tensor as rows of an
// n x (C*p*p) matrix; patches in row-major grid order, features ordered
// (channel, row-in-patch, col-in-patch).
Tensor patchify(const Tensor& x, std::size_t patch);
Tensor unpatchify(const Tensor& patches, std::size_t channels, std::size_t height, std::size_t width,
                  std::size_t patch);

class PatchEmbed {
 public:
  PatchEmbed() = default;
  PatchEmbed(ParameterSet& params, const std::string& prefix, std::size_t channels, std::size_t height,
             std::size_t width, std::size_t patch, std::size_t dim, DType dtype, Rng& rng);

  Tensor operator()(const Tensor& x) const;
  std::size_t tokens() const { return tokens_; }
  const Tensor& weight() const { return weight_; }
  const Tensor& positions() const { return positions_; }

 private:
  std::size_t channels_ = 0, height_ = 0, width_ = 0, patch_ = 0, tokens_ = 0;
  Tensor weight_;     // [C*p*p x dim]
  Tensor bias_;       // [dim]
  Tensor positions_;  // [n x dim]
};

// Pre-norm multi-head self-attention followed by a ReLU feed-forward
// layer, each with a residual connection. Scores use 1/sqrt(dim/heads).
class MhsaBlock {
 public:
  MhsaBlock(ParameterSet& params, const std::string& prefix, std::size_t dim, std::size_t heads, DType dtype,
            Rng& rng);

  // `attention`, when given, receives one n x n row-stochastic matrix per head.
  Tensor forward(const Tensor& tokens, std::vector<Tensor>* attention = nullptr) const;

  const Tensor& w_value() const { return w_v_; }
  const Tensor& w_out() const { return w_o_; }
  const Tensor& b_out() const { return b_o_; }

 private:
  std::size_t dim_;
  std::size_t heads_;
  LayerNorm norm_attn_;
  LayerNorm norm_ffn_;
  Tensor w_q_, w_k_, w_v_, w_o_, b_o_;
  Tensor w_1_, b_1_, w_2_, b_2_;
};

struct SpaceBranchConfig {
  std::size_t in_channels = 4;
  std::size_t grid_height = 8;
  std::size_t grid_width = 8;
  SpaceEncoderConfig encoder;
  bool channel_attention = true;
  std::size_t reduction = 4;
};

// Runs on the coarse low-pass component and returns a processed
// component of the same shape (ll + unpatchify(project(features))); the
// output projection starts at zero.
class SpaceBranch {
 public:
  SpaceBranch(ParameterSet& params, const std::string& prefix, const SpaceBranchConfig& config, DType dtype,
              Rng& rng);

  Tensor forward(const Tensor& ll) const;
  // Token features before the output projection, n x dim.
  Tensor features(const Tensor& ll) const;
  const std::vector<MhsaBlock>& blocks() const { return blocks_; }

 private:
  SpaceBranchConfig config_;
  PatchEmbed embed_;
  std::vector<MhsaBlock> blocks_;
  LayerNorm norm_out_;
  ChannelAttention attention_;
  Tensor out_w_;
  Tensor out_b_;
};

}  // namespace iswsst
