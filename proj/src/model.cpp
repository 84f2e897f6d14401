#include "iswsst/model.hpp"

#include <cmath>

#include "iswsst/error.hpp"
#include "iswsst/index_bank.hpp"
#include "iswsst/nn.hpp"
#include "iswsst/ops.hpp"
#include "iswsst/space_branch.hpp"
#include "iswsst/wave_branch.hpp"
#include "iswsst/wavelet.hpp"

namespace iswsst {

std::vector<Tensor> ModelOutput::probs() const {
  std::vector<Tensor> out;
  out.reserve(domains.size());
  for (const auto& d : domains) out.push_back(d.probs);
  return out;
}

std::size_t coarse_extent(std::size_t size, std::size_t levels, PadMode pad) {
  for (std::size_t l = 0; l < levels; ++l) {
    if (size % 2 != 0) {
      if (pad == PadMode::None) {
        throw ContractError("model.size is not divisible by 2^" + std::to_string(levels) +
                            " (set lwped.pad = reflect to pad odd levels)");
      }
      ++size;
    }
    size /= 2;
  }
  return size;
}

namespace {

// 1x1 class head shared by the coarse grid and the logit-space details.
struct ClassHead {
  Tensor weight;       // C x K
  Tensor bias;         // K
  Tensor detail_map;   // C x C, only with learned detail skips
  std::size_t levels = 0;

  Tensor project(const Tensor& image, bool with_bias) const {
    const std::size_t h = image.dim(1), w = image.dim(2);
    Tensor tokens = matmul(image_to_tokens(image), weight);
    if (with_bias) tokens = add_row_vector(tokens, bias);
    return tokens_to_image(tokens, h, w);
  }

  Tensor project_detail(const Tensor& detail) const {
    if (!detail_map.defined()) return project(detail, false);
    const std::size_t h = detail.dim(1), w = detail.dim(2);
    return tokens_to_image(matmul(matmul(image_to_tokens(detail), detail_map), weight), h, w);
  }
};

struct IndexDomain {
  IndexSpec spec;
  std::size_t band_a = 0;
  std::size_t band_b = 0;
  ChannelAttention attention;
  Tensor weight;  // K
  Tensor bias;    // K
};

std::size_t band_position(const std::vector<BandTag>& bands, BandTag tag, const IndexSpec& spec) {
  for (std::size_t i = 0; i < bands.size(); ++i)
    if (bands[i] == tag) return i;
  throw ContractError(spec.name() + " requires band " + band_tag_name(tag) + ", which model.bands lacks");
}

Tensor random_distribution(std::size_t k, std::size_t h, std::size_t w, std::uint64_t seed, DType dtype) {
  Rng rng(seed);
  std::vector<double> v(k * h * w);
  for (auto& x : v) x = rng.uniform(0.05, 1.0);
  const std::size_t hw = h * w;
  for (std::size_t p = 0; p < hw; ++p) {
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) total += v[c * hw + p];
    for (std::size_t c = 0; c < k; ++c) v[c * hw + p] /= total;
  }
  return Tensor::from({k, h, w}, std::move(v), dtype);
}

}  // namespace

struct Model::Impl {
  std::size_t grid = 0;
  std::optional<SpaceBranch> space;
  std::optional<WaveBranch> wave;
  ClassHead space_head;
  ClassHead wave_head;
  std::vector<IndexDomain> indices;
};

Model::~Model() = default;
Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config), impl_(std::make_unique<Impl>()) {
  const auto& c = config_;
  if (c.domain_count() == 0) throw ContractError("at least one domain branch must be enabled");
  if (c.n_classes < 2 || c.n_classes > 255) throw ContractError("model.n_classes must lie in [2, 255]");
  if (c.size == 0) throw ContractError("model.size must be positive");
  if (c.bands.empty()) throw ContractError("model.bands must name at least one band");
  if (c.levels == 0) throw ContractError("lwped.levels must be at least 1");
  if (c.reduction == 0) throw ContractError("attn.reduction must be positive");
  if (!(c.input_scale > 0.0) || !std::isfinite(c.input_center)) {
    throw ContractError("model.input_scale must be positive and model.input_center finite");
  }
  const std::size_t channels = c.bands.size(), k = c.n_classes;
  impl_->grid = coarse_extent(c.size, c.levels, c.pad);

  Rng rng(seed);
  auto make_head = [&](const std::string& prefix) {
    ClassHead head;
    head.levels = c.levels;
    head.weight = params_.add(prefix + ".head.w", fan_in_uniform({channels, k}, channels, rng, c.dtype));
    head.bias = params_.add(prefix + ".head.b", Tensor::zeros({k}, c.dtype));
    if (c.detail_skip == DetailSkip::Learned) {
      head.detail_map = params_.add(prefix + ".detail_skip", identity_matrix(channels, c.dtype));
    }
    return head;
  };

  if (c.space) {
    if (impl_->grid % c.space_encoder.patch != 0) {
      throw ContractError("coarse grid " + std::to_string(impl_->grid) + " is not divisible by space.patch " +
                          std::to_string(c.space_encoder.patch));
    }
    SpaceBranchConfig sc;
    sc.in_channels = channels;
    sc.grid_height = sc.grid_width = impl_->grid;
    sc.encoder = c.space_encoder;
    sc.channel_attention = c.channel_attention;
    sc.reduction = c.reduction;
    impl_->space.emplace(params_, "space", sc, c.dtype, rng);
    impl_->space_head = make_head("space");
  }
  if (c.wave) {
    WaveBranchConfig wc;
    wc.in_channels = channels;
    wc.grid_height = wc.grid_width = impl_->grid;
    wc.dim = c.wave_dim;
    wc.blocks = c.wave_blocks;
    wc.phase = c.wave_phase;
    wc.channel_attention = c.channel_attention;
    wc.reduction = c.reduction;
    impl_->wave.emplace(params_, "wave", wc, c.dtype, rng);
    impl_->wave_head = make_head("wave");
  }
  for (std::size_t i = 0; i < c.indices.size(); ++i) {
    const auto& spec = c.indices[i];
    const std::string prefix = "index" + std::to_string(i) + "." + spec.name();
    IndexDomain d;
    d.spec = spec;
    d.band_a = band_position(c.bands, spec.a, spec);
    d.band_b = band_position(c.bands, spec.b, spec);
    if (c.channel_attention) d.attention = ChannelAttention(params_, prefix + ".attn", 1, 1, c.dtype, rng);
    d.weight = params_.add(prefix + ".w", uniform_tensor({k}, 1.0, rng, c.dtype));
    d.bias = params_.add(prefix + ".b", Tensor::zeros({k}, c.dtype));
    impl_->indices.push_back(std::move(d));
  }
  lambda_ = params_.add("fusion.lambda", Tensor::zeros({c.domain_count()}, c.dtype));
}

std::vector<std::string> Model::domain_names() const {
  std::vector<std::string> names;
  if (config_.space) names.push_back("space");
  if (config_.wave) names.push_back("wave");
  for (const auto& d : impl_->indices) names.push_back(d.spec.name());
  return names;
}

Tensor Model::fusion_weight_tensor() const {
  const std::size_t n = config_.domain_count();
  if (config_.fusion == FusionMode::Adaptive) return iswsst::fusion_weights(lambda_);
  return Tensor::full({n}, 1.0 / static_cast<double>(n), config_.dtype);
}

std::vector<double> Model::fusion_weights() const {
  NoGradGuard guard;
  const Tensor weights = fusion_weight_tensor();
  auto v = weights.values();
  return {v.begin(), v.end()};
}

ModelOutput Model::forward(const Tensor& image) const {
  const auto& c = config_;
  const std::size_t channels = c.bands.size(), k = c.n_classes;
  if (image.rank() != 3 || image.dim(0) != channels || image.dim(1) != c.size || image.dim(2) != c.size) {
    throw ContractError("model expects input " + shape_str({channels, c.size, c.size}) + ", got " +
                        shape_str(image.shape()));
  }
  const Tensor x = image.dtype() == c.dtype ? image : image.to(c.dtype);
  // Index domains read raw reflectance; the pyramid path sees standardized bands.
  const Tensor xn = mul_scalar(add_scalar(x, -c.input_center), c.input_scale);
  const std::size_t h = c.size, w = c.size;
  ModelOutput out;

  if (c.space || c.wave) {
    const WaveletPyramid pyramid = encode_pyramid(xn, c.levels, c.pad);
    const double gain = std::ldexp(1.0, static_cast<int>(c.levels));
    auto spatial_domain = [&](const std::string& name, const Tensor& processed, const ClassHead& head) {
      DomainOutput d;
      d.name = name;
      d.coarse_logits = head.project(mul_scalar(processed, 1.0 / gain), true);
      if (c.inverse_wave_block) {
        WaveletPyramid logit_pyramid;
        logit_pyramid.height = pyramid.height;
        logit_pyramid.width = pyramid.width;
        logit_pyramid.padding = pyramid.padding;
        for (const auto& level : pyramid.levels) {
          logit_pyramid.levels.push_back(
              {Tensor(), head.project_detail(level.lh), head.project_detail(level.hl), head.project_detail(level.hh)});
        }
        d.logits = decode_pyramid(logit_pyramid, mul_scalar(d.coarse_logits, gain));
      } else {
        d.logits = upsample_nearest(d.coarse_logits, static_cast<std::size_t>(gain));
        if (d.logits.dim(1) != h || d.logits.dim(2) != w) d.logits = crop_spatial(d.logits, h, w);
      }
      return d;
    };
    if (c.space) out.domains.push_back(spatial_domain("space", impl_->space->forward(pyramid.coarsest()), impl_->space_head));
    if (c.wave) out.domains.push_back(spatial_domain("wave", impl_->wave->forward(pyramid.coarsest()), impl_->wave_head));
  }

  if (!impl_->indices.empty()) {
    auto xv = x.values();
    const std::size_t hw = h * w;
    for (const auto& d : impl_->indices) {
      IndexMap map = normalized_difference(xv.subspan(d.band_a * hw, hw), xv.subspan(d.band_b * hw, hw), h, w,
                                           d.spec.kind);
      Tensor idx = map.to_tensor(c.dtype);
      if (c.channel_attention) idx = d.attention(idx);
      out.domains.push_back({d.spec.name(), index_logits(idx, d.weight, d.bias), Tensor(), Tensor()});
    }
  }

  for (std::size_t i = 0; i < out.domains.size(); ++i) {
    auto& d = out.domains[i];
    if (corrupted_ && corrupted_->domain == i) {
      d.probs = random_distribution(k, h, w, corrupted_->seed, c.dtype);
    } else {
      d.probs = softmax(d.logits, 0);
    }
  }
  out.weights = fusion_weight_tensor();
  const auto probs = out.probs();
  out.fused = superpose_soft(probs, out.weights);
  return out;
}

Tensor Model::loss(const ModelOutput& out, std::span<const std::uint8_t> labels, double aux_weight) const {
  Tensor total = nll_loss(out.fused, labels);
  if (out.domains.size() > 1 && aux_weight != 0.0) {
    for (const auto& d : out.domains) total = add(total, mul_scalar(nll_loss(d.probs, labels), aux_weight));
  }
  return total;
}

LabelMap Model::decide(std::span<const Tensor> domain_probs) const {
  switch (config_.fusion) {
    case FusionMode::Majority: return vote_majority(domain_probs);
    case FusionMode::Average: return vote_average(domain_probs);
    case FusionMode::Adaptive: break;
  }
  const auto w = fusion_weights();
  return superpose_weighted(domain_probs, w);
}

Tensor Model::input_tensor(const Raster& raster) const {
  const std::size_t hw = raster.height * raster.width;
  std::vector<double> v(config_.bands.size() * hw);
  for (std::size_t b = 0; b < config_.bands.size(); ++b) {
    std::size_t src = raster.bands.size();
    for (std::size_t i = 0; i < raster.bands.size(); ++i)
      if (raster.bands[i] == config_.bands[b]) src = i;
    if (src == raster.bands.size()) {
      throw ContractError("raster lacks band " + band_tag_name(config_.bands[b]) + " required by the model");
    }
    const auto plane = raster.plane(src);
    std::copy(plane.begin(), plane.end(), v.begin() + static_cast<std::ptrdiff_t>(b * hw));
  }
  return Tensor::from({config_.bands.size(), raster.height, raster.width}, std::move(v), config_.dtype);
}

LabelMap Model::predict(const Raster& raster) const {
  if (raster.height == config_.size && raster.width == config_.size) {
    NoGradGuard guard;
    LabelMap labels = decide(forward(input_tensor(raster)).probs());
    labels.n_classes = static_cast<std::uint16_t>(config_.n_classes);
    return labels;
  }
  return predict_tiled(raster, {config_.size, std::max<std::size_t>(1, config_.size / 2)});
}

LabelMap Model::predict_tiled(const Raster& raster, const TileSpec& spec) const {
  if (spec.window != config_.size) {
    throw ContractError("tile window " + std::to_string(spec.window) + " differs from model.size " +
                        std::to_string(config_.size));
  }
  NoGradGuard guard;
  const std::size_t k = config_.n_classes, h = raster.height, w = raster.width, n = config_.domain_count();
  std::vector<std::vector<double>> acc(n, std::vector<double>(k * h * w, 0.0));
  std::vector<double> hits(h * w, 0.0);
  for (const auto& t : tile(raster, spec)) {
    const auto out = forward(input_tensor(t.raster));
    for (std::size_t d = 0; d < n; ++d) {
      auto p = out.domains[d].probs.values();
      for (std::size_t c = 0; c < k; ++c)
        for (std::size_t r = 0; r < spec.window; ++r)
          for (std::size_t q = 0; q < spec.window; ++q)
            acc[d][(c * h + t.row + r) * w + t.col + q] += p[(c * spec.window + r) * spec.window + q];
    }
    for (std::size_t r = 0; r < spec.window; ++r)
      for (std::size_t q = 0; q < spec.window; ++q) hits[(t.row + r) * w + t.col + q] += 1.0;
  }
  std::vector<Tensor> probs;
  for (auto& a : acc) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] /= hits[i % (h * w)];
    probs.push_back(Tensor::from({k, h, w}, std::move(a)));
  }
  LabelMap labels = decide(probs);
  labels.n_classes = static_cast<std::uint16_t>(k);
  return labels;
}

void Model::corrupt_domain(std::size_t domain, std::uint64_t seed) {
  if (domain >= config_.domain_count()) {
    throw ContractError("domain " + std::to_string(domain) + " out of range (" +
                        std::to_string(config_.domain_count()) + " domains)");
  }
  corrupted_ = Corruption{domain, seed};
}

void Model::save(const std::filesystem::path& path) const { save_checkpoint(params_, path); }

void Model::load(const std::filesystem::path& path) { load_checkpoint(params_, path); }

}  // namespace iswsst
