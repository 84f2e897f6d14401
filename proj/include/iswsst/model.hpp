#pragma once

// End-to-end wiring. Domains are ordered [space, wave, index_1..n]; each
// emits K x H x W class logits at the input resolution.
//
// Space and wave domains process the coarsest low-pass component of an
// L-level Haar pyramid and apply a 1x1 class head there (coarse logits).
// With the inverse wave block enabled the coarse logits are restored to
// full resolution by decoding a logit-space pyramid whose detail subbands
// are the input details passed through the same head weights. Both the
// head and the transform are linear and act on different axes, so this
// equals applying the head to decode(processed_ll); unprocessed input
// gives exactly the per-pixel head response. Without it the coarse logits
// are upsampled by nearest neighbour.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "iswsst/config.hpp"
#include "iswsst/fusion.hpp"
#include "iswsst/parameter.hpp"
#include "iswsst/raster.hpp"

namespace iswsst {

struct DomainOutput {
  std::string name;
  Tensor logits;         // K x H x W
  Tensor probs;          // softmax over classes
  Tensor coarse_logits;  // K x h x w before upsampling; undefined for index domains
};

struct ModelOutput {
  std::vector<DomainOutput> domains;
  Tensor weights;  // fusion weights, one per domain
  Tensor fused;    // K x H x W weighted probability sum

  std::vector<Tensor> probs() const;
};

class Model {
 public:
  // Throws ContractError when the configuration cannot be wired.
  explicit Model(const ModelConfig& config, std::uint64_t seed = 0);
  ~Model();
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;

  const ModelConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  std::vector<std::string> domain_names() const;

  // image: C x size x size with the configured band order.
  ModelOutput forward(const Tensor& image) const;
  // Fused cross-entropy plus aux_weight times each domain's cross-entropy
  // (the auxiliary term is dropped for single-domain models).
  Tensor loss(const ModelOutput& out, std::span<const std::uint8_t> labels, double aux_weight) const;
  // Inference decision for the configured fusion mode.
  LabelMap decide(std::span<const Tensor> domain_probs) const;

  Tensor input_tensor(const Raster& raster) const;
  LabelMap predict(const Raster& raster) const;
  // Overlapping windows average their per-domain probabilities before the
  // fusion decision.
  LabelMap predict_tiled(const Raster& raster, const TileSpec& spec) const;

  // Current fusion weights (uniform for average/majority modes).
  std::vector<double> fusion_weights() const;
  const Tensor& lambda_logits() const { return lambda_; }

  // Replaces one domain's class distribution with a fixed random one, to
  // emulate a broken branch.
  void corrupt_domain(std::size_t domain, std::uint64_t seed);
  void clear_corruption() { corrupted_.reset(); }

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  struct Impl;
  Tensor fusion_weight_tensor() const;

  ModelConfig config_;
  ParameterSet params_;
  std::unique_ptr<Impl> impl_;
  Tensor lambda_;
  struct Corruption {
    std::size_t domain;
    std::uint64_t seed;
  };
  std::optional<Corruption> corrupted_;
};

// Coarse grid extent after `levels` halvings (rounded up under reflect padding).
std::size_t coarse_extent(std::size_t size, std::size_t levels, PadMode pad);

}  // namespace iswsst
