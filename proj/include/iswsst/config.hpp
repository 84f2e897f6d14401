#pragma once

// Flat `section.key = value` configuration. Lines starting with '#' are
// comments; later assignments override earlier ones.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "iswsst/fusion.hpp"
#include "iswsst/index_bank.hpp"
#include "iswsst/raster.hpp"
#include "iswsst/space_branch.hpp"
#include "iswsst/wave_branch.hpp"
#include "iswsst/wavelet.hpp"

namespace iswsst {

class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return values_; }
  std::string to_string() const;

 private:
  std::map<std::string, std::string> values_;
};

enum class DetailSkip { Identity, Learned };

struct ModelConfig {
  std::size_t n_classes = 6;
  std::size_t size = 32;  // square tile extent the model is built for
  DType dtype = DType::F32;
  std::vector<BandTag> bands = default_bands();
  // Spatial branches see (x - input_center) * input_scale.
  double input_center = 0.5;
  double input_scale = 4.0;
  bool space = true;
  bool wave = true;
  std::vector<IndexSpec> indices{ndvi_spec()};

  std::size_t levels = 2;
  PadMode pad = PadMode::None;
  DetailSkip detail_skip = DetailSkip::Identity;

  std::size_t wave_blocks = 2;
  std::size_t wave_dim = 32;
  PhaseMode wave_phase = PhaseMode::Content;

  SpaceEncoderConfig space_encoder;

  FusionMode fusion = FusionMode::Adaptive;
  std::size_t reduction = 4;

  bool inverse_wave_block = true;
  bool channel_attention = true;

  std::size_t domain_count() const { return (space ? 1 : 0) + (wave ? 1 : 0) + indices.size(); }
};

struct TrainConfig {
  std::size_t steps = 2000;
  std::size_t batch = 4;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double poly_power = 0.9;
  std::uint64_t seed = 0;
  double aux_weight = 0.4;
};

// Apply every recognised key; unknown keys are a contract error.
void apply_config(const KeyValueConfig& kv, ModelConfig& model, TrainConfig& train);
KeyValueConfig to_key_values(const ModelConfig& model, const TrainConfig& train);

// `["ndvi", "ndwi"]` and `[{a="nir", b="green"}]` list syntaxes.
std::vector<std::string> parse_string_list(const std::string& text);
std::vector<IndexSpec> parse_custom_indices(const std::string& text);

std::string branches_string(const ModelConfig& model);

}  // namespace iswsst
