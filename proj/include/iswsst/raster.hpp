#pragma once

// Multi-band raster and label containers, sliding-window tiling and
// palette previews.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iswsst/tensor.hpp"

namespace iswsst {

enum class BandKind : std::uint8_t { Nir = 0, Red = 1, Green = 2, Blue = 3, Other = 4 };

struct BandTag {
  BandKind kind = BandKind::Other;
  std::uint16_t index = 0;  // only meaningful for Other

  bool operator==(const BandTag&) const = default;
};

// "nir", "red", "green", "blue", "other3" (case-insensitive).
BandTag parse_band_tag(const std::string& text);
std::vector<BandTag> parse_band_list(const std::string& csv);
std::string band_tag_name(BandTag tag);
std::vector<BandTag> default_bands();  // NIR, RED, GREEN, BLUE

// H x W x C, band-interleaved, values normalized to [0, 1].
struct Raster {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<BandTag> bands;
  std::vector<float> data;

  std::size_t channels() const { return bands.size(); }
  float at(std::size_t row, std::size_t col, std::size_t band) const {
    return data[(row * width + col) * bands.size() + band];
  }
  std::optional<std::size_t> find_band(BandKind kind) const;
  // One band as an H x W plane.
  std::vector<double> plane(std::size_t band) const;
  // C x H x W tensor (no gradient).
  Tensor to_tensor(DType dtype = DType::F64) const;

  bool operator==(const Raster&) const = default;
};

// Validates the invariants: positive extents, bands length matches the
// buffer, finite values inside [0, 1].
Raster make_raster(std::size_t height, std::size_t width, std::vector<BandTag> bands, std::vector<float> data);

struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::uint16_t n_classes = 0;
  std::vector<std::uint8_t> labels;

  std::uint8_t at(std::size_t row, std::size_t col) const { return labels[row * width + col]; }
  bool operator==(const LabelMap&) const = default;
};

LabelMap make_label_map(std::size_t height, std::size_t width, std::uint16_t n_classes,
                        std::vector<std::uint8_t> labels);

struct TileSpec {
  std::size_t window = 512;
  std::size_t stride = 256;
};

struct Tile {
  std::size_t row = 0;
  std::size_t col = 0;
  Raster raster;
  LabelMap labels;
};

// Raster container ("MSRS"): u16 version, u32 height, u32 width,
// u16 channels, u8 bit depth, per band (u8 kind, u16 index), then
// row-major band-interleaved little-endian samples. Bit depth 8 and 16
// store unsigned integers normalized by 2^depth - 1 on load; bit depth
// 32 stores IEEE floats already in [0, 1].
inline constexpr std::uint16_t kRasterVersion = 1;
// Label container ("LBLS"): u16 version, u32 height, u32 width,
// u16 class count, then one u8 class id per pixel.
inline constexpr std::uint16_t kLabelVersion = 1;

std::vector<std::uint8_t> encode_raster(const Raster& raster);
std::vector<std::uint8_t> encode_raster_integer(std::size_t height, std::size_t width,
                                                const std::vector<BandTag>& bands, unsigned bit_depth,
                                                std::span<const std::uint32_t> samples);
// `band_tags`, when non-empty, replaces the stored tags and must match the
// channel count.
Raster decode_raster(std::span<const std::uint8_t> bytes, const std::vector<BandTag>& band_tags = {});

std::vector<std::uint8_t> encode_labels(const LabelMap& labels);
LabelMap decode_labels(std::span<const std::uint8_t> bytes);

void save_raster(const Raster& raster, const std::filesystem::path& path);
Raster load_raster(const std::filesystem::path& path, const std::vector<BandTag>& band_tags = {});
void save_labels(const LabelMap& labels, const std::filesystem::path& path);
LabelMap load_labels(const std::filesystem::path& path);

// Window offsets along one axis: 0, stride, 2*stride, ... with the last
// offset clamped to extent - window.
std::vector<std::size_t> tile_offsets(std::size_t extent, std::size_t window, std::size_t stride);

std::vector<Tile> tile(const Raster& raster, const LabelMap& labels, const TileSpec& spec);
std::vector<Tile> tile(const Raster& raster, const TileSpec& spec);

Raster crop(const Raster& raster, std::size_t row, std::size_t col, std::size_t height, std::size_t width);
LabelMap crop(const LabelMap& labels, std::size_t row, std::size_t col, std::size_t height,
              std::size_t width);

using Rgb = std::array<std::uint8_t, 3>;
Rgb palette_color(std::size_t class_id);

// 8-bit indexed BMP, top-down rows, 256-entry palette.
std::vector<std::uint8_t> encode_palette_bmp(const LabelMap& labels);

// Writes the label container at `path` and a palette preview next to it
// (same stem, ".bmp").
void save_prediction(const LabelMap& labels, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace iswsst
