#include "iswsst/index_bank.hpp"

#include <algorithm>
#include <cctype>

#include "iswsst/error.hpp"
#include "iswsst/ops.hpp"

namespace iswsst {

std::string IndexSpec::name() const {
  switch (kind) {
    case IndexKind::Ndvi: return "ndvi";
    case IndexKind::Ndwi: return "ndwi";
    case IndexKind::Generic: break;
  }
  return "nd_" + band_tag_name(a) + "_" + band_tag_name(b);
}

IndexSpec ndvi_spec() { return {IndexKind::Ndvi, {BandKind::Nir, 0}, {BandKind::Red, 0}}; }

IndexSpec ndwi_spec() { return {IndexKind::Ndwi, {BandKind::Green, 0}, {BandKind::Nir, 0}}; }

IndexSpec custom_index_spec(BandTag a, BandTag b) { return {IndexKind::Generic, a, b}; }

IndexSpec parse_index_name(const std::string& name) {
  std::string key = name;
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  if (key == "ndvi") return ndvi_spec();
  if (key == "ndwi") return ndwi_spec();
  throw ContractError("unknown index: " + name + " (use ndvi, ndwi or a custom band pair)");
}

Tensor IndexMap::to_tensor(DType dtype) const {
  return Tensor::from({1, height, width}, values, dtype);
}

IndexMap normalized_difference(std::span<const double> a_band, std::span<const double> b_band,
                               std::size_t height, std::size_t width, IndexKind kind) {
  if (a_band.size() != height * width || b_band.size() != height * width) {
    throw ContractError("index bands must both hold " + std::to_string(height) + "x" + std::to_string(width) +
                        " samples, got " + std::to_string(a_band.size()) + " and " +
                        std::to_string(b_band.size()));
  }
  IndexMap out{kind, height, width, std::vector<double>(height * width)};
  for (std::size_t p = 0; p < out.values.size(); ++p) {
    const double a = a_band[p];
    const double b = b_band[p];
    if (a < 0.0 || b < 0.0) throw ContractError("index bands must be non-negative");
    out.values[p] = std::clamp((a - b) / (a + b + kIndexEpsilon), -1.0, 1.0);
  }
  return out;
}

namespace {

std::size_t require_band(const Raster& raster, BandTag tag, const IndexSpec& spec) {
  for (std::size_t i = 0; i < raster.bands.size(); ++i)
    if (raster.bands[i] == tag) return i;
  throw ContractError(spec.name() + " requires band " + band_tag_name(tag) + ", which the raster lacks");
}

}  // namespace

IndexMap compute_index(const Raster& raster, const IndexSpec& spec) {
  const std::size_t a = require_band(raster, spec.a, spec);
  const std::size_t b = require_band(raster, spec.b, spec);
  return normalized_difference(raster.plane(a), raster.plane(b), raster.height, raster.width, spec.kind);
}

Tensor index_logits(const Tensor& index, const Tensor& weight, const Tensor& bias) {
  if (index.rank() != 3 || index.dim(0) != 1) {
    throw DimensionError("index map must be 1xHxW, got " + shape_str(index.shape()));
  }
  if (weight.numel() != bias.numel()) {
    throw DimensionError("index projection weight " + shape_str(weight.shape()) + " vs bias " +
                         shape_str(bias.shape()));
  }
  const std::size_t k = weight.numel(), h = index.dim(1), w = index.dim(2);
  Tensor flat = reshape(index, {1, h * w});
  Tensor logits = add_col_vector(matmul(reshape(weight, {k, 1}), flat), bias);
  return reshape(logits, {k, h, w});
}

Tensor index_logits(const IndexMap& index, const Tensor& weight, const Tensor& bias) {
  return index_logits(index.to_tensor(weight.dtype()), weight, bias);
}

}  // namespace iswsst
