#pragma once

// Remote-sensing indices computed at the source resolution, and their
// projection to per-pixel class logits.

#include <span>
#include <string>
#include <vector>

#include "iswsst/raster.hpp"
#include "iswsst/tensor.hpp"

namespace iswsst {

enum class IndexKind { Ndvi, Ndwi, Generic };

inline constexpr double kIndexEpsilon = 1e-8;

// (a - b) / (a + b) over two bands.
struct IndexSpec {
  IndexKind kind = IndexKind::Ndvi;
  BandTag a{BandKind::Nir, 0};
  BandTag b{BandKind::Red, 0};

  std::string name() const;
  bool operator==(const IndexSpec&) const = default;
};

IndexSpec ndvi_spec();
// McFeeters NDWI: (GREEN - NIR) / (GREEN + NIR).
IndexSpec ndwi_spec();
IndexSpec custom_index_spec(BandTag a, BandTag b);
// "ndvi" or "ndwi".
IndexSpec parse_index_name(const std::string& name);

struct IndexMap {
  IndexKind kind = IndexKind::Generic;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;  // H x W, each in [-1, 1]

  // 1 x H x W tensor (no gradient).
  Tensor to_tensor(DType dtype = DType::F64) const;
};

// Pointwise (a - b) / (a + b + eps), clamped to [-1, 1]. Bands must share
// extents and be non-negative.
IndexMap normalized_difference(std::span<const double> a_band, std::span<const double> b_band,
                               std::size_t height, std::size_t width, IndexKind kind = IndexKind::Generic);

// Fails with ContractError when the raster lacks one of the two bands.
IndexMap compute_index(const Raster& raster, const IndexSpec& spec);

// Per-pixel affine map from a scalar index to class logits:
// logits[k, p] = weight[k] * index[p] + bias[k]. `index` is 1 x H x W,
// weight and bias hold n_classes elements. Result is n_classes x H x W.
Tensor index_logits(const Tensor& index, const Tensor& weight, const Tensor& bias);
Tensor index_logits(const IndexMap& index, const Tensor& weight, const Tensor& bias);

}  // namespace iswsst
