#pragma once

// Lossless wavelet pyramid: separable 2D Haar analysis/synthesis in filter
// form and in matrix form, and a multi-level encoder/decoder whose detail
// subbands act as exact skip connections.
//
// Subband naming follows the filter applied along (rows, columns):
//   ll = (h, h), lh = (h, g), hl = (g, h), hh = (g, g).
// Analysis pairs samples (2n, 2n + 1) along each axis:
//   low  = (x[2n] + x[2n+1]) / sqrt(2),  high = (x[2n] - x[2n+1]) / sqrt(2).

#include <array>
#include <cstddef>
#include <vector>

#include "iswsst/tensor.hpp"

namespace iswsst {

struct HaarFilters {
  std::array<double, 2> h;        // analysis low-pass
  std::array<double, 2> g;        // analysis high-pass
  std::array<double, 2> h_synth;  // synthesis low-pass
  std::array<double, 2> g_synth;  // synthesis high-pass
};

const HaarFilters& haar_filters();

struct WaveletLevel {
  Tensor ll;
  Tensor lh;
  Tensor hl;
  Tensor hh;
};

enum class PadMode { None, Reflect };

struct LevelPadding {
  bool rows = false;
  bool cols = false;
};

struct WaveletPyramid {
  std::vector<WaveletLevel> levels;  // fine -> coarse
  std::vector<LevelPadding> padding;  // one per level
  std::size_t height = 0;
  std::size_t width = 0;

  const Tensor& coarsest() const { return levels.back().ll; }
};

// One analysis level of a C x H x W tensor; H and W must be even.
// Differentiable.
WaveletLevel dwt2(const Tensor& x);
// Exact inverse of dwt2. Differentiable.
Tensor idwt2(const WaveletLevel& level);
Tensor idwt2(const Tensor& ll, const Tensor& lh, const Tensor& hl, const Tensor& hh);

// Orthogonal N x N Haar matrix (N even): rows [0, N/2) carry h at columns
// (2i, 2i + 1), rows [N/2, N) carry g at the same columns.
class HaarMatrix {
 public:
  explicit HaarMatrix(std::size_t n);

  std::size_t size() const { return n_; }
  double operator()(std::size_t r, std::size_t c) const { return m_[r * n_ + c]; }
  const std::vector<double>& data() const { return m_; }

 private:
  std::size_t n_;
  std::vector<double> m_;
};

// B = H A H^T per channel on square C x N x N input, returned in the
// packed quadrant layout [[ll, lh], [hl, hh]] (C x N x N, no gradient).
Tensor dwt2_matrix_packed(const Tensor& x);
// A = H^T B H per channel on a packed C x N x N tensor.
Tensor idwt2_matrix_packed(const Tensor& packed);

// Layout permutation between the packed quadrant image and four subbands.
WaveletLevel unpack_quadrants(const Tensor& packed);
Tensor pack_quadrants(const WaveletLevel& level);

// Matrix-form twins of dwt2/idwt2 with subband outputs.
WaveletLevel dwt2_matrix(const Tensor& x);
Tensor idwt2_matrix(const WaveletLevel& level);

// Repeats the last row and/or column so both spatial extents are even.
Tensor pad_reflect_even(const Tensor& x, LevelPadding& applied);
// Keeps the top-left height x width window of a C x H x W tensor.
Tensor crop_spatial(const Tensor& x, std::size_t height, std::size_t width);

WaveletPyramid encode_pyramid(const Tensor& x, std::size_t levels, PadMode pad = PadMode::None);
// Runs synthesis from `processed_ll` (same shape as the coarsest subbands)
// through every stored detail level, cropping away recorded padding.
Tensor decode_pyramid(const WaveletPyramid& pyramid, const Tensor& processed_ll);

}  // namespace iswsst
