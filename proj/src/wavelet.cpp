#include "iswsst/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iswsst/error.hpp"
#include "iswsst/ops.hpp"

namespace iswsst {

const HaarFilters& haar_filters() {
  static const HaarFilters filters = [] {
    const double r = 1.0 / std::sqrt(2.0);
    return HaarFilters{{r, r}, {r, -r}, {r, r}, {r, -r}};
  }();
  return filters;
}

namespace {

using Pair = std::array<double, 2>;

// Subband order in packed buffers: ll, lh, hl, hh.
std::array<std::pair<const Pair*, const Pair*>, 4> analysis_bank() {
  const auto& f = haar_filters();
  return {{{&f.h, &f.h}, {&f.h, &f.g}, {&f.g, &f.h}, {&f.g, &f.g}}};
}

std::array<std::pair<const Pair*, const Pair*>, 4> synthesis_bank() {
  const auto& f = haar_filters();
  return {{{&f.h_synth, &f.h_synth}, {&f.h_synth, &f.g_synth}, {&f.g_synth, &f.h_synth}, {&f.g_synth, &f.g_synth}}};
}

// band[n1, n2] = sum_{k1, k2} row[k1] col[k2] x[2 n1 + k1, 2 n2 + k2]
void analyze(std::span<const double> x, std::size_t channels, std::size_t height, std::size_t width,
             const std::array<std::pair<const Pair*, const Pair*>, 4>& bank, std::array<double*, 4> bands) {
  const std::size_t oh = height / 2, ow = width / 2;
  for (std::size_t b = 0; b < 4; ++b) {
    const Pair& fr = *bank[b].first;
    const Pair& fc = *bank[b].second;
    double* out = bands[b];
    for (std::size_t c = 0; c < channels; ++c) {
      const double* src = x.data() + c * height * width;
      for (std::size_t n1 = 0; n1 < oh; ++n1) {
        for (std::size_t n2 = 0; n2 < ow; ++n2) {
          double acc = 0.0;
          for (std::size_t k1 = 0; k1 < 2; ++k1)
            for (std::size_t k2 = 0; k2 < 2; ++k2)
              acc += fr[k1] * fc[k2] * src[(2 * n1 + k1) * width + 2 * n2 + k2];
          out[(c * oh + n1) * ow + n2] += acc;
        }
      }
    }
  }
}

// x[2 n1 + k1, 2 n2 + k2] += sum_bands row[k1] col[k2] band[n1, n2]
void synthesize(std::array<const double*, 4> bands, std::size_t channels, std::size_t oh, std::size_t ow,
                const std::array<std::pair<const Pair*, const Pair*>, 4>& bank, std::span<double> x) {
  const std::size_t height = oh * 2, width = ow * 2;
  for (std::size_t b = 0; b < 4; ++b) {
    if (bands[b] == nullptr) continue;
    const Pair& fr = *bank[b].first;
    const Pair& fc = *bank[b].second;
    for (std::size_t c = 0; c < channels; ++c) {
      double* dst = x.data() + c * height * width;
      for (std::size_t n1 = 0; n1 < oh; ++n1) {
        for (std::size_t n2 = 0; n2 < ow; ++n2) {
          const double v = bands[b][(c * oh + n1) * ow + n2];
          for (std::size_t k1 = 0; k1 < 2; ++k1)
            for (std::size_t k2 = 0; k2 < 2; ++k2) dst[(2 * n1 + k1) * width + 2 * n2 + k2] += fr[k1] * fc[k2] * v;
        }
      }
    }
  }
}

void require_chw(const Tensor& x, const char* op) {
  if (x.rank() != 3) throw DimensionError(std::string(op) + " expects C x H x W, got " + shape_str(x.shape()));
}

// Leading-axis slice of a [4 x C x h x w] buffer as its own op.
Tensor take_band(const Tensor& packed, std::size_t band) {
  const std::size_t c = packed.dim(1), h = packed.dim(2), w = packed.dim(3);
  const std::size_t n = c * h * w;
  auto src = packed.values().subspan(band * n, n);
  return record_op("haar_band", {c, h, w}, packed.dtype(), std::vector<double>(src.begin(), src.end()), {packed},
                   [band, n](std::span<const double> g, std::span<const std::span<double>> gin) {
                     for (std::size_t i = 0; i < n; ++i) gin[0][band * n + i] += g[i];
                   });
}

void matmul_into(const double* a, const double* b, double* out, std::size_t n, bool transpose_a, bool transpose_b) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double av = transpose_a ? a[k * n + i] : a[i * n + k];
        const double bv = transpose_b ? b[j * n + k] : b[k * n + j];
        acc += av * bv;
      }
      out[i * n + j] = acc;
    }
  }
}

void require_square_even(const Tensor& x, const char* op) {
  require_chw(x, op);
  if (x.dim(1) != x.dim(2)) {
    throw ContractError(std::string(op) + " requires square spatial extents, got " + shape_str(x.shape()));
  }
  if (x.dim(1) % 2 != 0) throw ContractError(std::string(op) + " requires even extents, got " + shape_str(x.shape()));
}

}  // namespace

WaveletLevel dwt2(const Tensor& x) {
  require_chw(x, "dwt2");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ContractError("dwt2 requires even spatial extents (enable reflect padding for odd inputs), got " +
                        shape_str(x.shape()));
  }
  const std::size_t n = c * (h / 2) * (w / 2);
  std::vector<double> packed(4 * n, 0.0);
  analyze(x.values(), c, h, w, analysis_bank(), {packed.data(), packed.data() + n, packed.data() + 2 * n, packed.data() + 3 * n});
  Tensor all = record_op("dwt2", {4, c, h / 2, w / 2}, x.dtype(), std::move(packed), {x},
                         [c, h, w, n](std::span<const double> g, std::span<const std::span<double>> gin) {
                           // Adjoint of the analysis operator.
                           synthesize({g.data(), g.data() + n, g.data() + 2 * n, g.data() + 3 * n}, c, h / 2, w / 2,
                                      analysis_bank(), gin[0]);
                         });
  return {take_band(all, 0), take_band(all, 1), take_band(all, 2), take_band(all, 3)};
}

Tensor idwt2(const Tensor& ll, const Tensor& lh, const Tensor& hl, const Tensor& hh) {
  require_chw(ll, "idwt2");
  for (const Tensor* t : {&lh, &hl, &hh}) {
    if (t->shape() != ll.shape()) {
      throw ContractError("idwt2 subband extents differ: " + shape_str(ll.shape()) + " vs " + shape_str(t->shape()));
    }
  }
  const std::size_t c = ll.dim(0), oh = ll.dim(1), ow = ll.dim(2);
  std::vector<double> out(c * oh * ow * 4, 0.0);
  synthesize({ll.values().data(), lh.values().data(), hl.values().data(), hh.values().data()}, c, oh, ow,
             synthesis_bank(), out);
  DType dtype = promote(promote(ll.dtype(), lh.dtype()), promote(hl.dtype(), hh.dtype()));
  return record_op("idwt2", {c, oh * 2, ow * 2}, dtype, std::move(out), {ll, lh, hl, hh},
                   [c, oh, ow](std::span<const double> g, std::span<const std::span<double>> gin) {
                     const std::size_t n = c * oh * ow;
                     std::vector<double> bands(4 * n, 0.0);
                     analyze(g, c, oh * 2, ow * 2, synthesis_bank(),
                             {bands.data(), bands.data() + n, bands.data() + 2 * n, bands.data() + 3 * n});
                     for (std::size_t b = 0; b < 4; ++b) {
                       if (gin[b].empty()) continue;
                       for (std::size_t i = 0; i < n; ++i) gin[b][i] += bands[b * n + i];
                     }
                   });
}

Tensor idwt2(const WaveletLevel& level) { return idwt2(level.ll, level.lh, level.hl, level.hh); }

HaarMatrix::HaarMatrix(std::size_t n) : n_(n), m_(n * n, 0.0) {
  if (n == 0 || n % 2 != 0) throw ContractError("Haar matrix size must be even and positive");
  const auto& f = haar_filters();
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < half; ++i) {
    m_[i * n + 2 * i] = f.h[0];
    m_[i * n + 2 * i + 1] = f.h[1];
    m_[(half + i) * n + 2 * i] = f.g[0];
    m_[(half + i) * n + 2 * i + 1] = f.g[1];
  }
}

Tensor dwt2_matrix_packed(const Tensor& x) {
  require_square_even(x, "dwt2_matrix");
  const std::size_t c = x.dim(0), n = x.dim(1);
  HaarMatrix hm(n);
  std::vector<double> out(c * n * n), tmp(n * n);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* a = x.values().data() + ch * n * n;
    matmul_into(hm.data().data(), a, tmp.data(), n, false, false);                 // H A
    matmul_into(tmp.data(), hm.data().data(), out.data() + ch * n * n, n, false, true);  // (H A) H^T
  }
  return Tensor::from({c, n, n}, std::move(out), x.dtype());
}

Tensor idwt2_matrix_packed(const Tensor& packed) {
  require_square_even(packed, "idwt2_matrix");
  const std::size_t c = packed.dim(0), n = packed.dim(1);
  HaarMatrix hm(n);
  std::vector<double> out(c * n * n), tmp(n * n);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* b = packed.values().data() + ch * n * n;
    matmul_into(hm.data().data(), b, tmp.data(), n, true, false);                  // H^T B
    matmul_into(tmp.data(), hm.data().data(), out.data() + ch * n * n, n, false, false);  // (H^T B) H
  }
  return Tensor::from({c, n, n}, std::move(out), packed.dtype());
}

WaveletLevel unpack_quadrants(const Tensor& packed) {
  require_chw(packed, "unpack_quadrants");
  const std::size_t c = packed.dim(0), h = packed.dim(1), w = packed.dim(2);
  if (h % 2 != 0 || w % 2 != 0) throw ContractError("packed quadrant image needs even extents");
  const std::size_t oh = h / 2, ow = w / 2;
  std::array<std::vector<double>, 4> bands;
  for (auto& b : bands) b.resize(c * oh * ow);
  auto v = packed.values();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t q = 0; q < w; ++q) {
        const std::size_t band = (r >= oh ? 2 : 0) + (q >= ow ? 1 : 0);
        bands[band][(ch * oh + r % oh) * ow + q % ow] = v[(ch * h + r) * w + q];
      }
  return {Tensor::from({c, oh, ow}, std::move(bands[0]), packed.dtype()),
          Tensor::from({c, oh, ow}, std::move(bands[1]), packed.dtype()),
          Tensor::from({c, oh, ow}, std::move(bands[2]), packed.dtype()),
          Tensor::from({c, oh, ow}, std::move(bands[3]), packed.dtype())};
}

Tensor pack_quadrants(const WaveletLevel& level) {
  require_chw(level.ll, "pack_quadrants");
  const std::size_t c = level.ll.dim(0), oh = level.ll.dim(1), ow = level.ll.dim(2);
  const std::array<const Tensor*, 4> bands{&level.ll, &level.lh, &level.hl, &level.hh};
  for (const Tensor* t : bands) {
    if (t->shape() != level.ll.shape()) throw ContractError("subband extents differ");
  }
  const std::size_t h = oh * 2, w = ow * 2;
  std::vector<double> out(c * h * w);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t q = 0; q < w; ++q) {
        const std::size_t band = (r >= oh ? 2 : 0) + (q >= ow ? 1 : 0);
        out[(ch * h + r) * w + q] = bands[band]->values()[(ch * oh + r % oh) * ow + q % ow];
      }
  return Tensor::from({c, h, w}, std::move(out), level.ll.dtype());
}

WaveletLevel dwt2_matrix(const Tensor& x) { return unpack_quadrants(dwt2_matrix_packed(x)); }

Tensor idwt2_matrix(const WaveletLevel& level) { return idwt2_matrix_packed(pack_quadrants(level)); }

Tensor pad_reflect_even(const Tensor& x, LevelPadding& applied) {
  require_chw(x, "pad_reflect_even");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  applied = {h % 2 != 0, w % 2 != 0};
  if (!applied.rows && !applied.cols) return x;
  const std::size_t ph = h + (applied.rows ? 1 : 0), pw = w + (applied.cols ? 1 : 0);
  auto src_index = [=](std::size_t ch, std::size_t r, std::size_t q) {
    return (ch * h + std::min(r, h - 1)) * w + std::min(q, w - 1);
  };
  std::vector<double> out(c * ph * pw);
  auto v = x.values();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t r = 0; r < ph; ++r)
      for (std::size_t q = 0; q < pw; ++q) out[(ch * ph + r) * pw + q] = v[src_index(ch, r, q)];
  return record_op("pad_reflect", {c, ph, pw}, x.dtype(), std::move(out), {x},
                   [=](std::span<const double> g, std::span<const std::span<double>> gin) {
                     for (std::size_t ch = 0; ch < c; ++ch)
                       for (std::size_t r = 0; r < ph; ++r)
                         for (std::size_t q = 0; q < pw; ++q) gin[0][src_index(ch, r, q)] += g[(ch * ph + r) * pw + q];
                   });
}

Tensor crop_spatial(const Tensor& x, std::size_t height, std::size_t width) {
  require_chw(x, "crop_spatial");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (height > h || width > w) throw ContractError("crop larger than tensor " + shape_str(x.shape()));
  if (height == h && width == w) return x;
  std::vector<double> out(c * height * width);
  auto v = x.values();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t r = 0; r < height; ++r)
      for (std::size_t q = 0; q < width; ++q) out[(ch * height + r) * width + q] = v[(ch * h + r) * w + q];
  return record_op("crop_spatial", {c, height, width}, x.dtype(), std::move(out), {x},
                   [=](std::span<const double> g, std::span<const std::span<double>> gin) {
                     for (std::size_t ch = 0; ch < c; ++ch)
                       for (std::size_t r = 0; r < height; ++r)
                         for (std::size_t q = 0; q < width; ++q)
                           gin[0][(ch * h + r) * w + q] += g[(ch * height + r) * width + q];
                   });
}

WaveletPyramid encode_pyramid(const Tensor& x, std::size_t levels, PadMode pad) {
  require_chw(x, "encode_pyramid");
  if (levels == 0) throw ContractError("pyramid needs at least one level");
  WaveletPyramid pyramid;
  pyramid.height = x.dim(1);
  pyramid.width = x.dim(2);
  Tensor current = x;
  for (std::size_t l = 0; l < levels; ++l) {
    LevelPadding applied;
    if (current.dim(1) % 2 != 0 || current.dim(2) % 2 != 0) {
      if (pad == PadMode::None) {
        throw ContractError("extents " + shape_str(x.shape()) + " are not divisible by 2^" + std::to_string(levels) +
                            " (set lwped.pad = reflect to pad odd levels)");
      }
      current = pad_reflect_even(current, applied);
    }
    pyramid.levels.push_back(dwt2(current));
    pyramid.padding.push_back(applied);
    current = pyramid.levels.back().ll;
  }
  return pyramid;
}

Tensor decode_pyramid(const WaveletPyramid& pyramid, const Tensor& processed_ll) {
  if (pyramid.levels.empty()) throw ContractError("empty pyramid");
  const Shape& expect = pyramid.levels.back().lh.shape();
  if (processed_ll.rank() != 3 || processed_ll.dim(0) != expect[0] || processed_ll.dim(1) != expect[1] ||
      processed_ll.dim(2) != expect[2]) {
    throw ContractError("processed coarse component " + shape_str(processed_ll.shape()) +
                        " does not match pyramid subbands " + shape_str(expect));
  }
  Tensor current = processed_ll;
  for (std::size_t l = pyramid.levels.size(); l-- > 0;) {
    const auto& level = pyramid.levels[l];
    current = idwt2(current, level.lh, level.hl, level.hh);
    const auto& pad = pyramid.padding[l];
    if (pad.rows || pad.cols) {
      current = crop_spatial(current, current.dim(1) - (pad.rows ? 1 : 0), current.dim(2) - (pad.cols ? 1 : 0));
    }
  }
  return current;
}

}  // namespace iswsst
