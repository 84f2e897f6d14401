#include "iswsst/synth.hpp"

#include <algorithm>
#include <cstdio>

#include "iswsst/error.hpp"
#include "iswsst/parameter.hpp"

namespace iswsst {

const std::array<std::array<double, 4>, kSynthClasses>& class_signatures() {
  static const std::array<std::array<double, 4>, kSynthClasses> table = {{
      {0.45, 0.45, 0.45, 0.45},  // impervious surface
      {0.70, 0.65, 0.62, 0.60},  // building
      {0.60, 0.15, 0.35, 0.12},  // low vegetation
      {0.80, 0.08, 0.22, 0.06},  // tree
      {0.20, 0.55, 0.12, 0.15},  // car
      {0.05, 0.10, 0.15, 0.30},  // clutter / water
  }};
  return table;
}

const char* synth_class_name(std::size_t id) {
  static const char* names[] = {"impervious", "building", "low_vegetation", "tree", "car", "clutter"};
  return id < kSynthClasses ? names[id] : "unknown";
}

namespace {

void paint_rect(std::vector<std::uint8_t>& labels, std::size_t size, std::size_t r0, std::size_t c0, std::size_t h,
                std::size_t w, std::uint8_t cls) {
  for (std::size_t r = r0; r < std::min(size, r0 + h); ++r)
    for (std::size_t c = c0; c < std::min(size, c0 + w); ++c) labels[r * size + c] = cls;
}

void paint_disk(std::vector<std::uint8_t>& labels, std::size_t size, double cr, double cc, double radius,
                std::uint8_t cls) {
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      const double dr = static_cast<double>(r) + 0.5 - cr, dc = static_cast<double>(c) + 0.5 - cc;
      if (dr * dr + dc * dc <= radius * radius) labels[r * size + c] = cls;
    }
  }
}

Sample make_sample(Rng& rng, std::size_t size, const SynthOptions& opt) {
  const std::size_t k = opt.n_classes;
  std::vector<std::uint8_t> labels(size * size, 0);
  const auto pick_class = [&] { return static_cast<std::uint8_t>(1 + rng.index(k - 1)); };

  if (opt.boundary_dense) {
    const std::size_t shapes = size * size / 12;
    for (std::size_t s = 0; s < shapes; ++s) {
      const std::size_t h = 1 + rng.index(4), w = 1 + rng.index(4);
      paint_rect(labels, size, rng.index(size), rng.index(size), h, w, pick_class());
    }
  } else {
    const std::size_t shapes = 4 + size / 4;
    const std::size_t lo = std::max<std::size_t>(2, size / 10), hi = std::max(lo + 1, size / 4);
    for (std::size_t s = 0; s < shapes; ++s) {
      const std::uint8_t cls = pick_class();
      if (rng.index(2) == 0) {
        const std::size_t h = lo + rng.index(hi - lo + 1), w = lo + rng.index(hi - lo + 1);
        paint_rect(labels, size, rng.index(size), rng.index(size), h, w, cls);
      } else {
        const double radius = rng.uniform(static_cast<double>(lo) / 2.0, static_cast<double>(hi) / 2.0 + 1.0);
        paint_disk(labels, size, rng.uniform(0.0, static_cast<double>(size)),
                   rng.uniform(0.0, static_cast<double>(size)), radius, cls);
      }
    }
  }

  // Guarantee full class coverage with small patches.
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<bool> present(k, false);
    for (auto l : labels) present[l] = true;
    auto missing = std::find(present.begin(), present.end(), false);
    if (missing == present.end()) break;
    const auto cls = static_cast<std::uint8_t>(missing - present.begin());
    paint_rect(labels, size, rng.index(size - 2), rng.index(size - 2), 3, 3, cls);
  }

  const auto& sig = class_signatures();
  std::vector<float> data(size * size * 4);
  for (std::size_t p = 0; p < size * size; ++p) {
    for (std::size_t b = 0; b < 4; ++b) {
      const double v = sig[labels[p]][b] + rng.normal(0.0, opt.noise);
      data[p * 4 + b] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return {make_raster(size, size, default_bands(), std::move(data)),
          make_label_map(size, size, static_cast<std::uint16_t>(k), std::move(labels))};
}

}  // namespace

std::vector<Sample> synth_dataset(std::uint64_t seed, std::size_t n, std::size_t size, const SynthOptions& options) {
  if (size < 16 || size % 2 != 0) throw ContractError("synthetic tiles must be even and at least 16 pixels");
  if (options.n_classes < 2 || options.n_classes > kSynthClasses) {
    throw ContractError("synthetic data supports 2 to " + std::to_string(kSynthClasses) + " classes");
  }
  if (!(options.noise >= 0.0)) throw ContractError("noise level must be non-negative");
  Rng rng(seed);
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_sample(rng, size, options));
  return out;
}

void save_dataset(const std::vector<Sample>& samples, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "sample_%03zu", i);
    save_raster(samples[i].raster, dir / (std::string(stem) + ".msrs"));
    save_labels(samples[i].labels, dir / (std::string(stem) + ".lbls"));
  }
}

std::vector<Sample> load_dataset(const std::filesystem::path& dir, const std::vector<BandTag>& bands) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("dataset directory not found: " + dir.string());
  std::vector<std::filesystem::path> rasters;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".msrs") rasters.push_back(entry.path());
  }
  std::sort(rasters.begin(), rasters.end());
  if (rasters.empty()) throw IoError("no .msrs rasters in " + dir.string());
  std::vector<Sample> out;
  for (const auto& path : rasters) {
    auto label_path = path;
    label_path.replace_extension(".lbls");
    Sample s{load_raster(path, bands), load_labels(label_path)};
    if (s.labels.height != s.raster.height || s.labels.width != s.raster.width) {
      throw ContractError("labels " + label_path.string() + " do not match raster extents");
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace iswsst
