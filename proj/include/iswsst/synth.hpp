#pragma once

// Procedural 4-band (NIR, red, green, blue) scenes with per-class spectral
// signatures: vegetation classes have NIR well above red, the dark class
// has low NIR, built surfaces have a flat spectrum.

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "iswsst/raster.hpp"

namespace iswsst {

inline constexpr std::size_t kSynthClasses = 6;

struct Sample {
  Raster raster;
  LabelMap labels;
};

struct SynthOptions {
  std::size_t n_classes = kSynthClasses;
  // Many small shapes, so most pixels sit near a class boundary.
  bool boundary_dense = false;
  double noise = 0.02;
};

// Reflectance per class in band order NIR, red, green, blue.
const std::array<std::array<double, 4>, kSynthClasses>& class_signatures();
const char* synth_class_name(std::size_t id);

// size must be even and at least 16; every class appears in every sample.
std::vector<Sample> synth_dataset(std::uint64_t seed, std::size_t n, std::size_t size,
                                  const SynthOptions& options = {});

// Writes sample_NNN.msrs / sample_NNN.lbls pairs.
void save_dataset(const std::vector<Sample>& samples, const std::filesystem::path& dir);
// Loads every *.msrs file with a matching *.lbls, in file-name order.
std::vector<Sample> load_dataset(const std::filesystem::path& dir, const std::vector<BandTag>& bands = {});

}  // namespace iswsst
