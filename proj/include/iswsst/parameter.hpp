#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "iswsst/tensor.hpp"

namespace iswsst {

struct Parameter {
  std::string name;
  Tensor tensor;
};

// Ordered, name-unique collection of learnable tensors owned by one model.
class ParameterSet {
 public:
  // Registers a new leaf with requires_grad on. Throws ContractError when
  // the name is already taken.
  Tensor& add(std::string name, Tensor init);

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Parameter>& items() { return items_; }
  const std::vector<Parameter>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  std::size_t total_elements() const;

  void zero_grad();

 private:
  std::vector<Parameter> items_;
};

// Checkpoint container: "ISWT", u16 version, u32 count, then per entry
// u16 name length, UTF-8 name, u8 rank, u32 extents, f64 elements. All
// integers and floats little-endian.
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const std::vector<Parameter>& params);
std::vector<Parameter> decode_checkpoint(std::span<const std::uint8_t> bytes, DType dtype = DType::F64);

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path);
std::vector<Parameter> read_checkpoint(const std::filesystem::path& path, DType dtype = DType::F64);
// Copies stored values into a model's parameters. Names and shapes must
// match one-to-one.
void load_checkpoint(ParameterSet& params, const std::filesystem::path& path);

// Seeded generator shared by initializers and data synthesis.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

Tensor uniform_tensor(Shape shape, double bound, Rng& rng, DType dtype = DType::F64);
// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor fan_in_uniform(Shape shape, std::size_t fan_in, Rng& rng, DType dtype = DType::F64);
Tensor identity_matrix(std::size_t n, DType dtype = DType::F64);

}  // namespace iswsst
