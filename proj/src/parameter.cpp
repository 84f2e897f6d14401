#include "iswsst/parameter.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "iswsst/error.hpp"

namespace iswsst {

Tensor& ParameterSet::add(std::string name, Tensor init) {
  if (contains(name)) throw ContractError("duplicate parameter name: " + name);
  Tensor leaf = init.detach();
  leaf.set_requires_grad(true);
  items_.push_back({std::move(name), std::move(leaf)});
  return items_.back().tensor;
}

Tensor& ParameterSet::get(const std::string& name) {
  for (auto& p : items_)
    if (p.name == name) return p.tensor;
  throw ContractError("unknown parameter: " + name);
}

const Tensor& ParameterSet::get(const std::string& name) const {
  for (const auto& p : items_)
    if (p.name == name) return p.tensor;
  throw ContractError("unknown parameter: " + name);
}

bool ParameterSet::contains(const std::string& name) const {
  return std::any_of(items_.begin(), items_.end(), [&](const Parameter& p) { return p.name == name; });
}

std::size_t ParameterSet::total_elements() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.tensor.numel();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : items_) p.tensor.zero_grad();
}

namespace {

constexpr char kMagic[4] = {'I', 'S', 'W', 'T'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T take(const char* what) {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw FormatError(std::string("truncated checkpoint while reading ") + what, pos_);
    }
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string take_string(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw FormatError("truncated checkpoint while reading name", pos_);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const std::vector<Parameter>& params) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put<std::uint16_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    if (p.name.size() > 0xFFFF) throw ContractError("parameter name too long: " + p.name);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(p.name.size()));
    out.insert(out.end(), p.name.begin(), p.name.end());
    const auto& shape = p.tensor.shape();
    put<std::uint8_t>(out, static_cast<std::uint8_t>(shape.size()));
    for (std::size_t e : shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(e));
    for (double v : p.tensor.values()) put<double>(out, v);
  }
  return out;
}

std::vector<Parameter> decode_checkpoint(std::span<const std::uint8_t> bytes, DType dtype) {
  Reader in(bytes);
  for (char m : kMagic) {
    std::size_t at = in.pos();
    if (in.take<char>("magic") != m) throw FormatError("bad checkpoint magic", at);
  }
  std::size_t at = in.pos();
  auto version = in.take<std::uint16_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), at);
  }
  auto count = in.take<std::uint32_t>("count");
  std::vector<Parameter> params;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name_len = in.take<std::uint16_t>("name length");
    std::string name = in.take_string(name_len);
    at = in.pos();
    auto rank = in.take<std::uint8_t>("rank");
    if (rank == 0) throw FormatError("zero-rank entry " + name, at);
    Shape shape;
    for (std::uint8_t r = 0; r < rank; ++r) {
      at = in.pos();
      auto e = in.take<std::uint32_t>("extent");
      if (e == 0) throw FormatError("zero extent in entry " + name, at);
      shape.push_back(e);
    }
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) v = in.take<double>("elements");
    params.push_back({std::move(name), Tensor::from(std::move(shape), std::move(values), dtype)});
  }
  if (!in.done()) throw FormatError("trailing bytes after checkpoint", in.pos());
  return params;
}

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path) {
  auto bytes = encode_checkpoint(params.items());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<Parameter> read_checkpoint(const std::filesystem::path& path, DType dtype) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, dtype);
}

void load_checkpoint(ParameterSet& params, const std::filesystem::path& path) {
  auto stored = read_checkpoint(path);
  if (stored.size() != params.size()) {
    throw ContractError("checkpoint holds " + std::to_string(stored.size()) + " parameters, model has " +
                        std::to_string(params.size()));
  }
  for (const auto& entry : stored) {
    Tensor& target = params.get(entry.name);
    if (target.shape() != entry.tensor.shape()) {
      throw DimensionError("checkpoint entry " + entry.name + " has shape " +
                           shape_str(entry.tensor.shape()) + ", model expects " +
                           shape_str(target.shape()));
    }
    auto dst = target.mutable_values();
    auto src = entry.tensor.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = target.dtype() == DType::F32 ? static_cast<double>(static_cast<float>(src[i])) : src[i];
    }
  }
}

Tensor uniform_tensor(Shape shape, double bound, Rng& rng, DType dtype) {
  std::vector<double> values(shape_numel(shape));
  for (double& v : values) v = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(values), dtype);
}

Tensor fan_in_uniform(Shape shape, std::size_t fan_in, Rng& rng, DType dtype) {
  return uniform_tensor(std::move(shape), 1.0 / std::sqrt(static_cast<double>(fan_in)), rng, dtype);
}

Tensor identity_matrix(std::size_t n, DType dtype) {
  std::vector<double> values(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) values[i * n + i] = 1.0;
  return Tensor::from({n, n}, std::move(values), dtype);
}

}  // namespace iswsst
