#include "iswsst/raster.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "iswsst/error.hpp"

namespace iswsst {

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, const char* container)
      : bytes_(bytes), container_(container) {}

  template <typename T>
  T take(const char* what) {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw FormatError(std::string("truncated ") + container_ + " container while reading " + what, pos_);
    }
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  void expect_magic(const char (&magic)[5]) {
    for (int i = 0; i < 4; ++i) {
      std::size_t at = pos_;
      if (take<char>("magic") != magic[i]) {
        throw FormatError(std::string("bad ") + container_ + " magic", at);
      }
    }
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  const char* container_;
  std::size_t pos_ = 0;
};

void put_magic(std::vector<std::uint8_t>& out, const char* magic) { out.insert(out.end(), magic, magic + 4); }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

BandTag parse_band_tag(const std::string& text) {
  std::string t = lower(trim(text));
  if (t == "nir") return {BandKind::Nir, 0};
  if (t == "red") return {BandKind::Red, 0};
  if (t == "green") return {BandKind::Green, 0};
  if (t == "blue") return {BandKind::Blue, 0};
  if (t.rfind("other", 0) == 0) {
    std::string digits = t.substr(5);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit)) {
      throw ContractError("band tag 'other' needs an index, e.g. other0: " + text);
    }
    return {BandKind::Other, static_cast<std::uint16_t>(std::stoul(digits))};
  }
  throw ContractError("unknown band tag: " + text);
}

std::vector<BandTag> parse_band_list(const std::string& csv) {
  std::vector<BandTag> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    auto end = csv.find(',', start);
    if (end == std::string::npos) end = csv.size();
    out.push_back(parse_band_tag(csv.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

std::string band_tag_name(BandTag tag) {
  switch (tag.kind) {
    case BandKind::Nir: return "nir";
    case BandKind::Red: return "red";
    case BandKind::Green: return "green";
    case BandKind::Blue: return "blue";
    case BandKind::Other: return "other" + std::to_string(tag.index);
  }
  return "other";
}

std::vector<BandTag> default_bands() {
  return {{BandKind::Nir, 0}, {BandKind::Red, 0}, {BandKind::Green, 0}, {BandKind::Blue, 0}};
}

std::optional<std::size_t> Raster::find_band(BandKind kind) const {
  for (std::size_t i = 0; i < bands.size(); ++i)
    if (bands[i].kind == kind) return i;
  return std::nullopt;
}

std::vector<double> Raster::plane(std::size_t band) const {
  if (band >= channels()) throw ContractError("band index out of range");
  std::vector<double> out(height * width);
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = data[p * channels() + band];
  return out;
}

Tensor Raster::to_tensor(DType dtype) const {
  const std::size_t c = channels(), hw = height * width;
  std::vector<double> values(c * hw);
  for (std::size_t p = 0; p < hw; ++p)
    for (std::size_t b = 0; b < c; ++b) values[b * hw + p] = data[p * c + b];
  return Tensor::from({c, height, width}, std::move(values), dtype);
}

Raster make_raster(std::size_t height, std::size_t width, std::vector<BandTag> bands,
                   std::vector<float> data) {
  if (height == 0 || width == 0) throw ContractError("raster extents must be positive");
  if (bands.empty()) throw ContractError("raster needs at least one band");
  if (data.size() != height * width * bands.size()) {
    throw ContractError("raster buffer holds " + std::to_string(data.size()) + " samples, expected " +
                        std::to_string(height * width * bands.size()));
  }
  for (float v : data) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw ContractError("raster values must be finite and inside [0, 1]");
    }
  }
  return Raster{height, width, std::move(bands), std::move(data)};
}

LabelMap make_label_map(std::size_t height, std::size_t width, std::uint16_t n_classes,
                        std::vector<std::uint8_t> labels) {
  if (height == 0 || width == 0) throw ContractError("label map extents must be positive");
  if (n_classes == 0 || n_classes > 256) throw ContractError("class count must be in [1, 256]");
  if (labels.size() != height * width) throw ContractError("label buffer size does not match extents");
  for (auto l : labels) {
    if (l >= n_classes) throw ContractError("class id " + std::to_string(l) + " >= class count");
  }
  return LabelMap{height, width, n_classes, std::move(labels)};
}

namespace {

void put_raster_header(std::vector<std::uint8_t>& out, std::size_t height, std::size_t width,
                       const std::vector<BandTag>& bands, unsigned bit_depth) {
  put_magic(out, "MSRS");
  put<std::uint16_t>(out, kRasterVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(height));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(width));
  put<std::uint16_t>(out, static_cast<std::uint16_t>(bands.size()));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(bit_depth));
  for (const auto& b : bands) {
    put<std::uint8_t>(out, static_cast<std::uint8_t>(b.kind));
    put<std::uint16_t>(out, b.index);
  }
}

}  // namespace

std::vector<std::uint8_t> encode_raster(const Raster& raster) {
  std::vector<std::uint8_t> out;
  put_raster_header(out, raster.height, raster.width, raster.bands, 32);
  out.reserve(out.size() + raster.data.size() * 4);
  for (float v : raster.data) put<float>(out, v);
  return out;
}

std::vector<std::uint8_t> encode_raster_integer(std::size_t height, std::size_t width,
                                                const std::vector<BandTag>& bands, unsigned bit_depth,
                                                std::span<const std::uint32_t> samples) {
  if (bit_depth != 8 && bit_depth != 16) throw ContractError("integer bit depth must be 8 or 16");
  if (samples.size() != height * width * bands.size()) {
    throw ContractError("sample count does not match raster extents");
  }
  const std::uint32_t max_value = (1u << bit_depth) - 1;
  std::vector<std::uint8_t> out;
  put_raster_header(out, height, width, bands, bit_depth);
  for (auto s : samples) {
    if (s > max_value) throw ContractError("sample exceeds bit-depth maximum");
    if (bit_depth == 8) {
      put<std::uint8_t>(out, static_cast<std::uint8_t>(s));
    } else {
      put<std::uint16_t>(out, static_cast<std::uint16_t>(s));
    }
  }
  return out;
}

Raster decode_raster(std::span<const std::uint8_t> bytes, const std::vector<BandTag>& band_tags) {
  ByteReader in(bytes, "raster");
  in.expect_magic("MSRS");
  std::size_t at = in.pos();
  auto version = in.take<std::uint16_t>("version");
  if (version != kRasterVersion) throw FormatError("unsupported raster version " + std::to_string(version), at);
  at = in.pos();
  std::size_t height = in.take<std::uint32_t>("height");
  std::size_t width = in.take<std::uint32_t>("width");
  if (height == 0 || width == 0) throw FormatError("zero raster extent", at);
  at = in.pos();
  std::size_t channels = in.take<std::uint16_t>("channels");
  if (channels == 0) throw FormatError("zero band count", at);
  at = in.pos();
  unsigned bit_depth = in.take<std::uint8_t>("bit depth");
  if (bit_depth != 8 && bit_depth != 16 && bit_depth != 32) {
    throw FormatError("unsupported bit depth " + std::to_string(bit_depth), at);
  }
  std::vector<BandTag> bands(channels);
  for (auto& b : bands) {
    at = in.pos();
    auto kind = in.take<std::uint8_t>("band kind");
    if (kind > static_cast<std::uint8_t>(BandKind::Other)) throw FormatError("unknown band kind", at);
    b.kind = static_cast<BandKind>(kind);
    b.index = in.take<std::uint16_t>("band index");
  }
  const std::size_t n = height * width * channels;
  const std::size_t sample_bytes = bit_depth / 8;
  if (in.remaining() < n * sample_bytes) {
    throw FormatError("truncated raster samples: need " + std::to_string(n * sample_bytes) + " bytes, have " +
                          std::to_string(in.remaining()),
                      in.pos());
  }
  std::vector<float> data(n);
  const double scale = bit_depth == 32 ? 1.0 : 1.0 / static_cast<double>((1u << bit_depth) - 1);
  for (std::size_t i = 0; i < n; ++i) {
    at = in.pos();
    if (bit_depth == 8) {
      data[i] = static_cast<float>(in.take<std::uint8_t>("sample") * scale);
    } else if (bit_depth == 16) {
      data[i] = static_cast<float>(in.take<std::uint16_t>("sample") * scale);
    } else {
      float v = in.take<float>("sample");
      if (!std::isfinite(v) || v < 0.0f || v > 1.0f) throw FormatError("float sample outside [0, 1]", at);
      data[i] = v;
    }
  }
  if (in.remaining() != 0) throw FormatError("trailing bytes after raster samples", in.pos());
  if (!band_tags.empty()) {
    if (band_tags.size() != channels) {
      throw ContractError("raster has " + std::to_string(channels) + " bands but " +
                          std::to_string(band_tags.size()) + " tags were given");
    }
    bands = band_tags;
  }
  return Raster{height, width, std::move(bands), std::move(data)};
}

std::vector<std::uint8_t> encode_labels(const LabelMap& labels) {
  std::vector<std::uint8_t> out;
  put_magic(out, "LBLS");
  put<std::uint16_t>(out, kLabelVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(labels.height));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(labels.width));
  put<std::uint16_t>(out, labels.n_classes);
  out.insert(out.end(), labels.labels.begin(), labels.labels.end());
  return out;
}

LabelMap decode_labels(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "label");
  in.expect_magic("LBLS");
  std::size_t at = in.pos();
  auto version = in.take<std::uint16_t>("version");
  if (version != kLabelVersion) throw FormatError("unsupported label version " + std::to_string(version), at);
  at = in.pos();
  std::size_t height = in.take<std::uint32_t>("height");
  std::size_t width = in.take<std::uint32_t>("width");
  if (height == 0 || width == 0) throw FormatError("zero label extent", at);
  at = in.pos();
  auto n_classes = in.take<std::uint16_t>("class count");
  if (n_classes == 0 || n_classes > 256) throw FormatError("class count outside [1, 256]", at);
  if (in.remaining() < height * width) throw FormatError("truncated label samples", in.pos());
  std::vector<std::uint8_t> labels(height * width);
  for (auto& l : labels) {
    at = in.pos();
    l = in.take<std::uint8_t>("label");
    if (l >= n_classes) throw FormatError("class id exceeds class count", at);
  }
  if (in.remaining() != 0) throw FormatError("trailing bytes after labels", in.pos());
  return LabelMap{height, width, n_classes, std::move(labels)};
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void save_raster(const Raster& raster, const std::filesystem::path& path) {
  write_file(path, encode_raster(raster));
}

Raster load_raster(const std::filesystem::path& path, const std::vector<BandTag>& band_tags) {
  return decode_raster(read_file(path), band_tags);
}

void save_labels(const LabelMap& labels, const std::filesystem::path& path) {
  write_file(path, encode_labels(labels));
}

LabelMap load_labels(const std::filesystem::path& path) { return decode_labels(read_file(path)); }

std::vector<std::size_t> tile_offsets(std::size_t extent, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) throw ContractError("tile window and stride must be positive");
  if (stride > window) throw ContractError("tile stride must not exceed the window");
  if (window > extent) {
    throw ContractError("tile window " + std::to_string(window) + " exceeds image extent " +
                        std::to_string(extent));
  }
  std::vector<std::size_t> offsets;
  for (std::size_t o = 0;; o += stride) {
    if (o + window >= extent) {
      offsets.push_back(extent - window);
      break;
    }
    offsets.push_back(o);
  }
  return offsets;
}

Raster crop(const Raster& raster, std::size_t row, std::size_t col, std::size_t height, std::size_t width) {
  if (row + height > raster.height || col + width > raster.width) throw ContractError("crop outside raster");
  const std::size_t c = raster.channels();
  Raster out{height, width, raster.bands, std::vector<float>(height * width * c)};
  for (std::size_t r = 0; r < height; ++r) {
    auto src = raster.data.begin() + static_cast<std::ptrdiff_t>(((row + r) * raster.width + col) * c);
    std::copy(src, src + static_cast<std::ptrdiff_t>(width * c),
              out.data.begin() + static_cast<std::ptrdiff_t>(r * width * c));
  }
  return out;
}

LabelMap crop(const LabelMap& labels, std::size_t row, std::size_t col, std::size_t height, std::size_t width) {
  if (row + height > labels.height || col + width > labels.width) throw ContractError("crop outside label map");
  LabelMap out{height, width, labels.n_classes, std::vector<std::uint8_t>(height * width)};
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t q = 0; q < width; ++q) out.labels[r * width + q] = labels.at(row + r, col + q);
  return out;
}

std::vector<Tile> tile(const Raster& raster, const LabelMap& labels, const TileSpec& spec) {
  if (labels.height != raster.height || labels.width != raster.width) {
    throw ContractError("label extents do not match raster extents");
  }
  auto tiles = tile(raster, spec);
  for (auto& t : tiles) t.labels = crop(labels, t.row, t.col, spec.window, spec.window);
  return tiles;
}

std::vector<Tile> tile(const Raster& raster, const TileSpec& spec) {
  const auto rows = tile_offsets(raster.height, spec.window, spec.stride);
  const auto cols = tile_offsets(raster.width, spec.window, spec.stride);
  std::vector<Tile> tiles;
  tiles.reserve(rows.size() * cols.size());
  for (std::size_t r : rows) {
    for (std::size_t c : cols) {
      tiles.push_back({r, c, crop(raster, r, c, spec.window, spec.window), {}});
    }
  }
  return tiles;
}

Rgb palette_color(std::size_t class_id) {
  // Conventional ISPRS colours for the six land-cover classes.
  static constexpr Rgb kBase[] = {
      {255, 255, 255}, {0, 0, 255}, {0, 255, 255}, {0, 255, 0}, {255, 255, 0}, {255, 0, 0},
  };
  if (class_id < std::size(kBase)) return kBase[class_id];
  auto h = static_cast<std::uint32_t>(class_id) * 2654435761u;
  return {static_cast<std::uint8_t>(h >> 24), static_cast<std::uint8_t>(h >> 16),
          static_cast<std::uint8_t>(h >> 8)};
}

std::vector<std::uint8_t> encode_palette_bmp(const LabelMap& labels) {
  const std::size_t row_bytes = (labels.width + 3) / 4 * 4;
  const std::uint32_t pixel_offset = 14 + 40 + 256 * 4;
  const std::uint32_t image_size = static_cast<std::uint32_t>(row_bytes * labels.height);
  std::vector<std::uint8_t> out;
  out.reserve(pixel_offset + image_size);
  out.push_back('B');
  out.push_back('M');
  put<std::uint32_t>(out, pixel_offset + image_size);
  put<std::uint32_t>(out, 0);
  put<std::uint32_t>(out, pixel_offset);
  put<std::uint32_t>(out, 40);
  put<std::int32_t>(out, static_cast<std::int32_t>(labels.width));
  put<std::int32_t>(out, -static_cast<std::int32_t>(labels.height));  // top-down
  put<std::uint16_t>(out, 1);
  put<std::uint16_t>(out, 8);
  put<std::uint32_t>(out, 0);
  put<std::uint32_t>(out, image_size);
  put<std::int32_t>(out, 2835);
  put<std::int32_t>(out, 2835);
  put<std::uint32_t>(out, 256);
  put<std::uint32_t>(out, 0);
  for (std::size_t i = 0; i < 256; ++i) {
    Rgb c = palette_color(i);
    out.push_back(c[2]);
    out.push_back(c[1]);
    out.push_back(c[0]);
    out.push_back(0);
  }
  for (std::size_t r = 0; r < labels.height; ++r) {
    for (std::size_t q = 0; q < labels.width; ++q) out.push_back(labels.at(r, q));
    for (std::size_t pad = labels.width; pad < row_bytes; ++pad) out.push_back(0);
  }
  return out;
}

void save_prediction(const LabelMap& labels, const std::filesystem::path& path) {
  save_labels(labels, path);
  auto preview = path;
  preview.replace_extension(".bmp");
  write_file(preview, encode_palette_bmp(labels));
}

}  // namespace iswsst
