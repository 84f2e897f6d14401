#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "iswsst/error.hpp"
#include "iswsst/parameter.hpp"
#include "iswsst/raster.hpp"

using namespace iswsst;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "iswsst_raster_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Raster random_raster(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> data(h * w * c);
  for (auto& v : data) v = static_cast<float>(rng.uniform(0.0, 1.0));
  std::vector<BandTag> bands = default_bands();
  bands.resize(c, BandTag{BandKind::Other, 7});
  return make_raster(h, w, bands, data);
}

LabelMap random_labels(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> labels(h * w);
  for (auto& v : labels) v = static_cast<std::uint8_t>(rng.index(6));
  return make_label_map(h, w, 6, labels);
}

}  // namespace

TEST(RasterIo, EightBitSamplesAreNormalized) {
  const std::vector<std::uint32_t> samples{0, 255, 128, 64};
  const auto bytes = encode_raster_integer(2, 2, {BandTag{BandKind::Red, 0}}, 8, samples);
  const Raster r = decode_raster(bytes);
  ASSERT_EQ(r.data.size(), 4u);
  EXPECT_EQ(r.data[0], 0.0f);
  EXPECT_EQ(r.data[1], 1.0f);
  EXPECT_EQ(r.data[2], static_cast<float>(128.0 / 255.0));
  EXPECT_EQ(r.data[3], static_cast<float>(64.0 / 255.0));
}

TEST(RasterIo, SixteenBitSamplesAreNormalized) {
  const std::vector<std::uint32_t> samples{65535, 0, 1000, 32768};
  const Raster r = decode_raster(encode_raster_integer(1, 4, {BandTag{BandKind::Nir, 0}}, 16, samples));
  EXPECT_EQ(r.data[0], 1.0f);
  EXPECT_EQ(r.data[2], static_cast<float>(1000.0 / 65535.0));
}

TEST(RasterIo, EmptyInputIsFormatError) {
  EXPECT_THROW(decode_raster(std::span<const std::uint8_t>{}), FormatError);
  EXPECT_THROW(decode_labels(std::span<const std::uint8_t>{}), FormatError);
}

TEST(RasterIo, BadMagicAndTruncationReportOffsets) {
  auto bytes = encode_raster(random_raster(3, 3, 4, 1));
  auto bad = bytes;
  bad[1] = 'Z';
  try {
    decode_raster(bad);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 1u);
  }
  try {
    decode_raster(std::span(bytes.data(), bytes.size() - 1));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_GT(e.offset(), 0u);
  }
}

TEST(RasterIo, TagCountMismatchIsContractError) {
  const auto bytes = encode_raster(random_raster(2, 2, 4, 2));
  EXPECT_THROW(decode_raster(bytes, parse_band_list("nir,red")), ContractError);
  const Raster r = decode_raster(bytes, parse_band_list("blue,green,red,nir"));
  EXPECT_EQ(r.bands[0].kind, BandKind::Blue);
}

TEST(RasterIo, RasterRoundTripIsBitExact) {
  const Raster r = random_raster(5, 7, 4, 3);
  const auto path = scratch("roundtrip.msrs");
  save_raster(r, path);
  const Raster back = load_raster(path);
  EXPECT_EQ(back, r);
  EXPECT_EQ(encode_raster(back), read_file(path));
}

TEST(RasterIo, LabelRoundTripIsBitExact) {
  const LabelMap l = random_labels(9, 4, 4);
  const auto path = scratch("roundtrip.lbls");
  save_labels(l, path);
  EXPECT_EQ(load_labels(path), l);
}

TEST(RasterIo, MissingFileIsIoError) {
  EXPECT_THROW(load_raster(scratch("does_not_exist.msrs")), IoError);
}

TEST(RasterIo, UnwritablePathIsIoError) {
  EXPECT_THROW(save_prediction(random_labels(2, 2, 1), "/nonexistent_dir/x/y.lbls"), IoError);
}

TEST(RasterIo, InvariantsAreEnforced) {
  EXPECT_THROW(make_raster(2, 2, default_bands(), std::vector<float>(15, 0.5f)), ContractError);
  EXPECT_THROW(make_raster(1, 1, {BandTag{BandKind::Red, 0}}, {1.5f}), ContractError);
  EXPECT_THROW(make_raster(0, 1, {BandTag{BandKind::Red, 0}}, {}), ContractError);
  EXPECT_THROW(make_label_map(1, 2, 2, {0, 2}), ContractError);
}

TEST(BandTags, ParseAndName) {
  EXPECT_EQ(parse_band_tag("NIR").kind, BandKind::Nir);
  EXPECT_EQ(parse_band_tag("other3"), (BandTag{BandKind::Other, 3}));
  EXPECT_EQ(band_tag_name(BandTag{BandKind::Green, 0}), "green");
  EXPECT_THROW(parse_band_tag("ultraviolet"), ContractError);
  EXPECT_EQ(parse_band_list("nir,red,green,blue"), default_bands());
}

TEST(Tiling, FourByFourWindowTwoStrideTwo) {
  const auto tiles = tile(random_raster(4, 4, 1, 5), random_labels(4, 4, 5), TileSpec{2, 2});
  EXPECT_EQ(tiles.size(), 4u);
}

TEST(Tiling, LastWindowIsClampedToTheBorder) {
  const Raster r = random_raster(5, 5, 1, 6);
  const auto tiles = tile(r, random_labels(5, 5, 6), TileSpec{2, 2});
  ASSERT_EQ(tiles.size(), 9u);
  EXPECT_EQ(tile_offsets(5, 2, 2), (std::vector<std::size_t>{0, 2, 3}));
  EXPECT_EQ(tiles[2].col, 3u);
  EXPECT_EQ(tiles[8].row, 3u);
  EXPECT_EQ(tiles[8].raster.at(1, 1, 0), r.at(4, 4, 0));
  // Row-major offset order.
  EXPECT_EQ(tiles[1].row, 0u);
  EXPECT_EQ(tiles[1].col, 2u);
}

TEST(Tiling, FullWindowGivesOneTile) {
  EXPECT_EQ(tile(random_raster(6, 6, 2, 7), TileSpec{6, 3}).size(), 1u);
}

TEST(Tiling, ContractViolations) {
  EXPECT_THROW(tile(random_raster(4, 4, 1, 8), TileSpec{5, 1}), ContractError);
  EXPECT_THROW(tile(random_raster(4, 4, 1, 8), TileSpec{2, 3}), ContractError);
  EXPECT_THROW(tile(random_raster(4, 4, 1, 8), random_labels(4, 5, 8), TileSpec{2, 2}), ContractError);
}

TEST(Tiling, WindowsCoverEveryPixelAndArePure) {
  Rng rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t h = 3 + rng.index(20), w = 3 + rng.index(20);
    const std::size_t window = 1 + rng.index(std::min(h, w));
    const std::size_t stride = 1 + rng.index(window);
    const Raster r = random_raster(h, w, 1, trial);
    const auto tiles = tile(r, TileSpec{window, stride});
    std::vector<int> hits(h * w, 0);
    for (const auto& t : tiles) {
      ASSERT_LE(t.row + window, h);
      ASSERT_LE(t.col + window, w);
      for (std::size_t i = 0; i < window; ++i)
        for (std::size_t j = 0; j < window; ++j) ++hits[(t.row + i) * w + t.col + j];
    }
    for (int c : hits) ASSERT_GE(c, 1);
    const auto again = tile(r, TileSpec{window, stride});
    ASSERT_EQ(again.size(), tiles.size());
    for (std::size_t i = 0; i < tiles.size(); ++i) ASSERT_EQ(again[i].raster, tiles[i].raster);
  }
}

TEST(Palette, ConstantZeroMapUsesOnlyTheBackgroundColor) {
  const auto bmp = encode_palette_bmp(make_label_map(4, 4, 6, std::vector<std::uint8_t>(16, 0)));
  ASSERT_GE(bmp.size(), 54u);
  EXPECT_EQ(bmp[0], 'B');
  EXPECT_EQ(bmp[1], 'M');
  const std::uint32_t offset = bmp[10] | bmp[11] << 8 | bmp[12] << 16 | bmp[13] << 24;
  ASSERT_EQ(bmp.size(), offset + 16u);
  for (std::size_t i = offset; i < bmp.size(); ++i) EXPECT_EQ(bmp[i], 0);
}

TEST(Palette, SixClassesGetSixDistinctColors) {
  std::set<Rgb> colors;
  for (std::size_t c = 0; c < 6; ++c) colors.insert(palette_color(c));
  EXPECT_EQ(colors.size(), 6u);
}

TEST(Palette, SavePredictionWritesLabelsAndPreview) {
  const LabelMap l = random_labels(5, 3, 10);
  const auto path = scratch("pred.lbls");
  save_prediction(l, path);
  EXPECT_EQ(load_labels(path), l);
  EXPECT_TRUE(std::filesystem::exists(scratch("pred.bmp")));
  EXPECT_EQ(read_file(scratch("pred.bmp")), encode_palette_bmp(l));
}

TEST(RasterTensor, ChannelMajorLayout) {
  const Raster r = random_raster(2, 3, 4, 12);
  const Tensor t = r.to_tensor();
  EXPECT_EQ(t.shape(), (Shape{4, 2, 3}));
  EXPECT_EQ(t[2 * 6 + 1 * 3 + 2], static_cast<double>(r.at(1, 2, 2)));
}
