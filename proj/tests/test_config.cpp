#include "lensless/config.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lensless/errors.hpp"

namespace lensless {
namespace {

const char* kBase = R"(mask_distance_mm = 10.51
sensor_pitch_um = 38.4
mask_pitch_um = 36   # feature size
sensor_rows = 256
sensor_cols = 256
mask_rows = 63
mask_cols = 63
z_min_mm = 35
z_max_mm = 380
D = 8
K = 8
)";

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, ParsesRequiredKeysAndDefaults) {
  const RunConfig c = parse_config(kBase);
  EXPECT_DOUBLE_EQ(c.mask_distance_mm, 10.51);
  EXPECT_EQ(c.sensor, (GridSize{256, 256}));
  EXPECT_EQ(c.depth_count, 8);
  EXPECT_EQ(c.mask_count, 8);
  EXPECT_EQ(c.mask_kind, MaskKind::random);
  EXPECT_DOUBLE_EQ(c.snr_db, 40.0);
  const CameraGeometry g = c.geometry();
  EXPECT_DOUBLE_EQ(g.sensor_pitch_mm, 0.0384);
  EXPECT_DOUBLE_EQ(g.mask_pitch_mm, 0.036);
  const DepthSampling d = c.depths();
  EXPECT_EQ(d.count(), 8);
  EXPECT_DOUBLE_EQ(d.depths_mm.front(), 35.0);
  EXPECT_NEAR(d.depths_mm.back(), 380.0, 1e-9);
}

TEST(Config, MissingKeyIsNamed) {
  for (const auto& key : required_config_keys()) {
    std::string text;
    std::string line;
    std::istringstream in(kBase);
    while (std::getline(in, line))
      if (line.rfind(key + " ", 0) != 0) text += line + "\n";
    EXPECT_NE(error_of(text).find("'" + key + "'"), std::string::npos) << key;
  }
}

TEST(Config, UnknownDuplicateAndMalformed) {
  EXPECT_NE(error_of(std::string(kBase) + "lens_radius = 3\n").find("unknown key 'lens_radius'"), std::string::npos);
  EXPECT_NE(error_of(std::string(kBase) + "K = 4\n").find("duplicate key 'K'"), std::string::npos);
  EXPECT_NE(error_of(std::string(kBase) + "snr_db = loud\n").find("snr_db"), std::string::npos);
  EXPECT_NE(error_of(std::string(kBase) + "just words\n").find("line 12"), std::string::npos);
  EXPECT_NE(error_of(std::string(kBase) + "mask_kind = learned\n").find("mask_file"), std::string::npos);
  EXPECT_THROW(parse_config(std::string(kBase) + "tau_rule = fancy\n"), ConfigError);
}

TEST(Config, GeometryErrorsBecomeConfigErrors) {
  std::string text = kBase;
  text.replace(text.find("z_min_mm = 35"), 13, "z_min_mm = 5");
  EXPECT_THROW(parse_config(text), ConfigError);
}

TEST(Config, OptionalKeysAndHash) {
  const RunConfig a = parse_config(std::string(kBase) + "tau0 = 1e-6\ntau_rule = constant\nsnr_db = inf\nworkers = 3\n"
                                                        "bench_sizes = 16, 32\nsplit_capture = true\n");
  EXPECT_DOUBLE_EQ(a.recon().tau0, 1e-6);
  EXPECT_EQ(a.recon().tau_rule, TauRule::constant);
  EXPECT_EQ(a.recon().workers, 3);
  EXPECT_TRUE(std::isinf(a.snr_db));
  EXPECT_EQ(a.bench_sizes, (std::vector<int>{16, 32}));
  EXPECT_TRUE(a.split_capture);
  const RunConfig b = parse_config(kBase);
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(b.hash(), parse_config(kBase).hash());
}

TEST(Config, CommittedExamplesLoad) {
  const RunConfig paper = load_config(LENSLESS_SOURCE_DIR "/configs/paper_setup.cfg");
  EXPECT_EQ(paper.sensor, (GridSize{256, 256}));
  EXPECT_EQ(paper.mask, (GridSize{63, 63}));
  EXPECT_EQ(paper.mask_count, 8);
  EXPECT_EQ(paper.depth_count, 8);
  EXPECT_NO_THROW(load_config(LENSLESS_SOURCE_DIR "/configs/tiny.cfg"));
}

}  // namespace
}  // namespace lensless
