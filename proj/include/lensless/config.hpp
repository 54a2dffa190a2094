#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lensless/forward.hpp"
#include "lensless/geometry.hpp"
#include "lensless/masks.hpp"
#include "lensless/maskopt.hpp"
#include "lensless/recon.hpp"
#include "lensless/scene_io.hpp"

namespace lensless {

// Everything a CLI run needs. Parsed from "key = value" lines; '#' starts a comment.
// Unknown or duplicate keys are errors, as are missing required keys.
struct RunConfig {
  // geometry (required)
  double mask_distance_mm = 0.0;
  double sensor_pitch_um = 0.0;
  double mask_pitch_um = 0.0;
  GridSize sensor;
  GridSize mask;
  // depth planes (required)
  double z_min_mm = 0.0;
  double z_max_mm = 0.0;
  int depth_count = 0;
  // masks (K required)
  int mask_count = 0;
  MaskKind mask_kind = MaskKind::random;
  std::string mask_file;
  int max_shift = 48;
  // scene
  int channels = 1;
  std::string scene_color;
  std::string scene_depth;
  double depth_scale_mm = 1.0;
  DepthBinning binning = DepthBinning::alpha;
  // simulation
  double snr_db = 40.0;
  ConvolutionMode mode = ConvolutionMode::circular;
  bool split_capture = false;
  std::uint64_t seed = 0;
  // reconstruction
  double tau0 = 1e-3;
  TauRule tau_rule = TauRule::frobenius_scaled;
  SolverKind solver = SolverKind::closed_form;
  int workers = 0;
  // fusion
  int window = 9;
  double denoise_sigma = 0.0;
  double support_fraction = 1e-6;
  // mask optimization
  int epochs = 300;
  double learning_rate = 0.01;
  double slope_start = 1.0;
  double slope_end = 50.0;
  int train_scenes = 50;
  double init_scale = 1.0;
  // benchmark
  std::vector<int> bench_sizes{16, 32, 64, 128};
  int bench_repeats = 3;

  std::string source_text;

  CameraGeometry geometry() const;
  DepthSampling depths() const;
  ReconConfig recon() const;
  OptimConfig optim() const;
  std::uint64_t hash() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Names of every accepted key, required ones first.
const std::vector<std::string>& config_keys();
const std::vector<std::string>& required_config_keys();

TauRule parse_tau_rule(const std::string& s);
std::string to_string(TauRule r);
ConvolutionMode parse_mode(const std::string& s);
std::string to_string(ConvolutionMode m);

}  // namespace lensless
