#include "lensless/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "lensless/errors.hpp"
#include "lensless/rng.hpp"

namespace lensless {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != static_cast<double>(static_cast<long long>(d))) throw ConfigError("key '" + key + "': expected an integer");
  return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected true or false");
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"mask_distance_mm", [](RunConfig& c, auto& k, auto& v) { c.mask_distance_mm = to_double(k, v); }},
      {"sensor_pitch_um", [](RunConfig& c, auto& k, auto& v) { c.sensor_pitch_um = to_double(k, v); }},
      {"mask_pitch_um", [](RunConfig& c, auto& k, auto& v) { c.mask_pitch_um = to_double(k, v); }},
      {"sensor_rows", [](RunConfig& c, auto& k, auto& v) { c.sensor.rows = to_int(k, v); }},
      {"sensor_cols", [](RunConfig& c, auto& k, auto& v) { c.sensor.cols = to_int(k, v); }},
      {"mask_rows", [](RunConfig& c, auto& k, auto& v) { c.mask.rows = to_int(k, v); }},
      {"mask_cols", [](RunConfig& c, auto& k, auto& v) { c.mask.cols = to_int(k, v); }},
      {"z_min_mm", [](RunConfig& c, auto& k, auto& v) { c.z_min_mm = to_double(k, v); }},
      {"z_max_mm", [](RunConfig& c, auto& k, auto& v) { c.z_max_mm = to_double(k, v); }},
      {"D", [](RunConfig& c, auto& k, auto& v) { c.depth_count = to_int(k, v); }},
      {"K", [](RunConfig& c, auto& k, auto& v) { c.mask_count = to_int(k, v); }},
      {"mask_kind", [](RunConfig& c, auto&, auto& v) { c.mask_kind = parse_mask_kind(v); }},
      {"mask_file", [](RunConfig& c, auto&, auto& v) { c.mask_file = v; }},
      {"max_shift", [](RunConfig& c, auto& k, auto& v) { c.max_shift = to_int(k, v); }},
      {"channels", [](RunConfig& c, auto& k, auto& v) { c.channels = to_int(k, v); }},
      {"scene_color", [](RunConfig& c, auto&, auto& v) { c.scene_color = v; }},
      {"scene_depth", [](RunConfig& c, auto&, auto& v) { c.scene_depth = v; }},
      {"depth_scale_mm", [](RunConfig& c, auto& k, auto& v) { c.depth_scale_mm = to_double(k, v); }},
      {"binning",
       [](RunConfig& c, auto& k, auto& v) {
         if (v == "alpha") c.binning = DepthBinning::alpha;
         else if (v == "depth") c.binning = DepthBinning::depth;
         else throw ConfigError("key '" + k + "': expected alpha or depth");
       }},
      {"snr_db", [](RunConfig& c, auto& k, auto& v) { c.snr_db = to_double(k, v); }},
      {"mode", [](RunConfig& c, auto&, auto& v) { c.mode = parse_mode(v); }},
      {"split_capture", [](RunConfig& c, auto& k, auto& v) { c.split_capture = to_bool(k, v); }},
      {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"tau0", [](RunConfig& c, auto& k, auto& v) { c.tau0 = to_double(k, v); }},
      {"tau_rule", [](RunConfig& c, auto&, auto& v) { c.tau_rule = parse_tau_rule(v); }},
      {"solver",
       [](RunConfig& c, auto& k, auto& v) {
         if (v == "closed_form") c.solver = SolverKind::closed_form;
         else if (v == "conjugate_gradient") c.solver = SolverKind::conjugate_gradient;
         else throw ConfigError("key '" + k + "': expected closed_form or conjugate_gradient");
       }},
      {"workers", [](RunConfig& c, auto& k, auto& v) { c.workers = to_int(k, v); }},
      {"window", [](RunConfig& c, auto& k, auto& v) { c.window = to_int(k, v); }},
      {"denoise_sigma", [](RunConfig& c, auto& k, auto& v) { c.denoise_sigma = to_double(k, v); }},
      {"support_fraction", [](RunConfig& c, auto& k, auto& v) { c.support_fraction = to_double(k, v); }},
      {"epochs", [](RunConfig& c, auto& k, auto& v) { c.epochs = to_int(k, v); }},
      {"learning_rate", [](RunConfig& c, auto& k, auto& v) { c.learning_rate = to_double(k, v); }},
      {"slope_start", [](RunConfig& c, auto& k, auto& v) { c.slope_start = to_double(k, v); }},
      {"slope_end", [](RunConfig& c, auto& k, auto& v) { c.slope_end = to_double(k, v); }},
      {"train_scenes", [](RunConfig& c, auto& k, auto& v) { c.train_scenes = to_int(k, v); }},
      {"init_scale", [](RunConfig& c, auto& k, auto& v) { c.init_scale = to_double(k, v); }},
      {"bench_sizes",
       [](RunConfig& c, auto& k, auto& v) {
         c.bench_sizes.clear();
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) c.bench_sizes.push_back(to_int(k, trim(item)));
       }},
      {"bench_repeats", [](RunConfig& c, auto& k, auto& v) { c.bench_repeats = to_int(k, v); }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& required_config_keys() {
  static const std::vector<std::string> keys = {"mask_distance_mm", "sensor_pitch_um", "mask_pitch_um", "sensor_rows",
                                                "sensor_cols",      "mask_rows",       "mask_cols",     "z_min_mm",
                                                "z_max_mm",         "D",               "K"};
  return keys;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  cfg.source_text = text;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = setters();
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == key; });
    if (it == table.end()) throw ConfigError("unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'");
    it->second(cfg, key, value);
  }
  for (const auto& key : required_config_keys())
    if (!seen.count(key)) throw ConfigError("missing required key '" + key + "'");
  if (cfg.channels != 1 && cfg.channels != 3) throw ConfigError("key 'channels': must be 1 or 3");
  if (cfg.mask_kind == MaskKind::learned && cfg.mask_file.empty())
    throw ConfigError("missing required key 'mask_file' for mask_kind = learned");
  if (cfg.mask_count < 1) throw ConfigError("key 'K': must be at least 1");
  try {
    cfg.depths();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid geometry: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

CameraGeometry RunConfig::geometry() const {
  return CameraGeometry::from_microns(mask_distance_mm, sensor_pitch_um, mask_pitch_um, sensor, mask);
}

DepthSampling RunConfig::depths() const { return sample_depths(geometry(), z_min_mm, z_max_mm, depth_count); }

ReconConfig RunConfig::recon() const {
  ReconConfig r;
  r.tau0 = tau0;
  r.tau_rule = tau_rule;
  r.solver = solver;
  r.workers = workers;
  return r;
}

OptimConfig RunConfig::optim() const {
  OptimConfig o;
  o.epochs = epochs;
  o.learning_rate = learning_rate;
  o.slope = {slope_start, slope_end};
  o.snr_db = snr_db;
  o.recon = recon();
  return o;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(source_text); }

TauRule parse_tau_rule(const std::string& s) {
  if (s == "constant") return TauRule::constant;
  if (s == "frobenius_scaled") return TauRule::frobenius_scaled;
  throw ConfigError("unknown tau rule '" + s + "'");
}

std::string to_string(TauRule r) { return r == TauRule::constant ? "constant" : "frobenius_scaled"; }

ConvolutionMode parse_mode(const std::string& s) {
  if (s == "circular") return ConvolutionMode::circular;
  if (s == "linear_cropped") return ConvolutionMode::linear_cropped;
  throw ConfigError("unknown convolution mode '" + s + "'");
}

std::string to_string(ConvolutionMode m) { return m == ConvolutionMode::circular ? "circular" : "linear_cropped"; }

}  // namespace lensless
