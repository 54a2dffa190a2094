#include "lensless/scene_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "lensless/errors.hpp"
#include "lensless/png_io.hpp"
#include "lensless/rng.hpp"

namespace lensless {

int nearest_plane(const std::vector<double>& planes, double value) {
  int best = 0;
  double best_dist = std::abs(planes[0] - value);
  for (int i = 1; i < static_cast<int>(planes.size()); ++i) {
    const double d = std::abs(planes[i] - value);
    if (d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

PlaneStack quantize_to_planes(const RgbdScene& scene, const DepthSampling& depths, DepthBinning binning) {
  const int D = depths.count();
  if (D < 1) throw DomainError("depth sampling is empty");
  if (scene.color.empty()) throw DimensionError("scene has no color channels");
  for (const auto& c : scene.color)
    if (!(grid_of(c) == grid_of(scene.depth))) throw DimensionError("color and depth shapes differ");
  if (!scene.depth.allFinite() || (scene.depth < 0.0).any()) throw DomainError("depth must be finite and >= 0");
  if (std::isinf(depths.z_max_mm)) throw DomainError("cannot rescale scene depth onto an infinite range");

  const double lo = scene.depth.minCoeff(), hi = scene.depth.maxCoeff();
  const bool degenerate = !(hi > lo);
  if (degenerate && D > 1) std::clog << "warning: scene depth range is degenerate; all pixels go to plane 0\n";
  // alpha = 1 - d / z; recover d from any sampled plane.
  const double d = depths.depths_mm[0] * (1.0 - depths.alphas[0]);

  const GridSize g = grid_of(scene.depth);
  const int C = static_cast<int>(scene.color.size());
  PlaneStack out = PlaneStack::zeros(D, C, g, depths);
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) {
      int plane = 0;
      if (!degenerate) {
        const double z = depths.z_min_mm + (scene.depth(r, c) - lo) / (hi - lo) * (depths.z_max_mm - depths.z_min_mm);
        plane = binning == DepthBinning::alpha ? nearest_plane(depths.alphas, 1.0 - d / z)
                                               : nearest_plane(depths.depths_mm, z);
      }
      for (int ch = 0; ch < C; ++ch) out.at(plane, ch)(r, c) = scene.color[ch](r, c);
    }
  return out;
}

namespace {

struct Rect {
  int r0, c0, r1, c1;  // half-open
  int plane;
  std::vector<double> base;
  double fr, fc, phase;
};

double texture(const Rect& rect, int r, int c, double noise) {
  const double wave = std::sin(2.0 * M_PI * (rect.fr * r + rect.fc * c) + rect.phase);
  const double t = std::clamp(0.5 * wave + 0.5 * noise, -1.0, 1.0);
  return 0.6 + 0.4 * t;
}

Rect random_rect(Rng& rng, GridSize g, int plane, const TextureParams& p, bool full_frame) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Rect rect{};
  if (full_frame) {
    rect = {0, 0, g.rows, g.cols, plane, {}, 0, 0, 0};
  } else {
    const int h = std::max(1, static_cast<int>(std::lround(g.rows * (p.min_extent + (p.max_extent - p.min_extent) * unit(rng)))));
    const int w = std::max(1, static_cast<int>(std::lround(g.cols * (p.min_extent + (p.max_extent - p.min_extent) * unit(rng)))));
    rect.r0 = static_cast<int>(unit(rng) * (g.rows - h + 1));
    rect.c0 = static_cast<int>(unit(rng) * (g.cols - w + 1));
    rect.r1 = rect.r0 + h;
    rect.c1 = rect.c0 + w;
    rect.plane = plane;
  }
  for (int ch = 0; ch < p.channels; ++ch) rect.base.push_back(0.3 + 0.7 * unit(rng));
  const double period = p.min_period + (p.max_period - p.min_period) * unit(rng);
  const double angle = 2.0 * M_PI * unit(rng);
  rect.fr = std::sin(angle) / period;
  rect.fc = std::cos(angle) / period;
  rect.phase = 2.0 * M_PI * unit(rng);
  return rect;
}

}  // namespace

PlaneStack generate_procedural_scene(std::uint64_t seed, const DepthSampling& depths, GridSize grid,
                                     const TextureParams& params) {
  const int D = depths.count();
  if (D < 1) throw DomainError("depth sampling is empty");
  if (grid.rows < 1 || grid.cols < 1 || params.channels < 1) throw DimensionError("invalid scene shape");

  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    Rng rng = make_rng(seed, "scene.procedural", attempt);
    std::uniform_int_distribution<int> count_dist(params.min_rects, params.max_rects);
    // Planes 0..D-2 each get at least one rectangle; the background sits on plane D-1.
    const int count = std::max(count_dist(rng), D - 1);
    std::vector<int> planes;
    for (int i = 0; i < D - 1; ++i) planes.push_back(i);
    std::uniform_int_distribution<int> plane_dist(0, std::max(0, D - 2));
    while (static_cast<int>(planes.size()) < count) planes.push_back(D == 1 ? 0 : plane_dist(rng));
    std::shuffle(planes.begin(), planes.end(), rng);

    std::vector<Rect> rects{random_rect(rng, grid, D - 1, params, true)};
    for (int p : planes) rects.push_back(random_rect(rng, grid, p, params, false));
    // Paint far to near so nearer rectangles occlude.
    std::stable_sort(rects.begin(), rects.end(), [](const Rect& a, const Rect& b) { return a.plane > b.plane; });

    IndexMap owner = IndexMap::Constant(grid.rows, grid.cols, -1);
    for (int n = 0; n < static_cast<int>(rects.size()); ++n)
      owner.block(rects[n].r0, rects[n].c0, rects[n].r1 - rects[n].r0, rects[n].c1 - rects[n].c0).setConstant(n);

    std::vector<bool> used(D, false);
    for (Eigen::Index j = 0; j < owner.size(); ++j) used[rects[owner.data()[j]].plane] = true;
    if (std::find(used.begin(), used.end(), false) != used.end()) continue;

    PlaneStack out = PlaneStack::zeros(D, params.channels, grid, depths);
    std::uniform_real_distribution<double> noise(-1.0, 1.0);
    for (int r = 0; r < grid.rows; ++r)
      for (int c = 0; c < grid.cols; ++c) {
        const Rect& rect = rects[owner(r, c)];
        const double t = texture(rect, r, c, noise(rng));
        for (int ch = 0; ch < params.channels; ++ch) out.at(rect.plane, ch)(r, c) = rect.base[ch] * t;
      }
    return out;
  }
  throw NumericalError("could not generate a scene with every plane visible");
}

RgbdScene read_rgbd(const std::filesystem::path& color_png, const std::filesystem::path& depth_path,
                    double depth_scale_mm) {
  RgbdScene scene;
  const PngImage color = read_png(color_png);
  for (const auto& ch : color.channels) scene.color.push_back(ch / color.max_value());
  if (depth_path.extension() == ".png") {
    const PngImage depth = read_png(depth_path);
    scene.depth = depth.channels.front() * depth_scale_mm;
  } else {
    const std::vector<Image> ch = channels_from_tensor(read_stack(depth_path));
    scene.depth = ch.front() * depth_scale_mm;
  }
  if (!(grid_of(scene.depth) == grid_of(scene.color.front()))) throw DimensionError("color and depth shapes differ");
  return scene;
}

namespace {

Tensor pack(std::vector<std::uint32_t> dims, const std::vector<Image>& images, Dtype dtype) {
  Tensor t;
  t.dims = std::move(dims);
  t.dtype = dtype;
  t.data.reserve(t.count());
  for (const auto& img : images) t.data.insert(t.data.end(), img.data(), img.data() + img.size());
  if (t.data.size() != t.count()) throw DimensionError("inconsistent image sizes in tensor");
  return t;
}

std::vector<Image> unpack(const Tensor& t, std::size_t leading_dims) {
  if (t.dims.size() != leading_dims + 2)
    throw DimensionError("expected a " + std::to_string(leading_dims + 2) + "-D tensor, got " + std::to_string(t.dims.size()) + "-D");
  const int rows = static_cast<int>(t.dims[leading_dims]);
  const int cols = static_cast<int>(t.dims[leading_dims + 1]);
  const std::size_t per = static_cast<std::size_t>(rows) * cols;
  std::vector<Image> out(t.count() / per);
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n].resize(rows, cols);
    std::copy(t.data.begin() + static_cast<std::ptrdiff_t>(n * per), t.data.begin() + static_cast<std::ptrdiff_t>((n + 1) * per),
              out[n].data());
  }
  return out;
}

std::uint32_t u32(int v) { return static_cast<std::uint32_t>(v); }

}  // namespace

Tensor to_tensor(const PlaneStack& s, Dtype dtype) {
  const GridSize g = s.grid();
  return pack({u32(s.depths), u32(s.channels), u32(g.rows), u32(g.cols)}, s.planes, dtype);
}

Tensor to_tensor(const MeasurementSet& m, Dtype dtype) {
  const GridSize g = m.grid();
  return pack({u32(m.masks), u32(m.channels), u32(g.rows), u32(g.cols)}, m.frames, dtype);
}

Tensor to_tensor(const PsfStack& p, Dtype dtype) {
  const GridSize g = p.grid();
  return pack({u32(p.masks), u32(p.depths), u32(g.rows), u32(g.cols)}, p.psfs, dtype);
}

Tensor to_tensor(const MaskSet& m, Dtype dtype) {
  std::vector<Image> images;
  for (const auto& p : m.patterns) images.push_back(p.values);
  const GridSize g = m.dims();
  return pack({u32(m.size()), u32(g.rows), u32(g.cols)}, images, dtype);
}

Tensor to_tensor(const std::vector<Image>& channels, Dtype dtype) {
  const GridSize g = grid_of(channels.front());
  return pack({u32(static_cast<int>(channels.size())), u32(g.rows), u32(g.cols)}, channels, dtype);
}

PlaneStack planes_from_tensor(const Tensor& t, const DepthSampling& sampling) {
  PlaneStack s;
  s.planes = unpack(t, 2);
  s.depths = static_cast<int>(t.dims[0]);
  s.channels = static_cast<int>(t.dims[1]);
  s.sampling = sampling;
  return s;
}

MeasurementSet measurements_from_tensor(const Tensor& t) {
  MeasurementSet m;
  m.frames = unpack(t, 2);
  m.masks = static_cast<int>(t.dims[0]);
  m.channels = static_cast<int>(t.dims[1]);
  return m;
}

PsfStack psfs_from_tensor(const Tensor& t, const CameraGeometry& geom, const DepthSampling& sampling) {
  PsfStack p;
  p.psfs = unpack(t, 2);
  p.masks = static_cast<int>(t.dims[0]);
  p.depths = static_cast<int>(t.dims[1]);
  p.geometry = geom;
  p.sampling = sampling;
  return p;
}

MaskSet masks_from_tensor(const Tensor& t) {
  MaskSet m;
  for (auto& img : unpack(t, 1)) {
    MaskPattern p{std::move(img), false};
    p.is_binary = p.all_plus_minus_one();
    m.patterns.push_back(std::move(p));
  }
  m.validate();
  return m;
}

std::vector<Image> channels_from_tensor(const Tensor& t) {
  if (t.dims.size() == 2) return unpack(t, 0);
  return unpack(t, 1);
}

MaskPattern mask_from_gray8(const Image& gray, bool binary) {
  if (binary) return {(gray >= 127.5).select(Image::Ones(gray.rows(), gray.cols()), -1.0), true};
  return {(gray / 127.5 - 1.0).max(-1.0).min(1.0), false};
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void Manifest::set(const std::string& key, const std::string& value) { entries_[key] = value; }

void Manifest::set(const std::string& key, double value) { entries_[key] = format_double(value); }

void Manifest::set(const std::string& key, const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? ", " : "") + format_double(values[i]);
  entries_[key] = s;
}

const std::string& Manifest::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("manifest has no key '" + key + "'");
  return it->second;
}

std::vector<double> Manifest::get_list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::string Manifest::str() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

void Manifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << str();
}

Manifest Manifest::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    m.entries_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return m;
}

}  // namespace lensless
