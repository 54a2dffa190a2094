#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lensless/forward.hpp"
#include "lensless/geometry.hpp"
#include "lensless/psf.hpp"
#include "lensless/tensor_file.hpp"

namespace lensless {

// Color in [0, 1] plus per-pixel depth (any linear unit; rescaled on quantization).
struct RgbdScene {
  std::vector<Image> color;
  Image depth;
};

enum class DepthBinning { alpha, depth };

// Rescales the scene depth range onto [z_min, z_max] and assigns every pixel to its nearest
// plane (nearest in alpha by default; ties go to the nearer plane).
PlaneStack quantize_to_planes(const RgbdScene& scene, const DepthSampling& depths,
                              DepthBinning binning = DepthBinning::alpha);

// Index of the plane nearest to `value` among increasing `planes`; ties go to the lower index.
int nearest_plane(const std::vector<double>& planes, double value);

struct TextureParams {
  int channels = 1;
  int min_rects = 3;
  int max_rects = 10;
  // Rectangle side as a fraction of the image side.
  double min_extent = 0.2;
  double max_extent = 0.6;
  // Sinusoid periods in pixels.
  double min_period = 2.5;
  double max_period = 8.0;
};

// Random textured rectangles over a textured background on the farthest plane. Nearer
// rectangles occlude farther ones; every plane is nonempty; intensities in (0, 1].
PlaneStack generate_procedural_scene(std::uint64_t seed, const DepthSampling& depths, GridSize grid,
                                     const TextureParams& params = {});

// Color PNG plus a depth map given either as a 16-bit PNG (raw value * depth_scale_mm) or a
// tensor stack file.
RgbdScene read_rgbd(const std::filesystem::path& color_png, const std::filesystem::path& depth_path,
                    double depth_scale_mm = 1.0);

// Tensor conversions. Layouts: planes D x C x R x C', measurements K x C x R x C',
// PSFs K x D x R x C', masks K x P x P'.
Tensor to_tensor(const PlaneStack& s, Dtype dtype = Dtype::float64);
Tensor to_tensor(const MeasurementSet& m, Dtype dtype = Dtype::float64);
Tensor to_tensor(const PsfStack& p, Dtype dtype = Dtype::float64);
Tensor to_tensor(const MaskSet& m, Dtype dtype = Dtype::float64);
Tensor to_tensor(const std::vector<Image>& channels, Dtype dtype = Dtype::float64);

PlaneStack planes_from_tensor(const Tensor& t, const DepthSampling& sampling = {});
MeasurementSet measurements_from_tensor(const Tensor& t);
PsfStack psfs_from_tensor(const Tensor& t, const CameraGeometry& geom = {}, const DepthSampling& sampling = {});
MaskSet masks_from_tensor(const Tensor& t);
std::vector<Image> channels_from_tensor(const Tensor& t);

// 8-bit grayscale import: 0 -> -1, 255 -> +1; binary import thresholds at the midpoint.
MaskPattern mask_from_gray8(const Image& gray, bool binary);

// Plain "key = value" text accompanying every output directory.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, const std::vector<double>& values);
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::vector<double> get_list(const std::string& key) const;

  std::string str() const;
  void write(const std::filesystem::path& path) const;
  static Manifest read(const std::filesystem::path& path);

 private:
  std::map<std::string, std::string> entries_;
};

std::string format_double(double v);

}  // namespace lensless
