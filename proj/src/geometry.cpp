#include "lensless/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lensless/errors.hpp"

namespace lensless {

CameraGeometry CameraGeometry::from_microns(double mask_distance_mm, double sensor_pitch_um,
                                            double mask_pitch_um, GridSize sensor, GridSize mask) {
  CameraGeometry g{mask_distance_mm, sensor_pitch_um * 1e-3, mask_pitch_um * 1e-3, sensor, mask};
  g.validate();
  return g;
}

void CameraGeometry::validate() const {
  if (!(mask_distance_mm > 0.0)) throw DomainError("mask distance must be positive");
  if (!(sensor_pitch_mm > 0.0) || !(mask_pitch_mm > 0.0))
    throw DomainError("pixel pitches must be positive");
  if (sensor.rows < 1 || sensor.cols < 1 || mask.rows < 1 || mask.cols < 1)
    throw DomainError("grid dimensions must be at least 1");
}

double alpha_of_depth(const CameraGeometry& geom, double z_mm) {
  if (std::isinf(z_mm) && z_mm > 0) return 1.0;
  if (!(z_mm > geom.mask_distance_mm))
    throw DomainError("depth " + std::to_string(z_mm) + " mm is not beyond the mask");
  return 1.0 - geom.mask_distance_mm / z_mm;
}

double depth_of_alpha(const CameraGeometry& geom, double alpha) {
  if (alpha >= 1.0) return std::numeric_limits<double>::infinity();
  if (!(alpha > 0.0)) throw DomainError("alpha must lie in (0, 1]");
  return geom.mask_distance_mm / (1.0 - alpha);
}

double magnification(const CameraGeometry& geom, double z_mm) {
  return 1.0 / alpha_of_depth(geom, z_mm);
}

DepthSampling sample_depths(const CameraGeometry& geom, double z_min_mm, double z_max_mm,
                            int count) {
  if (count < 1) throw DomainError("depth count must be at least 1");
  if (!(z_min_mm > geom.mask_distance_mm))
    throw DomainError("z_min must exceed the mask distance");
  if (!(z_max_mm >= z_min_mm)) throw DomainError("z_max must be >= z_min");
  if (count > 1 && z_max_mm == z_min_mm)
    throw DomainError("z_max == z_min cannot hold more than one plane");

  DepthSampling s;
  s.z_min_mm = z_min_mm;
  s.z_max_mm = z_max_mm;
  const double a0 = alpha_of_depth(geom, z_min_mm);
  const double a1 = alpha_of_depth(geom, z_max_mm);
  for (int i = 0; i < count; ++i) {
    double a = count == 1 ? a0 : a0 + (a1 - a0) * i / (count - 1);
    double z = depth_of_alpha(geom, a);
    // Pin the endpoints so the round trip through alpha is exact.
    if (i == 0) z = z_min_mm;
    if (i == count - 1 && count > 1) {
      a = a1;
      z = z_max_mm;
    }
    s.alphas.push_back(a);
    s.depths_mm.push_back(z);
  }
  return s;
}

DepthSampling depths_from_list(const CameraGeometry& geom, const std::vector<double>& depths_mm) {
  if (depths_mm.empty()) throw DomainError("empty depth list");
  DepthSampling s;
  s.z_min_mm = depths_mm.front();
  s.z_max_mm = depths_mm.back();
  for (double z : depths_mm) {
    s.alphas.push_back(alpha_of_depth(geom, z));
    s.depths_mm.push_back(z);
  }
  for (std::size_t i = 1; i < s.alphas.size(); ++i)
    if (!(s.alphas[i] > s.alphas[i - 1])) throw DomainError("depths must be strictly increasing");
  return s;
}

}  // namespace lensless
