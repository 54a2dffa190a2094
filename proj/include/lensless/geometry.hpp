#pragma once

#include <vector>

#include "lensless/types.hpp"

namespace lensless {

// Mask-in-front-of-sensor camera. All lengths are millimeters.
struct CameraGeometry {
  double mask_distance_mm = 0.0;
  double sensor_pitch_mm = 0.0;
  double mask_pitch_mm = 0.0;
  GridSize sensor;
  GridSize mask;

  // Pitches are usually quoted in micrometers.
  static CameraGeometry from_microns(double mask_distance_mm, double sensor_pitch_um,
                                     double mask_pitch_um, GridSize sensor, GridSize mask);

  // Throws DomainError on non-positive distances, pitches or dims.
  void validate() const;
};

// Depth planes sampled uniformly in alpha = 1 - d/z. Index 0 is the nearest plane.
// A far-field plane is stored as alpha = 1 and depth = +inf.
struct DepthSampling {
  double z_min_mm = 0.0;
  double z_max_mm = 0.0;
  std::vector<double> alphas;
  std::vector<double> depths_mm;

  int count() const { return static_cast<int>(alphas.size()); }
};

double alpha_of_depth(const CameraGeometry& geom, double z_mm);
double depth_of_alpha(const CameraGeometry& geom, double alpha);

// z / (z - d); 1 for z = inf.
double magnification(const CameraGeometry& geom, double z_mm);

// z_max_mm may be +inf. For count == 1 the single plane sits at z_min.
DepthSampling sample_depths(const CameraGeometry& geom, double z_min_mm, double z_max_mm,
                            int count);

// Builds a sampling from explicit depths (used when reading manifests).
DepthSampling depths_from_list(const CameraGeometry& geom, const std::vector<double>& depths_mm);

}  // namespace lensless
