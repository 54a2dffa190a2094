#pragma once

#include <vector>

#include "lensless/geometry.hpp"
#include "lensless/types.hpp"

namespace lensless {

// Signed mask transmission in [-1, 1].
struct MaskPattern {
  Image values;
  bool is_binary = false;

  // Throws DomainError when entries leave [-1, 1] or a binary mask holds anything but +-1.
  void validate() const;
  bool all_plus_minus_one() const;
};

struct MaskSet {
  std::vector<MaskPattern> patterns;

  int size() const { return static_cast<int>(patterns.size()); }
  GridSize dims() const;
  bool is_binary() const;
  void validate() const;
};

// Geometric shadow of a mask at one depth, as a linear map mask -> sensor image.
//
// Sensor pixel (r, c) has centered physical coordinate (u, v); it samples the mask at
// alpha * (u, v) with alpha = (z - d) / z, bilinearly, with zero outside the mask aperture.
// Bilinear weights factor per axis, so the map is psf = R * mask * C^T.
class PsfOperator {
 public:
  PsfOperator(const CameraGeometry& geom, double z_mm);

  Image apply(const Image& mask) const;
  // Transpose map sensor -> mask.
  Image adjoint(const Image& sensor) const;

  const Eigen::MatrixXd& row_weights() const { return row_weights_; }
  const Eigen::MatrixXd& col_weights() const { return col_weights_; }

 private:
  Eigen::MatrixXd row_weights_;  // sensor rows x mask rows
  Eigen::MatrixXd col_weights_;  // sensor cols x mask cols
};

// K x D PSF images on the sensor grid; psf(k, i) is mask k at depth plane i.
struct PsfStack {
  int masks = 0;
  int depths = 0;
  CameraGeometry geometry;
  DepthSampling sampling;
  std::vector<Image> psfs;

  GridSize grid() const { return psfs.empty() ? GridSize{} : grid_of(psfs.front()); }
  const Image& at(int k, int i) const { return psfs[static_cast<std::size_t>(k) * depths + i]; }
  Image& at(int k, int i) { return psfs[static_cast<std::size_t>(k) * depths + i]; }
};

Image synthesize_psf(const MaskPattern& mask, const CameraGeometry& geom, double z_mm);

PsfStack synthesize_stack(const MaskSet& masks, const CameraGeometry& geom,
                          const DepthSampling& depths, int workers = 0);

Image psf_adjoint(const Image& sensor_grad, const CameraGeometry& geom, double z_mm);

}  // namespace lensless
