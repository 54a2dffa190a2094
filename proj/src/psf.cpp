#include "lensless/psf.hpp"

#include <cmath>

#include "lensless/errors.hpp"
#include "lensless/parallel.hpp"

namespace lensless {

namespace {

// 1D linear interpolation weights from `sensor_count` centered sensor samples onto
// `mask_count` centered mask samples.
Eigen::MatrixXd axis_weights(int sensor_count, int mask_count, double sensor_pitch,
                             double mask_pitch, double alpha) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(sensor_count, mask_count);
  const double sensor_center = 0.5 * (sensor_count - 1);
  const double mask_center = 0.5 * (mask_count - 1);
  for (int i = 0; i < sensor_count; ++i) {
    const double u = (i - sensor_center) * sensor_pitch;
    const double x = alpha * u / mask_pitch + mask_center;
    const double lo = std::floor(x);
    const double frac = x - lo;
    const int j = static_cast<int>(lo);
    if (j >= 0 && j < mask_count) w(i, j) += 1.0 - frac;
    if (j + 1 >= 0 && j + 1 < mask_count && frac > 0.0) w(i, j + 1) += frac;
  }
  return w;
}

}  // namespace

void MaskPattern::validate() const {
  if (values.size() == 0) throw DimensionError("empty mask pattern");
  if (!values.allFinite() || values.minCoeff() < -1.0 || values.maxCoeff() > 1.0)
    throw DomainError("mask entries must lie in [-1, 1]");
  if (is_binary && !all_plus_minus_one()) throw DomainError("binary mask holds values other than +-1");
}

bool MaskPattern::all_plus_minus_one() const {
  return ((values == 1.0) || (values == -1.0)).all();
}

GridSize MaskSet::dims() const { return patterns.empty() ? GridSize{} : grid_of(patterns.front().values); }

bool MaskSet::is_binary() const {
  for (const auto& p : patterns)
    if (!p.all_plus_minus_one()) return false;
  return !patterns.empty();
}

void MaskSet::validate() const {
  if (patterns.empty()) throw DimensionError("mask set is empty");
  for (const auto& p : patterns) {
    p.validate();
    if (!(grid_of(p.values) == dims())) throw DimensionError("mask patterns differ in shape");
  }
}

PsfOperator::PsfOperator(const CameraGeometry& geom, double z_mm) {
  geom.validate();
  const double alpha = alpha_of_depth(geom, z_mm);
  row_weights_ = axis_weights(geom.sensor.rows, geom.mask.rows, geom.sensor_pitch_mm,
                              geom.mask_pitch_mm, alpha);
  col_weights_ = axis_weights(geom.sensor.cols, geom.mask.cols, geom.sensor_pitch_mm,
                              geom.mask_pitch_mm, alpha);
}

Image PsfOperator::apply(const Image& mask) const {
  if (mask.rows() != row_weights_.cols() || mask.cols() != col_weights_.cols())
    throw DimensionError("mask shape does not match the camera geometry");
  return (row_weights_ * mask.matrix() * col_weights_.transpose()).array();
}

Image PsfOperator::adjoint(const Image& sensor) const {
  if (sensor.rows() != row_weights_.rows() || sensor.cols() != col_weights_.rows())
    throw DimensionError("sensor image shape does not match the camera geometry");
  return (row_weights_.transpose() * sensor.matrix() * col_weights_).array();
}

Image synthesize_psf(const MaskPattern& mask, const CameraGeometry& geom, double z_mm) {
  return PsfOperator(geom, z_mm).apply(mask.values);
}

PsfStack synthesize_stack(const MaskSet& masks, const CameraGeometry& geom,
                          const DepthSampling& depths, int workers) {
  masks.validate();
  if (!(masks.dims() == geom.mask)) throw DimensionError("mask set shape does not match geometry");
  PsfStack stack;
  stack.masks = masks.size();
  stack.depths = depths.count();
  stack.geometry = geom;
  stack.sampling = depths;
  stack.psfs.resize(static_cast<std::size_t>(stack.masks) * stack.depths);

  std::vector<PsfOperator> ops;
  ops.reserve(depths.count());
  for (double z : depths.depths_mm) ops.emplace_back(geom, z);

  parallel_for(stack.psfs.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      const int k = static_cast<int>(n) / stack.depths;
      const int i = static_cast<int>(n) % stack.depths;
      stack.psfs[n] = ops[i].apply(masks.patterns[k].values);
    }
  });
  return stack;
}

Image psf_adjoint(const Image& sensor_grad, const CameraGeometry& geom, double z_mm) {
  return PsfOperator(geom, z_mm).adjoint(sensor_grad);
}

}  // namespace lensless
