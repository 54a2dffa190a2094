#pragma once

#include <cstdint>
#include <vector>

#include "lensless/forward.hpp"
#include "lensless/geometry.hpp"
#include "lensless/psf.hpp"
#include "lensless/recon.hpp"

namespace lensless {

// Continuous stand-in for K binary masks: mask = 2 * sigmoid(slope * logits) - 1.
struct RelaxedMasks {
  std::vector<Image> logits;
  double slope = 1.0;

  int size() const { return static_cast<int>(logits.size()); }
  GridSize dims() const { return logits.empty() ? GridSize{} : grid_of(logits.front()); }

  static RelaxedMasks random(int count, GridSize dims, std::uint64_t seed, double scale = 1.0);
  // Logits that binarize to `masks`, with magnitude `scale`.
  static RelaxedMasks from_masks(const MaskSet& masks, double scale = 1.0);

  MaskSet realize() const;
};

// Geometric slope growth s(e) = start * (end / start)^(e / (epochs - 1)).
struct SlopeSchedule {
  double start = 1.0;
  double end = 50.0;

  double at(int epoch, int epochs) const;
};

struct OptimConfig {
  int epochs = 300;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  SlopeSchedule slope;
  double snr_db = 40.0;
  ReconConfig recon;
  std::vector<PlaneStack> scenes;
  // Abort when a step's loss exceeds this multiple of the first step's loss.
  double divergence_factor = 1e3;
};

struct LossGradient {
  double loss = 0.0;
  std::vector<Image> gradient;  // d loss / d logits, one image per mask
};

// Reconstruction MSE of `scene` through simulate -> noise -> separable solve, and its exact
// gradient with respect to the logits. The noise draw is data, not differentiated.
LossGradient loss_and_gradient(const RelaxedMasks& var, const PlaneStack& scene, const CameraGeometry& geom,
                               const DepthSampling& depths, const ReconConfig& cfg, double snr_db,
                               std::uint64_t seed);

// Forward-only version for arbitrary (e.g. binary) masks.
double reconstruction_mse(const MaskSet& masks, const PlaneStack& scene, const CameraGeometry& geom,
                          const DepthSampling& depths, const ReconConfig& cfg, double snr_db,
                          std::uint64_t seed);

struct OptimResult {
  MaskSet masks;
  RelaxedMasks variable;
  std::vector<double> loss_curve;  // scene-averaged loss per epoch
};

OptimResult optimize_masks(const RelaxedMasks& init, const OptimConfig& cfg, const CameraGeometry& geom,
                           const DepthSampling& depths, std::uint64_t seed);

// sign(logits) with sign(0) = +1.
MaskSet binarize(const RelaxedMasks& var);

}  // namespace lensless
