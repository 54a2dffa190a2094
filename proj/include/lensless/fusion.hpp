#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "lensless/forward.hpp"
#include "lensless/types.hpp"

namespace lensless {

// Per-plane, per-channel image filter applied before focus selection.
using Denoiser = std::function<Image(const Image&)>;

// Separable Gaussian blur with mirrored borders; usable as a Denoiser.
Image gaussian_blur(const Image& in, double sigma, int radius = -1);
Denoiser gaussian_denoiser(double sigma);

// Mean of `in` over a window x window neighborhood, mirrored borders.
Image box_mean(const Image& in, int window);

// 4-neighbor Laplacian with mirrored borders.
Image laplacian(const Image& in);

// Variance of the Laplacian inside each window.
Image focus_measure(const Image& gray, int window);

struct FusionResult {
  std::vector<Image> all_in_focus;  // one image per channel
  Image depth_map;                  // mm
  IndexMap plane_index;
  Image confidence;
};

// Picks, per pixel, the plane with the largest local contrast (ties go to the nearer plane)
// and copies that plane's value into the all-in-focus image. Only planes whose grayscale value
// at the pixel reaches `support_fraction` of the brightest plane there are candidates. The
// default only drops planes that are empty at the pixel; larger fractions also suppress
// occlusion-edge holes in noisy stacks but can reject dark in-focus texture. 0 disables it.
FusionResult local_contrast_fuse(const PlaneStack& planes, int window = 9,
                                 const std::optional<Denoiser>& denoiser = std::nullopt,
                                 double support_fraction = 1e-6);

// Channel mean.
Image grayscale(const std::vector<Image>& channels);

// Single-scale SSIM with an 11-tap Gaussian window (sigma 1.5), averaged over pixels and
// channels. The dynamic range defaults to the reference maximum.
double ssim(const std::vector<Image>& image, const std::vector<Image>& reference);
double ssim(const std::vector<Image>& image, const std::vector<Image>& reference, double dynamic_range);
inline double ssim(const Image& image, const Image& reference) {
  return ssim(std::vector<Image>{image}, std::vector<Image>{reference});
}

struct DepthScore {
  double fraction_correct = 0.0;
  // correct / incorrect; +inf when nothing is wrong.
  double odds_ratio = 0.0;
};

DepthScore depth_score(const IndexMap& predicted, const IndexMap& truth, const BoolMap& valid);
inline double depth_accuracy(const IndexMap& predicted, const IndexMap& truth, const BoolMap& valid) {
  return depth_score(predicted, truth, valid).fraction_correct;
}

// Pixels whose grayscale intensity is at least `fraction` of the image maximum.
BoolMap intensity_valid_mask(const std::vector<Image>& image, double fraction = 0.05);

// Ground-truth plane index of a partitioned scene: the plane holding the brightest value.
IndexMap truth_plane_index(const PlaneStack& scene);

// Sum over planes, per channel.
std::vector<Image> flatten_planes(const PlaneStack& scene);

struct EvalReport {
  double ssim = 0.0;
  double depth_accuracy = 0.0;
  double depth_odds_ratio = 0.0;
  std::vector<double> per_plane_mse;
};

EvalReport evaluate(const PlaneStack& reconstruction, const FusionResult& fused, const PlaneStack& truth);

}  // namespace lensless
