#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lensless/geometry.hpp"
#include "lensless/psf.hpp"
#include "lensless/types.hpp"

namespace lensless {

// D planes x C channels on the sensor grid. Plane 0 is the nearest.
struct PlaneStack {
  int depths = 0;
  int channels = 0;
  DepthSampling sampling;
  std::vector<Image> planes;

  static PlaneStack zeros(int depths, int channels, GridSize grid, DepthSampling sampling = {});

  GridSize grid() const { return planes.empty() ? GridSize{} : grid_of(planes.front()); }
  const Image& at(int i, int c) const { return planes[static_cast<std::size_t>(i) * channels + c]; }
  Image& at(int i, int c) { return planes[static_cast<std::size_t>(i) * channels + c]; }
};

enum class ConvolutionMode { circular, linear_cropped };

// K frames x C channels.
struct MeasurementSet {
  int masks = 0;
  int channels = 0;
  std::optional<double> snr_db;
  ConvolutionMode mode = ConvolutionMode::circular;
  std::vector<Image> frames;

  GridSize grid() const { return frames.empty() ? GridSize{} : grid_of(frames.front()); }
  const Image& at(int k, int c) const { return frames[static_cast<std::size_t>(k) * channels + c]; }
  Image& at(int k, int c) { return frames[static_cast<std::size_t>(k) * channels + c]; }
};

struct SimulateOptions {
  ConvolutionMode mode = ConvolutionMode::circular;
  // linear_cropped pads each axis by the PSF support; refuse pads beyond this many pixels.
  int max_pad = 2048;
  int workers = 0;
};

// frames(k, c) = sum_i psf(k, i) (*) plane(i, c), noise-free.
MeasurementSet simulate(const PlaneStack& scene, const PsfStack& psfs, const SimulateOptions& opts = {});

// Noise standard deviation for a target SNR: sqrt(mean square over all frames / 10^(snr/10)).
// Zero for snr_db = +inf.
double noise_sigma(const MeasurementSet& meas, double snr_db);

// Unit-variance Gaussian draws shaped like the frames of `meas`, one stream per frame.
std::vector<Image> standard_noise(const MeasurementSet& meas, std::uint64_t seed);

// Adds i.i.d. Gaussian noise at the given SNR, where the signal power is the mean square over
// every frame and channel of the set. snr_db = +inf returns the input unchanged.
MeasurementSet add_noise(MeasurementSet meas, double snr_db, std::uint64_t seed);

// Emulates signed masks on nonnegative hardware: captures with (1 + m)/2 and (1 - m)/2,
// each noisy, and returns their difference.
MeasurementSet simulate_split_capture(const PlaneStack& scene, const MaskSet& masks,
                                      const CameraGeometry& geom, const DepthSampling& depths,
                                      double snr_db, std::uint64_t seed,
                                      const SimulateOptions& opts = {});

}  // namespace lensless
