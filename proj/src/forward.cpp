#include "lensless/forward.hpp"

#include <algorithm>
#include <cmath>

#include "lensless/errors.hpp"
#include "lensless/fft.hpp"
#include "lensless/parallel.hpp"
#include "lensless/rng.hpp"

namespace lensless {

PlaneStack PlaneStack::zeros(int depths, int channels, GridSize grid, DepthSampling sampling) {
  PlaneStack s;
  s.depths = depths;
  s.channels = channels;
  s.sampling = std::move(sampling);
  s.planes.assign(static_cast<std::size_t>(depths) * channels, Image::Zero(grid.rows, grid.cols));
  return s;
}

namespace {

void check_compatible(const PlaneStack& scene, const PsfStack& psfs) {
  if (scene.depths != psfs.depths)
    throw DimensionError("scene has " + std::to_string(scene.depths) + " planes but PSF stack has " +
                         std::to_string(psfs.depths));
  if (scene.channels < 1 || scene.planes.size() != static_cast<std::size_t>(scene.depths) * scene.channels)
    throw DimensionError("malformed plane stack");
  if (!(scene.grid() == psfs.grid())) throw DimensionError("scene grid does not match the PSF grid");
}

// Largest distance, per axis, of a nonzero PSF sample from the kernel origin.
std::pair<int, int> psf_half_support(const PsfStack& psfs) {
  int hr = 0, hc = 0;
  for (const auto& p : psfs.psfs) {
    const int r0 = static_cast<int>(p.rows() / 2), c0 = static_cast<int>(p.cols() / 2);
    for (int r = 0; r < p.rows(); ++r)
      for (int c = 0; c < p.cols(); ++c)
        if (p(r, c) != 0.0) {
          hr = std::max(hr, std::abs(r - r0));
          hc = std::max(hc, std::abs(c - c0));
        }
  }
  return {hr, hc};
}

MeasurementSet simulate_circular(const PlaneStack& scene, const PsfStack& psfs, int workers) {
  const GridSize g = scene.grid();
  std::vector<ComplexImage> psf_spectra(psfs.psfs.size());
  parallel_for(psf_spectra.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t n = b; n < e; ++n) psf_spectra[n] = transfer_function(psfs.psfs[n]);
  });
  std::vector<ComplexImage> scene_spectra(scene.planes.size());
  parallel_for(scene_spectra.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t n = b; n < e; ++n) scene_spectra[n] = fft2(scene.planes[n]);
  });

  MeasurementSet out;
  out.masks = psfs.masks;
  out.channels = scene.channels;
  out.mode = ConvolutionMode::circular;
  out.frames.resize(static_cast<std::size_t>(out.masks) * out.channels);
  parallel_for(out.frames.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t n = b; n < e; ++n) {
      const int k = static_cast<int>(n) / out.channels;
      const int c = static_cast<int>(n) % out.channels;
      ComplexImage acc = ComplexImage::Zero(g.rows, g.cols);
      for (int i = 0; i < scene.depths; ++i)
        acc += psf_spectra[static_cast<std::size_t>(k) * psfs.depths + i] *
               scene_spectra[static_cast<std::size_t>(i) * scene.channels + c];
      out.frames[n] = ifft2_real(acc);
    }
  });
  return out;
}

MeasurementSet simulate_linear(const PlaneStack& scene, const PsfStack& psfs, int max_pad, int workers) {
  const GridSize g = scene.grid();
  const auto [hr, hc] = psf_half_support(psfs);
  const int pad_r = 2 * hr, pad_c = 2 * hc;
  if (pad_r > max_pad || pad_c > max_pad)
    throw DomainError("linear_cropped mode needs padding " + std::to_string(std::max(pad_r, pad_c)) +
                      " beyond the configured limit " + std::to_string(max_pad));
  const int pr = g.rows + pad_r, pc = g.cols + pad_c;
  const int r0 = g.rows / 2, c0 = g.cols / 2;

  // Kernel tap at offset (dr, dc) from the origin is psf(r0 + dr, c0 + dc); offsets wrap
  // into the padded grid, which is large enough that no tap aliases onto the sensor window.
  auto padded_kernel = [&](const Image& psf) {
    Image k = Image::Zero(pr, pc);
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c) {
        if (psf(r, c) == 0.0) continue;
        k(((r - r0) % pr + pr) % pr, ((c - c0) % pc + pc) % pc) = psf(r, c);
      }
    return fft2(k);
  };
  std::vector<ComplexImage> psf_spectra(psfs.psfs.size());
  parallel_for(psf_spectra.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t n = b; n < e; ++n) psf_spectra[n] = padded_kernel(psfs.psfs[n]);
  });
  std::vector<ComplexImage> scene_spectra(scene.planes.size());
  parallel_for(scene_spectra.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t n = b; n < e; ++n) {
      Image padded = Image::Zero(pr, pc);
      padded.topLeftCorner(g.rows, g.cols) = scene.planes[n];
      scene_spectra[n] = fft2(padded);
    }
  });

  MeasurementSet out;
  out.masks = psfs.masks;
  out.channels = scene.channels;
  out.mode = ConvolutionMode::linear_cropped;
  out.frames.resize(static_cast<std::size_t>(out.masks) * out.channels);
  parallel_for(out.frames.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t n = b; n < e; ++n) {
      const int k = static_cast<int>(n) / out.channels;
      const int c = static_cast<int>(n) % out.channels;
      ComplexImage acc = ComplexImage::Zero(pr, pc);
      for (int i = 0; i < scene.depths; ++i)
        acc += psf_spectra[static_cast<std::size_t>(k) * psfs.depths + i] *
               scene_spectra[static_cast<std::size_t>(i) * scene.channels + c];
      out.frames[n] = ifft2_real(acc).topLeftCorner(g.rows, g.cols);
    }
  });
  return out;
}

}  // namespace

MeasurementSet simulate(const PlaneStack& scene, const PsfStack& psfs, const SimulateOptions& opts) {
  check_compatible(scene, psfs);
  return opts.mode == ConvolutionMode::circular ? simulate_circular(scene, psfs, opts.workers)
                                                 : simulate_linear(scene, psfs, opts.max_pad, opts.workers);
}

double noise_sigma(const MeasurementSet& meas, double snr_db) {
  if (std::isnan(snr_db) || snr_db == -INFINITY) throw DomainError("invalid SNR");
  if (std::isinf(snr_db)) return 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (const auto& f : meas.frames) {
    sum_sq += f.square().sum();
    count += static_cast<std::size_t>(f.size());
  }
  if (count == 0) return 0.0;
  return std::sqrt(sum_sq / static_cast<double>(count) / std::pow(10.0, snr_db / 10.0));
}

std::vector<Image> standard_noise(const MeasurementSet& meas, std::uint64_t seed) {
  std::vector<Image> out;
  out.reserve(meas.frames.size());
  // One stream per frame so the draws do not depend on traversal order.
  for (std::size_t n = 0; n < meas.frames.size(); ++n) {
    Rng rng = make_rng(seed, "forward.noise", n);
    std::normal_distribution<double> normal(0.0, 1.0);
    Image z(meas.frames[n].rows(), meas.frames[n].cols());
    for (Eigen::Index j = 0; j < z.size(); ++j) z.data()[j] = normal(rng);
    out.push_back(std::move(z));
  }
  return out;
}

MeasurementSet add_noise(MeasurementSet meas, double snr_db, std::uint64_t seed) {
  const double sigma = noise_sigma(meas, snr_db);
  if (std::isinf(snr_db)) return meas;
  const std::vector<Image> z = standard_noise(meas, seed);
  for (std::size_t n = 0; n < meas.frames.size(); ++n) meas.frames[n] += sigma * z[n];
  meas.snr_db = snr_db;
  return meas;
}

MeasurementSet simulate_split_capture(const PlaneStack& scene, const MaskSet& masks,
                                      const CameraGeometry& geom, const DepthSampling& depths,
                                      double snr_db, std::uint64_t seed, const SimulateOptions& opts) {
  masks.validate();
  if (!masks.is_binary()) throw DomainError("split capture requires binary +-1 masks");
  const int K = masks.size();
  MaskSet parts;
  for (const auto& m : masks.patterns) {
    parts.patterns.push_back({(1.0 + m.values) / 2.0, false});
    parts.patterns.push_back({(1.0 - m.values) / 2.0, false});
  }
  const PsfStack psfs = synthesize_stack(parts, geom, depths, opts.workers);
  // Positive and negative captures share one noise level, set by the whole capture set.
  const MeasurementSet captures = add_noise(simulate(scene, psfs, opts), snr_db, seed);

  MeasurementSet out;
  out.masks = K;
  out.channels = captures.channels;
  out.mode = captures.mode;
  out.snr_db = captures.snr_db;
  for (int k = 0; k < K; ++k)
    for (int c = 0; c < out.channels; ++c) out.frames.push_back(captures.at(2 * k, c) - captures.at(2 * k + 1, c));
  return out;
}

}  // namespace lensless
