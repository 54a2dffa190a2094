#include "lensless/maskopt.hpp"

#include <cmath>

#include "lensless/errors.hpp"
#include "lensless/fft.hpp"
#include "lensless/parallel.hpp"
#include "lensless/rng.hpp"

namespace lensless {

namespace {

using Complex = std::complex<double>;

// 2 * sigmoid(x) - 1 == tanh(x / 2), kept strictly inside (-1, 1) even where tanh rounds to +-1.
Image relax(const Image& x) {
  const double edge = std::nextafter(1.0, 0.0);
  return (0.5 * x).tanh().max(-edge).min(edge);
}

void check_scene(const PlaneStack& scene, const CameraGeometry& geom, const DepthSampling& depths) {
  if (scene.depths != depths.count()) throw DimensionError("scene plane count does not match the depth sampling");
  if (!(scene.grid() == geom.sensor)) throw DimensionError("scene grid does not match the sensor");
}

PsfStack stack_from(const MaskSet& masks, const std::vector<PsfOperator>& ops, const CameraGeometry& geom,
                    const DepthSampling& depths) {
  PsfStack s;
  s.masks = masks.size();
  s.depths = depths.count();
  s.geometry = geom;
  s.sampling = depths;
  for (const auto& m : masks.patterns)
    for (const auto& op : ops) s.psfs.push_back(op.apply(m.values));
  return s;
}

std::vector<PsfOperator> operators_for(const CameraGeometry& geom, const DepthSampling& depths) {
  std::vector<PsfOperator> ops;
  for (double z : depths.depths_mm) ops.emplace_back(geom, z);
  return ops;
}

MeasurementSet noisy_measurements(const PlaneStack& scene, const PsfStack& psfs, double snr_db, std::uint64_t seed,
                                  int workers) {
  SimulateOptions opts;
  opts.workers = workers;
  return add_noise(simulate(scene, psfs, opts), snr_db, derive_seed(seed, "maskopt.noise"));
}

double plane_mse(const PlaneStack& estimate, const PlaneStack& truth) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < truth.planes.size(); ++n) {
    acc += (estimate.planes[n] - truth.planes[n]).square().sum();
    count += static_cast<std::size_t>(truth.planes[n].size());
  }
  return acc / static_cast<double>(count);
}

}  // namespace

RelaxedMasks RelaxedMasks::random(int count, GridSize dims, std::uint64_t seed, double scale) {
  RelaxedMasks v;
  for (int k = 0; k < count; ++k) {
    Rng rng = make_rng(seed, "maskopt.init", static_cast<std::uint64_t>(k));
    std::normal_distribution<double> normal(0.0, scale);
    Image w(dims.rows, dims.cols);
    for (Eigen::Index j = 0; j < w.size(); ++j) w.data()[j] = normal(rng);
    v.logits.push_back(std::move(w));
  }
  return v;
}

RelaxedMasks RelaxedMasks::from_masks(const MaskSet& masks, double scale) {
  RelaxedMasks v;
  for (const auto& m : masks.patterns) v.logits.push_back(scale * m.values.sign());
  return v;
}

MaskSet RelaxedMasks::realize() const {
  MaskSet out;
  for (const auto& w : logits) out.patterns.push_back({relax(slope * w), false});
  return out;
}

double SlopeSchedule::at(int epoch, int epochs) const {
  if (epochs <= 1) return start;
  const double t = static_cast<double>(epoch) / (epochs - 1);
  return start * std::pow(end / start, t);
}

MaskSet binarize(const RelaxedMasks& var) {
  MaskSet out;
  for (const auto& w : var.logits) out.patterns.push_back({(w >= 0.0).select(Image::Ones(w.rows(), w.cols()), -1.0), true});
  return out;
}

double reconstruction_mse(const MaskSet& masks, const PlaneStack& scene, const CameraGeometry& geom,
                          const DepthSampling& depths, const ReconConfig& cfg, double snr_db, std::uint64_t seed) {
  check_scene(scene, geom, depths);
  const PsfStack psfs = stack_from(masks, operators_for(geom, depths), geom, depths);
  const MeasurementSet meas = noisy_measurements(scene, psfs, snr_db, seed, cfg.workers);
  return plane_mse(reconstruct_separable(meas, psfs, cfg), scene);
}

LossGradient loss_and_gradient(const RelaxedMasks& var, const PlaneStack& scene, const CameraGeometry& geom,
                               const DepthSampling& depths, const ReconConfig& cfg, double snr_db,
                               std::uint64_t seed) {
  check_scene(scene, geom, depths);
  if (!(var.dims() == geom.mask)) throw DimensionError("mask variable shape does not match geometry");
  const int K = var.size(), D = depths.count(), C = scene.channels;
  const GridSize g = geom.sensor;
  const std::size_t M = static_cast<std::size_t>(g.count());

  const std::vector<PsfOperator> ops = operators_for(geom, depths);
  const MaskSet realized = var.realize();
  const PsfStack psfs = stack_from(realized, ops, geom, depths);
  const SpectralSystem system(psfs, cfg.workers);
  // Y = Phi L + sigma(Phi) Z with the standard draw Z fixed; sigma follows the signal power.
  SimulateOptions sim;
  sim.workers = cfg.workers;
  const MeasurementSet clean = simulate(scene, psfs, sim);
  const double sigma = noise_sigma(clean, snr_db);
  const std::vector<ComplexImage> clean_spectra = measurement_spectra(clean, cfg.workers);
  std::vector<ComplexImage> noise_spectra, ys = clean_spectra;
  if (sigma > 0.0) {
    for (const Image& z : standard_noise(clean, derive_seed(seed, "maskopt.noise")))
      noise_spectra.push_back(fft2(Image(sigma * z)));
    for (std::size_t n = 0; n < ys.size(); ++n) ys[n] += noise_spectra[n];
  }
  std::vector<ComplexImage> ls(scene.planes.size());
  for (std::size_t n = 0; n < ls.size(); ++n) ls[n] = fft2(scene.planes[n]);

  // Forward: per-frequency solve.
  std::vector<ComplexImage> xs = solve_spectra(system, ys, C, cfg);

  // Loss and its gradient with respect to the real reconstruction, pulled back to spectra:
  // x = Re(ifft2(X)) gives dL/dX = fft2(dL/dx) / M.
  const double count = static_cast<double>(M) * D * C;
  LossGradient out;
  std::vector<ComplexImage> gx(xs.size());
  for (std::size_t n = 0; n < xs.size(); ++n) {
    const Image diff = ifft2_real(xs[n]) - scene.planes[n];
    out.loss += diff.square().sum() / count;
    gx[n] = fft2(Image(diff * (2.0 / count))) / static_cast<double>(M);
  }

  // Backward through X = A^-1 Phi^* Y with A = Phi^* Phi + tau I and Y = Phi L + N:
  //   lambda = A^-1 dL/dX
  //   dL/dPhi = Y lambda^* + Phi lambda L^* - Phi (lambda X^* + X lambda^*) + dL/dtau * dtau/dPhi
  const std::size_t kd = static_cast<std::size_t>(K) * D;
  std::vector<Complex> grad_phi(M * kd);
  // Per-frequency pieces of the noise-level path: dL/dsigma and dP/dPhi directions.
  std::vector<double> grad_sigma_parts(sigma > 0.0 ? M : 0);
  std::vector<Complex> power_dir(sigma > 0.0 ? M * kd : 0);
  const double tau_scale = cfg.tau_rule == TauRule::frobenius_scaled ? 2.0 * cfg.tau0 / static_cast<double>(kd) : 0.0;
  parallel_for(M, cfg.workers, [&](std::size_t begin, std::size_t end) {
    SystemMatrix phi(K, D), grad(K, D);
    Eigen::MatrixXcd normal(D, D);
    Eigen::LLT<Eigen::MatrixXcd> llt(D);
    Eigen::VectorXcd y(K), x(D), l(D), gxm(D), lambda(D), phi_lambda(K), yc(K), nz(K);
    SystemMatrix pdir(K, D);
    for (std::size_t m = begin; m < end; ++m) {
      phi = system.matrix(m);
      const double tau = frequency_tau(phi, cfg.tau_rule, cfg.tau0);
      normal.noalias() = phi.adjoint() * phi;
      normal.diagonal().array() += tau;
      llt.compute(normal);
      grad.setZero();
      pdir.setZero();
      double grad_tau = 0.0, grad_sigma = 0.0;
      for (int c = 0; c < C; ++c) {
        for (int k = 0; k < K; ++k) y(k) = ys[static_cast<std::size_t>(k) * C + c].data()[m];
        for (int i = 0; i < D; ++i) {
          const std::size_t n = static_cast<std::size_t>(i) * C + c;
          x(i) = xs[n].data()[m];
          l(i) = ls[n].data()[m];
          gxm(i) = gx[n].data()[m];
        }
        lambda = llt.solve(gxm);
        phi_lambda.noalias() = phi * lambda;
        grad.noalias() += y * lambda.adjoint();
        grad.noalias() += phi_lambda * l.adjoint();
        grad.noalias() -= phi_lambda * x.adjoint();
        grad.noalias() -= (phi * x) * lambda.adjoint();
        grad_tau -= std::real(x.dot(lambda));
        if (sigma > 0.0) {
          for (int k = 0; k < K; ++k) {
            yc(k) = clean_spectra[static_cast<std::size_t>(k) * C + c].data()[m];
            nz(k) = noise_spectra[static_cast<std::size_t>(k) * C + c].data()[m];
          }
          grad_sigma += std::real(phi_lambda.dot(nz));
          pdir.noalias() += yc * l.adjoint();
        }
      }
      grad += (grad_tau * tau_scale) * phi;
      if (sigma > 0.0) {
        grad_sigma_parts[m] = grad_sigma / sigma;
        std::copy(pdir.data(), pdir.data() + kd, power_dir.begin() + static_cast<std::ptrdiff_t>(m * kd));
      }
      std::copy(grad.data(), grad.data() + kd, grad_phi.begin() + static_cast<std::ptrdiff_t>(m * kd));
    }
  });

  if (sigma > 0.0) {
    // sigma = sqrt(P / snr) with P = sum |Phi L|^2 / (M^2 K C) by Parseval.
    double grad_sigma = 0.0;
    for (double v : grad_sigma_parts) grad_sigma += v;
    const double power = sigma * sigma * std::pow(10.0, snr_db / 10.0);
    const double scale = grad_sigma * sigma / (power * static_cast<double>(M) * M * K * C);
    for (std::size_t j = 0; j < grad_phi.size(); ++j) grad_phi[j] += scale * power_dir[j];
  }

  // Phi = fft2(kernel) gives dL/dkernel = Re(M * ifft2(dL/dPhi)); then undo the kernel shift,
  // apply the interpolation adjoint and the sigmoid derivative.
  std::vector<Image> grad_psf(kd);
  parallel_for(kd, cfg.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t n = b; n < e; ++n) {
      ComplexImage spectrum(g.rows, g.cols);
      for (std::size_t m = 0; m < M; ++m) spectrum.data()[m] = grad_phi[m * kd + n];
      grad_psf[n] = kernel_to_psf(Image(ifft2_real(spectrum) * static_cast<double>(M)));
    }
  });
  for (int k = 0; k < K; ++k) {
    Image grad_mask = Image::Zero(geom.mask.rows, geom.mask.cols);
    for (int i = 0; i < D; ++i) grad_mask += ops[i].adjoint(grad_psf[static_cast<std::size_t>(k) * D + i]);
    // d tanh(s w / 2) / dw = (s / 2) (1 - tanh^2) = 2 s sigmoid (1 - sigmoid).
    const Image t = (0.5 * var.slope * var.logits[k]).tanh();
    out.gradient.push_back(grad_mask * (0.5 * var.slope) * (1.0 - t.square()));
  }
  return out;
}

OptimResult optimize_masks(const RelaxedMasks& init, const OptimConfig& cfg, const CameraGeometry& geom,
                           const DepthSampling& depths, std::uint64_t seed) {
  if (cfg.scenes.empty()) throw DomainError("mask optimization needs at least one training scene");
  if (cfg.epochs < 0) throw DomainError("epochs must be nonnegative");
  if (!(cfg.learning_rate > 0.0)) throw DomainError("learning rate must be positive");

  OptimResult result;
  result.variable = init;
  RelaxedMasks& var = result.variable;
  std::vector<Image> first(var.size()), second(var.size());
  for (int k = 0; k < var.size(); ++k) {
    first[k] = Image::Zero(var.dims().rows, var.dims().cols);
    second[k] = first[k];
  }

  double initial_loss = -1.0;
  std::uint64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    var.slope = cfg.slope.at(epoch, cfg.epochs);
    double epoch_loss = 0.0;
    for (const auto& scene : cfg.scenes) {
      const LossGradient lg = loss_and_gradient(var, scene, geom, depths, cfg.recon, cfg.snr_db,
                                                derive_seed(seed, "maskopt.step", step));
      ++step;
      if (!std::isfinite(lg.loss)) throw DivergenceError("mask optimization produced a non-finite loss");
      if (initial_loss < 0.0) initial_loss = lg.loss;
      if (lg.loss > cfg.divergence_factor * initial_loss)
        throw DivergenceError("mask optimization diverged at epoch " + std::to_string(epoch));
      epoch_loss += lg.loss;

      const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (int k = 0; k < var.size(); ++k) {
        first[k] = cfg.beta1 * first[k] + (1.0 - cfg.beta1) * lg.gradient[k];
        second[k] = cfg.beta2 * second[k] + (1.0 - cfg.beta2) * lg.gradient[k].square();
        var.logits[k] -= cfg.learning_rate * (first[k] / bias1) / ((second[k] / bias2).sqrt() + cfg.epsilon);
      }
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(cfg.scenes.size()));
  }
  result.masks = binarize(var);
  return result;
}

}  // namespace lensless
