#include "lensless/recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lensless/errors.hpp"
#include "lensless/fft.hpp"
#include "lensless/parallel.hpp"

namespace lensless {

namespace {

using Complex = std::complex<double>;
using NormalMatrix = Eigen::MatrixXcd;

void check_inputs(const MeasurementSet& meas, const PsfStack& psfs) {
  if (meas.masks != psfs.masks)
    throw DimensionError("measurement set has " + std::to_string(meas.masks) + " frames but PSF stack has " +
                         std::to_string(psfs.masks) + " masks");
  if (meas.channels < 1 || meas.frames.size() != static_cast<std::size_t>(meas.masks) * meas.channels)
    throw DimensionError("malformed measurement set");
  if (!(meas.grid() == psfs.grid())) throw DimensionError("measurement grid does not match the PSF grid");
  if (meas.mode != ConvolutionMode::circular)
    throw DimensionError("frequency-domain reconstruction assumes circular-model measurements");
}

// Conjugate gradients on the Hermitian positive definite system a x = b.
Eigen::VectorXcd conjugate_gradient(const NormalMatrix& a, const Eigen::VectorXcd& b, double tol, int max_iter) {
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(b.size());
  Eigen::VectorXcd r = b;
  Eigen::VectorXcd p = r;
  double rr = r.squaredNorm();
  const double stop = tol * tol * b.squaredNorm();
  for (int it = 0; it < max_iter && rr > stop; ++it) {
    const Eigen::VectorXcd ap = a * p;
    const Complex pap = p.dot(ap);
    if (std::abs(pap) == 0.0) break;
    const Complex step = rr / pap;
    x += step * p;
    r -= step * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  return x;
}

// Reusable per-worker solver for min |Phi x - y|^2 + tau |x|^2. The closed form runs Householder
// QR on the stacked matrix [Phi; sqrt(tau) I], which has the same minimizer as the normal
// equations but only the square root of their condition number.
class FrequencySolver {
 public:
  FrequencySolver(int masks, int depths, const ReconConfig& cfg)
      : cfg_(cfg), masks_(masks), depths_(depths), stacked_(masks + depths, depths), qr_(masks + depths, depths),
        rhs_(Eigen::VectorXcd::Zero(masks + depths)) {}

  // Returns false when tau == 0 and Phi is numerically rank deficient.
  bool factor(const Eigen::Ref<const SystemMatrix>& phi, double tau) {
    if (cfg_.solver == SolverKind::conjugate_gradient) {
      phi_ = phi;
      normal_.noalias() = phi.adjoint() * phi;
      normal_.diagonal().array() += tau;
      if (tau == 0.0) {
        Eigen::LLT<NormalMatrix> llt(normal_);
        const double scale = normal_.diagonal().real().maxCoeff();
        if (llt.info() != Eigen::Success || !(scale > 0.0) ||
            llt.matrixLLT().diagonal().real().cwiseAbs2().minCoeff() <= 1e-13 * scale)
          return false;
      }
      return true;
    }
    stacked_.topRows(masks_) = phi;
    stacked_.bottomRows(depths_).setZero();
    stacked_.bottomRows(depths_).diagonal().setConstant(std::sqrt(tau));
    qr_.compute(stacked_);
    if (tau == 0.0) {
      const double scale = phi.colwise().squaredNorm().maxCoeff();
      const auto r = qr_.matrixQR().topRows(depths_).diagonal();
      if (!(scale > 0.0) || r.cwiseAbs2().minCoeff() <= 1e-13 * scale) return false;
    }
    return true;
  }

  Eigen::VectorXcd solve(const Eigen::VectorXcd& y) {
    if (cfg_.solver == SolverKind::conjugate_gradient)
      return conjugate_gradient(normal_, phi_.adjoint() * y, cfg_.cg_tol, cfg_.cg_max_iter);
    rhs_.head(masks_) = y;
    return qr_.solve(rhs_);
  }

 private:
  const ReconConfig& cfg_;
  int masks_;
  int depths_;
  SystemMatrix phi_;
  NormalMatrix normal_;
  Eigen::MatrixXcd stacked_;
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr_;
  Eigen::VectorXcd rhs_;
};

Image real_part_checked(const ComplexImage& spatial) {
  const double real_energy = spatial.real().square().sum();
  const double imag_energy = spatial.imag().square().sum();
  if (imag_energy > 1e-6 * real_energy + std::numeric_limits<double>::min())
    throw NumericalError("reconstruction has a non-negligible imaginary part");
  return spatial.real();
}

PlaneStack planes_from_spectra(std::vector<ComplexImage> spectra, int depths, int channels,
                               const DepthSampling& sampling, int workers) {
  PlaneStack out;
  out.depths = depths;
  out.channels = channels;
  out.sampling = sampling;
  out.planes.resize(spectra.size());
  parallel_for(spectra.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t n = b; n < e; ++n) {
      ifft2_inplace(spectra[n].data(), static_cast<int>(spectra[n].rows()), static_cast<int>(spectra[n].cols()));
      out.planes[n] = real_part_checked(spectra[n]);
    }
  });
  return out;
}

}  // namespace

SpectralSystem::SpectralSystem(const PsfStack& psfs, int workers)
    : masks_(psfs.masks), depths_(psfs.depths), grid_(psfs.grid()) {
  if (masks_ < 1 || depths_ < 1 || psfs.psfs.size() != static_cast<std::size_t>(masks_) * depths_)
    throw DimensionError("malformed PSF stack");
  const std::size_t kd = static_cast<std::size_t>(masks_) * depths_;
  data_.resize(frequencies() * kd);
  parallel_for(kd, workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t n = b; n < e; ++n) {
      const ComplexImage spectrum = transfer_function(psfs.psfs[n]);
      for (std::size_t m = 0; m < frequencies(); ++m) data_[m * kd + n] = spectrum.data()[m];
    }
  });
}

double frequency_tau(const Eigen::Ref<const SystemMatrix>& phi, TauRule rule, double tau0) {
  if (rule == TauRule::constant) return tau0;
  return tau0 * phi.squaredNorm() / static_cast<double>(phi.rows() * phi.cols());
}

std::vector<ComplexImage> measurement_spectra(const MeasurementSet& meas, int workers) {
  std::vector<ComplexImage> out(meas.frames.size());
  parallel_for(out.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t n = b; n < e; ++n) out[n] = fft2(meas.frames[n]);
  });
  return out;
}

FreqSystem frequency_system(const SpectralSystem& system, const std::vector<ComplexImage>& meas_spectra,
                            int channels, int channel, int row, int col, const ReconConfig& cfg) {
  FreqSystem f;
  f.row = row;
  f.col = col;
  const std::size_t m = static_cast<std::size_t>(row) * system.grid().cols + col;
  f.phi = system.matrix(m);
  f.y.resize(system.masks());
  for (int k = 0; k < system.masks(); ++k)
    f.y(k) = meas_spectra[static_cast<std::size_t>(k) * channels + channel](row, col);
  f.tau = frequency_tau(f.phi, cfg.tau_rule, cfg.tau0);
  return f;
}

std::vector<ComplexImage> solve_spectra(const SpectralSystem& system,
                                        const std::vector<ComplexImage>& meas_spectra, int channels,
                                        const ReconConfig& cfg) {
  if (cfg.tau0 < 0.0) throw DomainError("tau0 must be nonnegative");
  if (cfg.solver == SolverKind::conjugate_gradient && !(cfg.cg_tol > 0.0))
    throw DomainError("cg_tol must be positive");
  const int K = system.masks(), D = system.depths();
  const GridSize g = system.grid();
  if (meas_spectra.size() != static_cast<std::size_t>(K) * channels)
    throw DimensionError("measurement spectra count does not match K x C");

  std::vector<ComplexImage> planes(static_cast<std::size_t>(D) * channels, ComplexImage(g.rows, g.cols));
  parallel_for(system.frequencies(), cfg.workers, [&](std::size_t begin, std::size_t end) {
    FrequencySolver solver(K, D, cfg);
    SystemMatrix phi(K, D);
    Eigen::VectorXcd y(K), x(D);
    for (std::size_t m = begin; m < end; ++m) {
      phi = system.matrix(m);
      const double tau = frequency_tau(phi, cfg.tau_rule, cfg.tau0);
      if (!solver.factor(phi, tau))
        throw SingularSystemError(static_cast<int>(m) / g.cols, static_cast<int>(m) % g.cols);
      for (int c = 0; c < channels; ++c) {
        for (int k = 0; k < K; ++k) y(k) = meas_spectra[static_cast<std::size_t>(k) * channels + c].data()[m];
        x = solver.solve(y);
        for (int i = 0; i < D; ++i) planes[static_cast<std::size_t>(i) * channels + c].data()[m] = x(i);
      }
    }
  });
  return planes;
}

PlaneStack reconstruct_separable(const MeasurementSet& meas, const PsfStack& psfs, const ReconConfig& cfg) {
  check_inputs(meas, psfs);
  const SpectralSystem system(psfs, cfg.workers);
  auto spectra = solve_spectra(system, measurement_spectra(meas, cfg.workers), meas.channels, cfg);
  return planes_from_spectra(std::move(spectra), psfs.depths, meas.channels, psfs.sampling, cfg.workers);
}

PlaneStack reconstruct_dense_oracle(const MeasurementSet& meas, const PsfStack& psfs, double tau) {
  check_inputs(meas, psfs);
  if (tau < 0.0) throw DomainError("tau must be nonnegative");
  const GridSize g = psfs.grid();
  const int M = g.count(), K = psfs.masks, D = psfs.depths;
  if (M * D > kDenseOracleCap)
    throw DimensionError("dense oracle limited to M*D <= " + std::to_string(kDenseOracleCap));

  // Block (k, i) is the circulant matrix of kernel(k, i): H[(k, n), (i, n')] = h((n - n') mod grid).
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(M * K, M * D);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < D; ++i) {
      const Image kernel = psf_to_kernel(psfs.at(k, i));
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c)
          for (int r2 = 0; r2 < g.rows; ++r2)
            for (int c2 = 0; c2 < g.cols; ++c2)
              h(k * M + r * g.cols + c, i * M + r2 * g.cols + c2) =
                  kernel((r - r2 + g.rows) % g.rows, (c - c2 + g.cols) % g.cols);
    }
  // Least squares on [H; sqrt(tau) I] rather than the normal equations, which would square the
  // condition number of an already ill-posed system.
  Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(M * K + M * D, M * D);
  stacked.topRows(M * K) = h;
  stacked.bottomRows(M * D).diagonal().setConstant(std::sqrt(tau));
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);

  PlaneStack out = PlaneStack::zeros(D, meas.channels, g, psfs.sampling);
  for (int c = 0; c < meas.channels; ++c) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(M * K + M * D);
    for (int k = 0; k < K; ++k) y.segment(k * M, M) = meas.at(k, c).reshaped<Eigen::RowMajor>().matrix();
    const Eigen::VectorXd l = qr.solve(y);
    for (int i = 0; i < D; ++i)
      out.at(i, c) = l.segment(i * M, M).reshaped<Eigen::RowMajor>(g.rows, g.cols).array();
  }
  return out;
}

PsfStack slice_depth(const PsfStack& psfs, int i) {
  if (i < 0 || i >= psfs.depths) throw DimensionError("plane index out of range");
  PsfStack out;
  out.masks = psfs.masks;
  out.depths = 1;
  out.geometry = psfs.geometry;
  if (psfs.sampling.count() == psfs.depths) {
    out.sampling.alphas = {psfs.sampling.alphas[i]};
    out.sampling.depths_mm = {psfs.sampling.depths_mm[i]};
    out.sampling.z_min_mm = out.sampling.z_max_mm = psfs.sampling.depths_mm[i];
  }
  for (int k = 0; k < psfs.masks; ++k) out.psfs.push_back(psfs.at(k, i));
  return out;
}

PlaneStack reconstruct_sweepcam(const MeasurementSet& meas, const PsfStack& psfs, int z_index, double tau) {
  check_inputs(meas, psfs);
  if (z_index < 0 || z_index >= psfs.depths) throw DimensionError("plane index out of range");
  if (tau < 0.0) throw DomainError("tau must be nonnegative");
  const PsfStack plane = slice_depth(psfs, z_index);
  const GridSize g = plane.grid();
  const int K = plane.masks, C = meas.channels;

  std::vector<ComplexImage> transfer(K);
  for (int k = 0; k < K; ++k) transfer[k] = transfer_function(plane.at(k, 0));
  const std::vector<ComplexImage> ys = measurement_spectra(meas);

  Image denom = Image::Constant(g.rows, g.cols, tau);
  for (int k = 0; k < K; ++k) denom += transfer[k].abs2();
  if ((denom <= 0.0).any()) {
    Eigen::Index r = 0, c = 0;
    denom.minCoeff(&r, &c);
    throw SingularSystemError(static_cast<int>(r), static_cast<int>(c));
  }
  std::vector<ComplexImage> spectra(C);
  for (int c = 0; c < C; ++c) {
    ComplexImage num = ComplexImage::Zero(g.rows, g.cols);
    for (int k = 0; k < K; ++k) num += transfer[k].conjugate() * ys[static_cast<std::size_t>(k) * C + c];
    spectra[c] = num / denom.cast<Complex>();
  }
  return planes_from_spectra(std::move(spectra), 1, C, plane.sampling, 1);
}

Image condition_report(const PsfStack& psfs, const ReconConfig& cfg) {
  const SpectralSystem system(psfs, cfg.workers);
  const GridSize g = system.grid();
  Image out(g.rows, g.cols);
  parallel_for(system.frequencies(), cfg.workers, [&](std::size_t begin, std::size_t end) {
    Eigen::SelfAdjointEigenSolver<NormalMatrix> eig(system.depths());
    NormalMatrix normal(system.depths(), system.depths());
    for (std::size_t m = begin; m < end; ++m) {
      const auto phi = system.matrix(m);
      normal.noalias() = phi.adjoint() * phi;
      eig.compute(normal, Eigen::EigenvaluesOnly);
      const double tau = frequency_tau(phi, cfg.tau_rule, cfg.tau0);
      const double lo = std::max(eig.eigenvalues().minCoeff(), 0.0) + tau;
      const double hi = std::max(eig.eigenvalues().maxCoeff(), 0.0) + tau;
      out.data()[m] = lo > 0.0 ? hi / lo : (hi > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    }
  });
  return out;
}

ConditionSummary summarize_conditions(const Image& conditions) {
  ConditionSummary s;
  if (conditions.size() == 0) return s;
  std::vector<double> v(conditions.data(), conditions.data() + conditions.size());
  std::sort(v.begin(), v.end());
  s.min = v.front();
  s.max = v.back();
  s.median = v[v.size() / 2];
  double acc = 0.0;
  for (double c : v) acc += std::log10(c);
  s.mean_log10 = acc / static_cast<double>(v.size());
  return s;
}

}  // namespace lensless
