#pragma once

#include <vector>

#include "lensless/forward.hpp"
#include "lensless/psf.hpp"
#include "lensless/types.hpp"

namespace lensless {

enum class TauRule {
  constant,          // tau_m = tau0
  frobenius_scaled,  // tau_m = tau0 * ||Phi_m||_F^2 / (K * D)
};

enum class SolverKind { closed_form, conjugate_gradient };

struct ReconConfig {
  double tau0 = 1e-3;
  TauRule tau_rule = TauRule::frobenius_scaled;
  SolverKind solver = SolverKind::closed_form;
  double cg_tol = 1e-12;
  int cg_max_iter = 200;
  int workers = 0;
};

using SystemMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Transfer functions of a K x D PSF stack, stored frequency-major so that the K x D system
// matrix of one frequency is contiguous.
class SpectralSystem {
 public:
  explicit SpectralSystem(const PsfStack& psfs, int workers = 0);

  int masks() const { return masks_; }
  int depths() const { return depths_; }
  GridSize grid() const { return grid_; }
  std::size_t frequencies() const { return static_cast<std::size_t>(grid_.count()); }

  Eigen::Map<const SystemMatrix> matrix(std::size_t m) const {
    return Eigen::Map<const SystemMatrix>(data_.data() + m * masks_ * depths_, masks_, depths_);
  }

 private:
  int masks_ = 0;
  int depths_ = 0;
  GridSize grid_;
  std::vector<std::complex<double>> data_;
};

// One decoupled least-squares problem: Y = Phi * L at a single frequency.
struct FreqSystem {
  int row = 0;
  int col = 0;
  SystemMatrix phi;
  Eigen::VectorXcd y;
  double tau = 0.0;
};

double frequency_tau(const Eigen::Ref<const SystemMatrix>& phi, TauRule rule, double tau0);

// Frequency-domain view of a measurement set: spectra(k * C + c).
std::vector<ComplexImage> measurement_spectra(const MeasurementSet& meas, int workers = 0);

FreqSystem frequency_system(const SpectralSystem& system, const std::vector<ComplexImage>& meas_spectra,
                            int channels, int channel, int row, int col, const ReconConfig& cfg);

// Per-frequency regularized solve. Returns plane spectra indexed (i * C + c).
std::vector<ComplexImage> solve_spectra(const SpectralSystem& system,
                                        const std::vector<ComplexImage>& meas_spectra, int channels,
                                        const ReconConfig& cfg);

// Closed-form multi-plane reconstruction, one small system per frequency.
PlaneStack reconstruct_separable(const MeasurementSet& meas, const PsfStack& psfs, const ReconConfig& cfg);

// Dense M*K x M*D Tikhonov solve; test oracle only. Requires M * D <= kDenseOracleCap.
inline constexpr int kDenseOracleCap = 4096;
PlaneStack reconstruct_dense_oracle(const MeasurementSet& meas, const PsfStack& psfs, double tau);

// Single-plane focusing estimate for plane `z_index`.
PlaneStack reconstruct_sweepcam(const MeasurementSet& meas, const PsfStack& psfs, int z_index, double tau);

// Sub-stack holding depth plane `i` only.
PsfStack slice_depth(const PsfStack& psfs, int i);

// 2-norm condition number of Phi^* Phi + tau_m I at each frequency.
Image condition_report(const PsfStack& psfs, const ReconConfig& cfg);

struct ConditionSummary {
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  double mean_log10 = 0.0;
};
ConditionSummary summarize_conditions(const Image& conditions);

}  // namespace lensless
