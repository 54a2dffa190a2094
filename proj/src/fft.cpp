#include "lensless/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace lensless {

namespace {

// The FFTW planner is not thread-safe, execution is. Plans are created once per shape with
// FFTW_ESTIMATE | FFTW_UNALIGNED so they do not depend on timing or buffer alignment, which
// keeps results bit-identical run to run.
fftw_plan plan_for(int rows, int cols, int sign) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, int>, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_tuple(rows, cols, sign);
  auto it = plans.find(key);
  if (it != plans.end()) return it->second;
  fftw_complex* buf = fftw_alloc_complex(static_cast<std::size_t>(rows) * cols);
  fftw_plan p = fftw_plan_dft_2d(rows, cols, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
  plans.emplace(key, p);
  return p;
}

void execute(std::complex<double>* data, int rows, int cols, int sign) {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan_for(rows, cols, sign), p, p);
}

}  // namespace

void fft2_inplace(std::complex<double>* data, int rows, int cols) {
  execute(data, rows, cols, FFTW_FORWARD);
}

void ifft2_inplace(std::complex<double>* data, int rows, int cols) {
  execute(data, rows, cols, FFTW_BACKWARD);
  const double scale = 1.0 / (static_cast<double>(rows) * cols);
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  for (std::size_t i = 0; i < n; ++i) data[i] *= scale;
}

ComplexImage fft2(const ComplexImage& in) {
  ComplexImage out = in;
  fft2_inplace(out.data(), static_cast<int>(out.rows()), static_cast<int>(out.cols()));
  return out;
}

ComplexImage fft2(const Image& in) { return fft2(ComplexImage(in.cast<std::complex<double>>())); }

ComplexImage ifft2(const ComplexImage& in) {
  ComplexImage out = in;
  ifft2_inplace(out.data(), static_cast<int>(out.rows()), static_cast<int>(out.cols()));
  return out;
}

Image ifft2_real(const ComplexImage& in) { return ifft2(in).real(); }

}  // namespace lensless
