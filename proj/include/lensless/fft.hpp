#pragma once

#include "lensless/types.hpp"

namespace lensless {

// 2D DFT convention used throughout: forward unnormalized, inverse scaled by 1/M.
ComplexImage fft2(const ComplexImage& in);
ComplexImage fft2(const Image& in);
ComplexImage ifft2(const ComplexImage& in);
Image ifft2_real(const ComplexImage& in);

// In-place variants for hot loops; `data` is row-major rows x cols.
void fft2_inplace(std::complex<double>* data, int rows, int cols);
void ifft2_inplace(std::complex<double>* data, int rows, int cols);

// Circular shift: out(r, c) = in((r - dr) mod rows, (c - dc) mod cols).
template <typename Derived>
Array2<typename Derived::Scalar> circshift(const Eigen::DenseBase<Derived>& in, int dr, int dc) {
  const int rows = static_cast<int>(in.rows());
  const int cols = static_cast<int>(in.cols());
  Array2<typename Derived::Scalar> out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const int sr = ((r - dr) % rows + rows) % rows;
    for (int c = 0; c < cols; ++c) out(r, c) = in(sr, ((c - dc) % cols + cols) % cols);
  }
  return out;
}

// A PSF image is stored with its optical-axis sample at (rows/2, cols/2). The convolution
// kernel moves that sample to the origin; an impulse at the sensor center then reproduces
// the PSF image exactly.
inline Image psf_to_kernel(const Image& psf) {
  return circshift(psf, -static_cast<int>(psf.rows() / 2), -static_cast<int>(psf.cols() / 2));
}
inline Image kernel_to_psf(const Image& kernel) {
  return circshift(kernel, static_cast<int>(kernel.rows() / 2), static_cast<int>(kernel.cols() / 2));
}

// Transfer function of a centered PSF image.
inline ComplexImage transfer_function(const Image& psf) { return fft2(psf_to_kernel(psf)); }

}  // namespace lensless
