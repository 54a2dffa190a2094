#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace lensless {

// Row-major so that flat storage matches the on-disk tensor layout.
template <typename Scalar>
using Array2 = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Image = Array2<double>;
using ComplexImage = Array2<std::complex<double>>;
using IndexMap = Array2<int>;
using BoolMap = Array2<bool>;

struct GridSize {
  int rows = 0;
  int cols = 0;

  int count() const { return rows * cols; }
  bool operator==(const GridSize&) const = default;
};

template <typename Derived>
GridSize grid_of(const Eigen::DenseBase<Derived>& a) {
  return {static_cast<int>(a.rows()), static_cast<int>(a.cols())};
}

}  // namespace lensless
