#include "lensless/psf.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "lensless/errors.hpp"
#include "test_support.hpp"

namespace lensless {
namespace {

using testing::explicit_psf_matrix;
using testing::flat;
using testing::random_image;
using testing::small_geometry;

const double kInf = std::numeric_limits<double>::infinity();

TEST(Psf, MatchesExplicitBilinearWeights) {
  std::mt19937_64 rng(7);
  for (const auto& [sensor, mask] : {std::pair<GridSize, GridSize>{{9, 9}, {5, 5}}, {{8, 12}, {5, 7}}, {{16, 16}, {7, 6}}}) {
    const auto g = small_geometry(sensor, mask);
    for (double z : {12.0, 20.0, 55.0, kInf}) {
      const Image m = random_image(mask, rng, -1, 1);
      const Eigen::VectorXd expected = explicit_psf_matrix(g, z) * flat(m);
      const Image psf = synthesize_psf({m, false}, g, z);
      EXPECT_LT((flat(psf) - expected).cwiseAbs().maxCoeff(), 1e-14) << "z=" << z;
    }
  }
}

TEST(Psf, ZeroMaskGivesZeroPsf) {
  const auto g = small_geometry({16, 16}, {5, 5});
  EXPECT_EQ(synthesize_psf({Image::Zero(5, 5), false}, g, 25.0).abs().maxCoeff(), 0.0);
}

TEST(Psf, UnitMagnificationReproducesMaskRectangle) {
  const auto g = small_geometry({15, 15}, {5, 5});
  const Image psf = synthesize_psf({Image::Ones(5, 5), true}, g, kInf);
  Image expected = Image::Zero(15, 15);
  expected.block(5, 5, 5, 5).setOnes();
  EXPECT_EQ((psf - expected).abs().maxCoeff(), 0.0);
}

TEST(Psf, SingleFeatureWidthTracksMagnification) {
  // Mask pitch 40 um on a 10 um sensor, one lit feature at the mask center.
  const auto g = CameraGeometry::from_microns(10.0, 10.0, 40.0, {101, 101}, {9, 9});
  Image m = Image::Zero(9, 9);
  m(4, 4) = 1.0;
  for (double z : {15.0, 20.0, 40.0, 200.0}) {
    const Image psf = synthesize_psf({m, false}, g, z);
    // Brute-force projection of the feature: a square of side m(z) * 40/10 sensor pixels.
    const double expected_width = magnification(g, z) * 4.0;
    int width = 0;
    for (int c = 0; c < 101; ++c) width += psf(50, c) >= 0.5 ? 1 : 0;
    EXPECT_LE(std::abs(width - expected_width), 1.0 + 1e-9) << "z=" << z;
    // Centered.
    Eigen::Index r, c;
    psf.maxCoeff(&r, &c);
    EXPECT_EQ(r, 50);
    EXPECT_EQ(c, 50);
  }
}

TEST(Psf, StackMatchesSingleSynthesis) {
  const auto g = small_geometry({12, 12}, {5, 5});
  const auto depths = sample_depths(g, 15.0, 60.0, 3);
  auto masks = testing::random_pm1_masks(2, {5, 5}, 3);
  masks.patterns.push_back(masks.patterns[0]);
  const PsfStack s = synthesize_stack(masks, g, depths, 2);
  ASSERT_EQ(s.masks, 3);
  ASSERT_EQ(s.depths, 3);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      EXPECT_EQ((s.at(k, i) - synthesize_psf(masks.patterns[k], g, depths.depths_mm[i])).abs().maxCoeff(), 0.0);
  for (int i = 0; i < 3; ++i) EXPECT_EQ((s.at(0, i) - s.at(2, i)).abs().maxCoeff(), 0.0);
}

TEST(Psf, PaperShapedStack) {
  const auto g = CameraGeometry::from_microns(10.51, 38.4, 36.0, {256, 256}, {63, 63});
  const auto depths = sample_depths(g, 35.0, 380.0, 8);
  const PsfStack s = synthesize_stack(testing::random_pm1_masks(8, {63, 63}, 1), g, depths);
  EXPECT_EQ(s.psfs.size(), 64u);
  EXPECT_EQ(s.grid(), (GridSize{256, 256}));
}

TEST(Psf, Linearity) {
  std::mt19937_64 rng(11);
  const auto g = small_geometry({14, 10}, {6, 5});
  const Image m1 = random_image({6, 5}, rng, -1, 1), m2 = random_image({6, 5}, rng, -1, 1);
  const double a = 0.3, b = -0.6;
  const PsfOperator op(g, 23.0);
  const Image lhs = op.apply(a * m1 + b * m2);
  const Image rhs = a * op.apply(m1) + b * op.apply(m2);
  EXPECT_LT((lhs - rhs).abs().maxCoeff(), 1e-14);
}

TEST(Psf, AdjointIdentity) {
  std::mt19937_64 rng(5);
  for (double z : {11.0, 20.0, 90.0, kInf}) {
    const auto g = small_geometry({17, 13}, {7, 5});
    const PsfOperator op(g, z);
    for (int trial = 0; trial < 5; ++trial) {
      const Image m = random_image({7, 5}, rng, -1, 1);
      const Image s = random_image({17, 13}, rng, -1, 1);
      const double lhs = (op.apply(m) * s).sum();
      const double rhs = (m * psf_adjoint(s, g, z)).sum();
      EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
    }
  }
}

TEST(Psf, AdjointOfIdentityResampling) {
  // alpha = 1, equal pitches: the 5x5 mask maps one-to-one onto the central sensor block,
  // so A^T A m = m.
  std::mt19937_64 rng(9);
  const auto g = small_geometry({9, 9}, {5, 5});
  const Image m = random_image({5, 5}, rng, -1, 1);
  const Eigen::MatrixXd a = explicit_psf_matrix(g, kInf);
  EXPECT_LT((a.transpose() * a - Eigen::MatrixXd::Identity(25, 25)).cwiseAbs().maxCoeff(), 1e-15);
  const Image back = psf_adjoint(synthesize_psf({m, false}, g, kInf), g, kInf);
  EXPECT_LT((back - m).abs().maxCoeff(), 1e-15);
  EXPECT_EQ(psf_adjoint(Image::Zero(9, 9), g, kInf).abs().maxCoeff(), 0.0);
}

TEST(Psf, ShiftCovarianceOnSmoothMasks) {
  // Smooth mask, shifted by one mask pixel: the PSF shifts by m(z) * mask_pitch / sensor_pitch.
  const auto g = CameraGeometry::from_microns(10.0, 10.0, 20.0, {96, 96}, {31, 31});
  auto smooth = [](double shift) {
    Image m(31, 31);
    for (int r = 0; r < 31; ++r)
      for (int c = 0; c < 31; ++c) {
        const double x = c - 15.0 - shift, y = r - 15.0;
        m(r, c) = std::exp(-(x * x + y * y) / (2.0 * 16.0));
      }
    return m;
  };
  const double z = 40.0;
  const double step = magnification(g, z) * 2.0;  // sensor pixels per mask pixel
  const Image p0 = synthesize_psf({smooth(0.0), false}, g, z);
  const Image p1 = synthesize_psf({smooth(1.0), false}, g, z);
  // Compare p1 against p0 resampled by `step` along columns.
  Image shifted = Image::Zero(96, 96);
  for (int r = 0; r < 96; ++r)
    for (int c = 0; c < 96; ++c) {
      const double x = c - step;
      const int x0 = static_cast<int>(std::floor(x));
      const double f = x - x0;
      if (x0 >= 0 && x0 + 1 < 96) shifted(r, c) = (1 - f) * p0(r, x0) + f * p0(r, x0 + 1);
    }
  EXPECT_LT(testing::relative_error(p1, shifted), 1e-2);
}

TEST(Psf, DomainErrors) {
  const auto g = small_geometry({8, 8}, {3, 3});
  EXPECT_THROW(synthesize_psf({Image::Ones(3, 3), true}, g, 10.0), DomainError);
  EXPECT_THROW(psf_adjoint(Image::Ones(8, 8), g, 5.0), DomainError);
  EXPECT_THROW(PsfOperator(g, 20.0).apply(Image::Ones(4, 3)), DimensionError);
}

TEST(MaskPattern, Validation) {
  EXPECT_THROW((MaskPattern{Image::Constant(2, 2, 1.5), false}).validate(), DomainError);
  EXPECT_THROW((MaskPattern{Image::Constant(2, 2, 0.5), true}).validate(), DomainError);
  EXPECT_NO_THROW((MaskPattern{Image::Constant(2, 2, -1.0), true}).validate());
  MaskSet mixed{{{Image::Ones(2, 2), true}, {Image::Ones(3, 2), true}}};
  EXPECT_THROW(mixed.validate(), DimensionError);
}

}  // namespace
}  // namespace lensless
