#include "lensless/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lensless/errors.hpp"

namespace lensless {
namespace {

const double kInf = std::numeric_limits<double>::infinity();

CameraGeometry geometry(double d) { return CameraGeometry::from_microns(d, 38.4, 36.0, {256, 256}, {63, 63}); }

TEST(Geometry, RejectsNonPositiveParameters) {
  EXPECT_THROW(CameraGeometry::from_microns(0.0, 10, 10, {4, 4}, {3, 3}), DomainError);
  EXPECT_THROW(CameraGeometry::from_microns(1.0, -1, 10, {4, 4}, {3, 3}), DomainError);
  EXPECT_THROW(CameraGeometry::from_microns(1.0, 10, 10, {0, 4}, {3, 3}), DomainError);
}

TEST(Geometry, PitchesStoredInMillimeters) {
  const auto g = geometry(10.51);
  EXPECT_DOUBLE_EQ(g.sensor_pitch_mm, 0.0384);
  EXPECT_DOUBLE_EQ(g.mask_pitch_mm, 0.036);
}

TEST(SampleDepths, EightPlanesOverThirtyFiveToThreeEighty) {
  const auto s = sample_depths(geometry(10.51), 35.0, 380.0, 8);
  ASSERT_EQ(s.count(), 8);
  // 1 - 10.51/35 and 1 - 10.51/380.
  EXPECT_NEAR(s.alphas.front(), 0.699714285714286, 1e-12);
  EXPECT_NEAR(s.alphas.back(), 0.972342105263158, 1e-12);
  const double step = (s.alphas.back() - s.alphas.front()) / 7.0;
  for (int i = 1; i < 8; ++i) EXPECT_NEAR(s.alphas[i] - s.alphas[i - 1], step, 1e-12);
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(s.alphas[i], 1.0 - 10.51 / s.depths_mm[i], 1e-12);
}

TEST(SampleDepths, SinglePlane) {
  const auto s = sample_depths(geometry(10.0), 20.0, 20.0, 1);
  ASSERT_EQ(s.count(), 1);
  EXPECT_DOUBLE_EQ(s.alphas[0], 0.5);
  EXPECT_DOUBLE_EQ(s.depths_mm[0], 20.0);
}

TEST(SampleDepths, FarFieldEndpoint) {
  const auto s = sample_depths(geometry(10.0), 20.0, kInf, 2);
  EXPECT_DOUBLE_EQ(s.alphas[0], 0.5);
  EXPECT_DOUBLE_EQ(s.alphas[1], 1.0);
  EXPECT_TRUE(std::isinf(s.depths_mm[1]));
}

TEST(SampleDepths, DomainErrors) {
  const auto g = geometry(10.0);
  EXPECT_THROW(sample_depths(g, 10.0, 20.0, 2), DomainError);
  EXPECT_THROW(sample_depths(g, 5.0, 20.0, 2), DomainError);
  EXPECT_THROW(sample_depths(g, 20.0, 30.0, 0), DomainError);
  EXPECT_THROW(sample_depths(g, 30.0, 20.0, 2), DomainError);
}

TEST(SampleDepths, RoundTripThroughAlpha) {
  const auto g = geometry(10.51);
  for (double zmax : {36.0, 100.0, 380.0, 5000.0}) {
    const auto s = sample_depths(g, 35.0, zmax, 5);
    EXPECT_NEAR(depth_of_alpha(g, s.alphas.front()), 35.0, 35.0 * 1e-9);
    EXPECT_NEAR(depth_of_alpha(g, s.alphas.back()), zmax, zmax * 1e-9);
    for (int i = 1; i < s.count(); ++i) {
      EXPECT_GT(s.alphas[i], s.alphas[i - 1]);
      EXPECT_GT(s.depths_mm[i], s.depths_mm[i - 1]);
    }
  }
}

TEST(Magnification, Values) {
  EXPECT_DOUBLE_EQ(magnification(geometry(10.0), 20.0), 2.0);
  EXPECT_NEAR(magnification(geometry(10.51), 35.0), 35.0 / 24.49, 1e-12);
  EXPECT_NEAR(magnification(geometry(10.51), 35.0), 1.42915, 1e-5);
  EXPECT_NEAR(magnification(geometry(10.0), 1e9), 1.0, 1e-7);
  EXPECT_DOUBLE_EQ(magnification(geometry(10.0), kInf), 1.0);
  EXPECT_THROW(magnification(geometry(10.0), 10.0), DomainError);
  EXPECT_THROW(magnification(geometry(10.0), 3.0), DomainError);
}

TEST(Magnification, MonotoneInDepth) {
  const auto g = geometry(10.0);
  double prev_alpha = 0.0, prev_m = kInf;
  for (double z = 10.5; z < 1e4; z *= 1.3) {
    const double a = alpha_of_depth(g, z);
    const double m = magnification(g, z);
    EXPECT_GT(a, prev_alpha);
    EXPECT_LT(m, prev_m);
    EXPECT_NEAR(m, 1.0 / a, 1e-12);
    prev_alpha = a;
    prev_m = m;
  }
}

}  // namespace
}  // namespace lensless
