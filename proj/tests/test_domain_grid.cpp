#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace polyflow;
using fixtures::kPi;

namespace {

double derivative_error(int n, Differentiation d) {
  auto g = fixtures::line(n, 2.0 * kPi, d);
  std::vector<double> f(g->node_count());
  std::vector<double> exact(g->node_count());
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double x = g->coordinate(j, 0);
    f[j] = std::exp(std::sin(x));
    exact[j] = std::cos(x) * f[j];
  }
  return fixtures::sup_diff(g->derivative(0, f, 1), exact);
}

}  // namespace

TEST(DomainGrid, RejectsBadSpecs) {
  GridSpec s;
  s.dims = 3;
  EXPECT_THROW(build_grid(s), Error);
  s = GridSpec{};
  s.sizes = {8};
  EXPECT_THROW(build_grid(s), Error);
  s = GridSpec{};
  s.lengths = {-1.0};
  EXPECT_THROW(build_grid(s), Error);
  s = GridSpec{};
  s.dims = 2;
  EXPECT_THROW(build_grid(s), Error);
}

TEST(DomainGrid, IndexingWrapsPeriodically) {
  auto g = fixtures::torus(32);
  EXPECT_EQ(g->node_count(), 32u * 32u);
  EXPECT_EQ(g->node_at(-1, 0), g->node_at(31, 0));
  EXPECT_EQ(g->node_at(33, 65), g->node_at(1, 1));
  const auto idx = g->multi_index(g->node_at(5, 7));
  EXPECT_EQ(idx[0], 5);
  EXPECT_EQ(idx[1], 7);
  EXPECT_DOUBLE_EQ(g->coordinate(g->node_at(5, 7), 1), 7 * 2.0 * kPi / 32);
  EXPECT_DOUBLE_EQ(g->cell_volume(), std::pow(2.0 * kPi / 32, 2));
}

TEST(DomainGrid, SpectralDerivativeIsExactOnSmoothPeriodicData) {
  EXPECT_LT(derivative_error(64, Differentiation::Spectral), 1e-12);
}

TEST(DomainGrid, FiniteDifferenceOrders) {
  const double e2a = derivative_error(128, Differentiation::CentralFD2);
  const double e2b = derivative_error(256, Differentiation::CentralFD2);
  EXPECT_NEAR(std::log2(e2a / e2b), 2.0, 0.3);
  const double e4a = derivative_error(64, Differentiation::CentralFD4);
  const double e4b = derivative_error(128, Differentiation::CentralFD4);
  EXPECT_NEAR(std::log2(e4a / e4b), 4.0, 0.3);
}

TEST(DomainGrid, DerivativeAlongSecondAxisAndComponents) {
  auto g = fixtures::torus(32, 4.0);
  std::vector<double> f(g->node_count() * 2);
  for (std::size_t j = 0; j < g->node_count(); ++j) {
    const double u = g->coordinate(j, 0);
    const double v = g->coordinate(j, 1);
    f[2 * j] = std::sin(2.0 * kPi * v / 4.0);
    f[2 * j + 1] = std::cos(2.0 * kPi * u / 4.0);
  }
  const auto dv = g->derivative(1, f, 2);
  for (std::size_t j = 0; j < g->node_count(); ++j) {
    const double v = g->coordinate(j, 1);
    EXPECT_NEAR(dv[2 * j], (2.0 * kPi / 4.0) * std::cos(2.0 * kPi * v / 4.0), 1e-12);
    EXPECT_NEAR(dv[2 * j + 1], 0.0, 1e-12);
  }
}

TEST(DomainGrid, SpectralChopZeroesConstantsExactly) {
  auto g = fixtures::line(64);
  std::vector<double> f(g->node_count(), 3.7);
  for (double x : g->derivative(0, f, 1, 3.7)) EXPECT_EQ(x, 0.0);
}

TEST(DomainGrid, SobolevSmoothingActsAsFourierMultiplier) {
  auto g = fixtures::line(64);
  std::vector<double> f(g->node_count());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = std::cos(3.0 * g->coordinate(j, 0));
  auto s = f;
  g->sobolev_smooth(s, 1, 2, 0.5);
  const double factor = std::pow(1.0 + 0.25 * 9.0, -2.0);
  for (std::size_t j = 0; j < f.size(); ++j) EXPECT_NEAR(s[j], factor * f[j], 1e-13);
}

TEST(Metric, IdentityFrameIntegratesVolume) {
  auto g = fixtures::torus(32, 3.0);
  const FrameField frame = fixtures::flat_frame(g);
  const std::vector<double> ones(g->node_count(), 1.0);
  EXPECT_NEAR(integrate(frame, ones), 9.0, 1e-12);
}

TEST(Metric, ConstantMetricVolumeAndFrame) {
  auto g = fixtures::torus(32, 2.0 * kPi);
  const std::vector<double> m{4.0, 0.0, 0.0, 9.0};
  const FrameField frame = orthonormal_frame(g, constant_metric(*g, m));
  const std::vector<double> ones(g->node_count(), 1.0);
  EXPECT_NEAR(integrate(frame, ones), 6.0 * 4.0 * kPi * kPi, 1e-10);
  EXPECT_NEAR(frame.frame(0, 0, 0), 0.5, 1e-15);
  EXPECT_NEAR(frame.frame(0, 1, 1), 1.0 / 3.0, 1e-15);
}

TEST(Metric, NonPositiveMetricThrows) {
  auto g = fixtures::torus(32);
  const std::vector<double> m{1.0, 2.0, 2.0, 1.0};
  EXPECT_THROW(orthonormal_frame(g, constant_metric(*g, m)), Error);
}

TEST(Metric, ScalarLaplacianIsPositive) {
  auto g = fixtures::torus(32);
  const FrameField frame = fixtures::flat_frame(g);
  std::vector<double> f(g->node_count());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = std::sin(g->coordinate(j, 0)) * std::cos(2.0 * g->coordinate(j, 1));
  const auto lap = scalar_laplacian(frame, f);
  for (std::size_t j = 0; j < f.size(); ++j) EXPECT_NEAR(lap[j], 5.0 * f[j], 1e-11);
}

TEST(Metric, InducedMetricOfArcLengthCircleIsIdentity) {
  const MapField phi = fixtures::planar_circle(2.0, 128);
  const MetricField g = induced_metric(phi);
  EXPECT_LT(metric_deviation(g, identity_metric(phi.grid())), 1e-12);
}

TEST(Metric, InducedMetricOfSphereTorusIsConformallyFlat) {
  auto g = fixtures::torus(32);
  const MapField phi = builtin_map("TorusCliffordLike", {}, g, SpaceFormSpec::make(1.0, 3));
  // On the unit sphere the a = b torus has radii 1/sqrt 2, so g = diag(1/2, 1/2).
  const MetricField m = induced_metric(phi);
  for (std::size_t j = 0; j < g->node_count(); j += 97) {
    EXPECT_NEAR(m.at(j, 0, 0), 0.5, 1e-12);
    EXPECT_NEAR(m.at(j, 1, 1), 0.5, 1e-12);
    EXPECT_NEAR(m.at(j, 0, 1), 0.0, 1e-12);
  }
}

TEST(Metric, ConstantMapIsDegenerate) {
  auto g = fixtures::line(32);
  const MapField phi(g, SpaceFormSpec::make(0.0, 2), std::vector<double>(64, 1.0));
  try {
    induced_metric(phi);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateImmersion);
  }
}
