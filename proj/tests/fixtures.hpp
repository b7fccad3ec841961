#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "polyflow/polyflow.hpp"

namespace fixtures {

using namespace polyflow;

inline constexpr double kPi = std::numbers::pi;

inline std::shared_ptr<const DomainGrid> line(int n = 256, double length = 2.0 * kPi,
                                              Differentiation d = Differentiation::Spectral) {
  GridSpec s;
  s.dims = 1;
  s.sizes = {n};
  s.lengths = {length};
  s.differentiation = d;
  return build_grid(s);
}

inline std::shared_ptr<const DomainGrid> torus(int n = 64, double length = 2.0 * kPi,
                                               Differentiation d = Differentiation::Spectral) {
  GridSpec s;
  s.dims = 2;
  s.sizes = {n, n};
  s.lengths = {length, length};
  s.differentiation = d;
  return build_grid(s);
}

inline FrameField flat_frame(const std::shared_ptr<const DomainGrid>& g) {
  return orthonormal_frame(g, identity_metric(*g));
}

inline FrameField induced_frame(const MapField& phi) {
  return orthonormal_frame(phi.grid_ptr(), induced_metric(phi));
}

/// Planar circle of radius r on a grid of length 2 pi r (arc length).
inline MapField planar_circle(double r, int n = 256, Differentiation d = Differentiation::Spectral) {
  auto g = line(n, 2.0 * kPi * r, d);
  std::vector<double> v;
  for (std::size_t j = 0; j < g->node_count(); ++j) {
    const double s = g->coordinate(j, 0);
    v.push_back(r * std::cos(s / r));
    v.push_back(r * std::sin(s / r));
  }
  return MapField(g, SpaceFormSpec::make(0.0, 2), v);
}

inline double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace fixtures
