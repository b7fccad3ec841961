#pragma once

// Named test maps: closed-form oracle families and geodesic fixtures.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "polyflow/error.hpp"
#include "polyflow/fields.hpp"
#include "polyflow/grid.hpp"
#include "polyflow/space_form.hpp"

namespace polyflow {

struct ParamInfo {
  std::string name;
  double default_value;
  std::string description;
};

struct ExampleInfo {
  std::string name;
  std::string description;
  std::vector<ParamInfo> params;
};

inline const std::vector<ExampleInfo>& example_catalog() {
  static const std::vector<ExampleInfo> catalog = {
      {"Circle",
       "circle of geodesic radius r traversed once (1-D grid, any model, n >= 2); arc length when the grid length is 2 pi r",
       {{"r", 1.0, "geodesic radius (sphere: r sqrt(c) < pi)"}}},
      {"PerturbedGeodesicH2",
       "closed geodesic of a hyperbolic cylinder plus amplitude*sin(2 pi k s / L) along e2 (1-D grid, c < 0, n >= 2); "
       "periodic up to a boost",
       {{"amplitude", 0.05, "normal perturbation size"}, {"k", 3.0, "perturbation wavenumber (positive integer)"}}},
      {"GreatCircleS2",
       "great circle of the sphere plus amplitude*sin(k theta) along e2 (1-D grid, c > 0, n >= 2)",
       {{"amplitude", 0.0, "normal perturbation size"}, {"k", 2.0, "perturbation wavenumber (positive integer)"}}},
      {"TorusCliffordLike",
       "product of circles of radii a, b (2-D grid): flat n >= 4, sphere n >= 3 (rescaled onto the sphere), "
       "hyperboloid n >= 4",
       {{"a", 1.0, "first radius"}, {"b", 1.0, "second radius"}}},
      {"GraphSurface",
       "graph (x, f(x)) or (u, v, f(u, v)) over the periodic domain, f = amplitude sin(2 pi k u / L0) [cos(2 pi k v / L1)]; "
       "flat target only, periodic up to translation",
       {{"amplitude", 0.1, "graph height"}, {"k", 1.0, "wavenumber (positive integer)"}}},
  };
  return catalog;
}

namespace detail {

inline std::map<std::string, double> resolve_params(const ExampleInfo& info, const std::map<std::string, double>& given) {
  std::map<std::string, double> out;
  for (const ParamInfo& p : info.params) out[p.name] = p.default_value;
  for (const auto& [key, value] : given) {
    if (!out.contains(key)) throw Error(ErrorCode::BadParams, info.name + " has no parameter '" + key + "'");
    if (!std::isfinite(value)) throw Error(ErrorCode::BadParams, "parameter '" + key + "' is not finite");
    out[key] = value;
  }
  return out;
}

inline int positive_integer(double v, const std::string& name) {
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e6)
    throw Error(ErrorCode::BadParams, "parameter '" + name + "' must be a positive integer");
  return static_cast<int>(v);
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::BadParams, what);
}

}  // namespace detail

inline MapField builtin_map(std::string_view name, const std::map<std::string, double>& given,
                            const std::shared_ptr<const DomainGrid>& grid, const SpaceFormSpec& spec) {
  const auto& catalog = example_catalog();
  const auto it = std::find_if(catalog.begin(), catalog.end(), [&](const ExampleInfo& e) { return e.name == name; });
  if (it == catalog.end()) throw Error(ErrorCode::UnknownExample, "unknown example '" + std::string(name) + "'");
  const auto p = detail::resolve_params(*it, given);
  const std::size_t d = spec.ambient_dim();
  const std::size_t nodes = grid->node_count();
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> values(nodes * d, 0.0);
  std::vector<Twist> twist;

  if (name == "Circle") {
    detail::require(grid->dims() == 1, "Circle needs a 1-D grid");
    detail::require(spec.n >= 2, "Circle needs n >= 2");
    const double r = p.at("r");
    detail::require(r > 0.0, "Circle radius must be positive");
    for (std::size_t j = 0; j < nodes; ++j) {
      const double th = two_pi * grid->coordinate(j, 0) / grid->length(0);
      double* x = values.data() + j * d;
      switch (spec.model) {
        case Model::Flat:
          x[0] = r * std::cos(th);
          x[1] = r * std::sin(th);
          break;
        case Model::Sphere: {
          const double R = 1.0 / std::sqrt(spec.c);
          const double alpha = r / R;
          detail::require(alpha < std::numbers::pi, "sphere circle needs r sqrt(c) < pi");
          x[0] = R * std::sin(alpha) * std::cos(th);
          x[1] = R * std::sin(alpha) * std::sin(th);
          x[2] = R * std::cos(alpha);
          break;
        }
        case Model::Hyperboloid: {
          const double R = 1.0 / std::sqrt(-spec.c);
          const double alpha = r / R;
          x[0] = R * std::cosh(alpha);
          x[1] = R * std::sinh(alpha) * std::cos(th);
          x[2] = R * std::sinh(alpha) * std::sin(th);
          break;
        }
      }
    }
  } else if (name == "PerturbedGeodesicH2") {
    detail::require(grid->dims() == 1, "PerturbedGeodesicH2 needs a 1-D grid");
    detail::require(spec.model == Model::Hyperboloid && spec.n >= 2, "PerturbedGeodesicH2 needs c < 0 and n >= 2");
    const double a = p.at("amplitude");
    const int k = detail::positive_integer(p.at("k"), "k");
    const double sq = std::sqrt(-spec.c);
    // Unit-speed boost along e0-e1; the stored curve is the co-moving one.
    Twist t;
    t.generator.assign(d * d, 0.0);
    t.generator[0 * d + 1] = sq;
    t.generator[1 * d + 0] = sq;
    twist.push_back(std::move(t));
    std::vector<double> base(d, 0.0);
    base[0] = 1.0 / sq;
    std::vector<double> v(d, 0.0);
    for (std::size_t j = 0; j < nodes; ++j) {
      v[2] = a * std::sin(two_pi * k * grid->coordinate(j, 0) / grid->length(0));
      exp_map_into(spec, base, v, {values.data() + j * d, d});
    }
  } else if (name == "GreatCircleS2") {
    detail::require(grid->dims() == 1, "GreatCircleS2 needs a 1-D grid");
    detail::require(spec.model == Model::Sphere && spec.n >= 2, "GreatCircleS2 needs c > 0 and n >= 2");
    const double a = p.at("amplitude");
    const int k = detail::positive_integer(p.at("k"), "k");
    const double R = 1.0 / std::sqrt(spec.c);
    std::vector<double> base(d, 0.0);
    std::vector<double> v(d, 0.0);
    for (std::size_t j = 0; j < nodes; ++j) {
      const double th = two_pi * grid->coordinate(j, 0) / grid->length(0);
      base[0] = R * std::cos(th);
      base[1] = R * std::sin(th);
      v[2] = a * std::sin(k * th);
      exp_map_into(spec, base, v, {values.data() + j * d, d});
    }
  } else if (name == "TorusCliffordLike") {
    detail::require(grid->dims() == 2, "TorusCliffordLike needs a 2-D grid");
    const double a = p.at("a");
    const double b = p.at("b");
    detail::require(a > 0.0 && b > 0.0, "torus radii must be positive");
    detail::require(spec.model == Model::Sphere ? spec.n >= 3 : spec.n >= 4,
                    "TorusCliffordLike needs n >= 4 (n >= 3 on the sphere)");
    double scale = 1.0;
    if (spec.model == Model::Sphere) scale = 1.0 / (std::sqrt(spec.c) * std::hypot(a, b));
    const std::size_t off = spec.model == Model::Hyperboloid ? 1 : 0;
    for (std::size_t j = 0; j < nodes; ++j) {
      const double u = two_pi * grid->coordinate(j, 0) / grid->length(0);
      const double w = two_pi * grid->coordinate(j, 1) / grid->length(1);
      double* x = values.data() + j * d;
      x[off + 0] = scale * a * std::cos(u);
      x[off + 1] = scale * a * std::sin(u);
      x[off + 2] = scale * b * std::cos(w);
      x[off + 3] = scale * b * std::sin(w);
      if (spec.model == Model::Hyperboloid) x[0] = std::sqrt(-1.0 / spec.c + a * a + b * b);
    }
  } else if (name == "GraphSurface") {
    detail::require(spec.model == Model::Flat, "GraphSurface needs a flat target");
    const int m = grid->dims();
    detail::require(spec.n >= m + 1, "GraphSurface needs n >= dims + 1");
    const double amp = p.at("amplitude");
    const int k = detail::positive_integer(p.at("k"), "k");
    for (int axis = 0; axis < m; ++axis) {
      Twist t;
      t.translation.assign(d, 0.0);
      t.translation[static_cast<std::size_t>(axis)] = 1.0;
      twist.push_back(std::move(t));
    }
    for (std::size_t j = 0; j < nodes; ++j) {
      double f = amp * std::sin(two_pi * k * grid->coordinate(j, 0) / grid->length(0));
      if (m == 2) f *= std::cos(two_pi * k * grid->coordinate(j, 1) / grid->length(1));
      values[j * d + static_cast<std::size_t>(m)] = f;
    }
  }
  MapField phi(grid, spec, std::move(values), std::move(twist));
  phi.renormalize();
  return phi;
}

}  // namespace polyflow
