#pragma once

// Geometry of the constant-curvature target N(c), realized inside a flat
// ambient space: R^n for c = 0, the sphere of radius 1/sqrt(c) in Euclidean
// R^{n+1} for c > 0, and the upper sheet of the hyperboloid <x,x>_L = 1/c in
// Minkowski R^{n,1} for c < 0. Tangent vectors and sections are stored in the
// same ambient coordinates; the induced connection is "differentiate in the
// ambient space, then project".

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "polyflow/error.hpp"

namespace polyflow {

using AmbientVector = std::vector<double>;

enum class Model { Flat, Sphere, Hyperboloid };

inline std::string_view to_string(Model m) {
  switch (m) {
    case Model::Flat: return "Flat";
    case Model::Sphere: return "Sphere";
    case Model::Hyperboloid: return "Hyperboloid";
  }
  return "?";
}

struct SpaceFormSpec {
  double c = 0.0;
  int n = 2;
  Model model = Model::Flat;

  std::size_t ambient_dim() const {
    return model == Model::Flat ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) + 1;
  }

  /// Picks the model from the sign of c.
  static SpaceFormSpec make(double c, int n) {
    if (n < 1) throw Error(ErrorCode::InvalidSpec, "space form dimension must be >= 1");
    if (!std::isfinite(c)) throw Error(ErrorCode::InvalidSpec, "curvature must be finite");
    SpaceFormSpec s;
    s.c = c;
    s.n = n;
    s.model = c == 0.0 ? Model::Flat : (c > 0.0 ? Model::Sphere : Model::Hyperboloid);
    return s;
  }
};

/// Ambient quadratic form: Euclidean for Flat/Sphere, Lorentzian (-,+,...,+) for Hyperboloid.
inline double model_form(const SpaceFormSpec& spec, std::span<const double> u,
                         std::span<const double> v) {
  double s = 0.0;
  const std::size_t d = u.size();
  if (spec.model == Model::Hyperboloid) {
    s = -u[0] * v[0];
    for (std::size_t i = 1; i < d; ++i) s += u[i] * v[i];
  } else {
    for (std::size_t i = 0; i < d; ++i) s += u[i] * v[i];
  }
  return s;
}

/// Fiber metric h restricted to T_x N. Positive definite on tangent vectors in every model.
inline double inner(const SpaceFormSpec& spec, std::span<const double> /*x*/,
                    std::span<const double> u, std::span<const double> v) {
  return model_form(spec, u, v);
}

/// |c <x,x> - 1|; zero for the flat model.
/// |c <x,x> - 1|, relative to max(1, |c| |x|^2) with the Euclidean norm. Far out
/// on the hyperboloid <x,x>_L is a difference of numbers of size |x|^2, so the
/// absolute value cannot drop below roundoff times |x|^2.
inline double constraint_residual(const SpaceFormSpec& spec, std::span<const double> x) {
  if (spec.model == Model::Flat) return 0.0;
  double e2 = 0.0;
  for (double xi : x) e2 += xi * xi;
  return std::abs(spec.c * model_form(spec, x, x) - 1.0) / std::max(1.0, std::abs(spec.c) * e2);
}

inline double tangency_residual(const SpaceFormSpec& spec, std::span<const double> x,
                                std::span<const double> v) {
  if (spec.model == Model::Flat) return 0.0;
  return std::abs(model_form(spec, x, v));
}

inline void project_point_inplace(const SpaceFormSpec& spec, std::span<double> x) {
  if (spec.model == Model::Flat) return;
  const double q = model_form(spec, x, x);
  if (spec.model == Model::Sphere) {
    if (!(q > 0.0)) throw Error(ErrorCode::DegeneratePoint, "cannot project the origin onto a sphere");
  } else {
    if (!(q < 0.0) || !(x[0] > 0.0))
      throw Error(ErrorCode::DegeneratePoint, "point is not timelike future-pointing");
  }
  const double scale = 1.0 / std::sqrt(spec.c * q);
  for (double& xi : x) xi *= scale;
}

/// Drift correction for points already (nearly) on the model. The sphere is
/// rescaled radially; on the hyperboloid x_0 is recomputed from the spatial part,
/// since far from the base point the Lorentz form is too cancellation-prone to
/// rescale by.
inline void settle_on_model(const SpaceFormSpec& spec, std::span<double> x) {
  if (spec.model == Model::Sphere) {
    project_point_inplace(spec, x);
  } else if (spec.model == Model::Hyperboloid) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += x[i] * x[i];
    x[0] = std::sqrt(-1.0 / spec.c + s);
  }
}

inline AmbientVector project_point(const SpaceFormSpec& spec, std::span<const double> x) {
  AmbientVector out(x.begin(), x.end());
  project_point_inplace(spec, out);
  return out;
}

/// v <- v - c <x,v> x, the orthogonal projection onto T_x N.
inline void project_tangent_inplace(const SpaceFormSpec& spec, std::span<const double> x,
                                    std::span<double> v) {
  if (spec.model == Model::Flat) return;
  const double k = spec.c * model_form(spec, x, v);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= k * x[i];
}

inline AmbientVector project_tangent(const SpaceFormSpec& spec, std::span<const double> x,
                                     std::span<const double> v) {
  AmbientVector out(v.begin(), v.end());
  project_tangent_inplace(spec, x, out);
  return out;
}

/// Closed-form exponential map; the result is renormalized onto the model.
inline void exp_map_into(const SpaceFormSpec& spec, std::span<const double> x,
                         std::span<const double> v, std::span<double> out) {
  const std::size_t d = x.size();
  if (spec.model == Model::Flat) {
    for (std::size_t i = 0; i < d; ++i) out[i] = x[i] + v[i];
    return;
  }
  const double norm = std::sqrt(std::max(0.0, model_form(spec, v, v)));
  const double theta = std::sqrt(std::abs(spec.c)) * norm;
  double a = 1.0;  // coefficient of x
  double b = 1.0;  // coefficient of v, i.e. sin(theta)/theta or sinh(theta)/theta
  if (spec.model == Model::Sphere) {
    a = std::cos(theta);
    b = theta < 1e-8 ? 1.0 - theta * theta / 6.0 : std::sin(theta) / theta;
  } else {
    a = std::cosh(theta);
    b = theta < 1e-8 ? 1.0 + theta * theta / 6.0 : std::sinh(theta) / theta;
  }
  for (std::size_t i = 0; i < d; ++i) out[i] = a * x[i] + b * v[i];
  settle_on_model(spec, out);
}

inline AmbientVector exp_map(const SpaceFormSpec& spec, std::span<const double> x,
                             std::span<const double> v) {
  AmbientVector out(x.size());
  exp_map_into(spec, x, v, out);
  return out;
}

/// R(X,Y)Z = c (h(Y,Z) X - h(X,Z) Y), with R(U,V) = [nabla_U, nabla_V] - nabla_[U,V].
inline void curvature_op_into(const SpaceFormSpec& spec, std::span<const double> X,
                              std::span<const double> Y, std::span<const double> Z,
                              std::span<double> out) {
  if (spec.c == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double yz = model_form(spec, Y, Z);
  const double xz = model_form(spec, X, Z);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = spec.c * (yz * X[i] - xz * Y[i]);
}

inline AmbientVector curvature_op(const SpaceFormSpec& spec, std::span<const double> /*x*/,
                                  std::span<const double> X, std::span<const double> Y,
                                  std::span<const double> Z) {
  AmbientVector out(X.size());
  curvature_op_into(spec, X, Y, Z, out);
  return out;
}

}  // namespace polyflow
