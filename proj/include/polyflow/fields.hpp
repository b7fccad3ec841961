#pragma once

// Discrete maps phi: M -> N(c) and sections of phi^{-1}TN, both stored in
// ambient coordinates on a DomainGrid.
//
// A map may be periodic only up to an isometry of the target: along axis a,
// phi(x + L_a e_a) = exp(L_a K_a) phi(x) (+ L_a t_a in the flat model). The
// stored values are then the co-moving representative psi with
// phi(x) = exp(sum_a x_a K_a) psi(x) + sum_a x_a t_a, and ambient derivatives
// pick up the generator: d_a phi ~ d_a psi + K_a psi + t_a, d_a V ~ d_a W + K_a W.
// This is what lets a closed geodesic of a hyperbolic cylinder live on a
// periodic grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "polyflow/error.hpp"
#include "polyflow/grid.hpp"
#include "polyflow/parallel.hpp"
#include "polyflow/space_form.hpp"

namespace polyflow {

/// Holonomy of a twisted-periodic map along one axis.
struct Twist {
  std::vector<double> generator;    // ambient_dim x ambient_dim, row-major; empty = none
  std::vector<double> translation;  // flat model only; empty = none

  bool empty() const { return generator.empty() && translation.empty(); }
};

/// A vector field along a map, in ambient coordinates.
///
/// `scale` is the magnitude of the terms that produced the values (before any
/// cancellation); spectral chopping treats amplitudes far below it as roundoff.
struct Section {
  std::vector<double> values;
  std::size_t dim = 0;
  double scale = 0.0;

  Section() = default;
  Section(std::size_t nodes, std::size_t d) : values(nodes * d, 0.0), dim(d) {}
  Section(std::vector<double> v, std::size_t d, double s) : values(std::move(v)), dim(d), scale(s) {}

  std::size_t node_count() const { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const double> at(std::size_t node) const { return {values.data() + node * dim, dim}; }
  std::span<double> at(std::size_t node) { return {values.data() + node * dim, dim}; }

  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }

  /// Uses max|values| as the scale.
  static Section from_values(std::vector<double> v, std::size_t d) {
    Section s(std::move(v), d, 0.0);
    s.scale = s.max_abs();
    return s;
  }
};

class MapField {
 public:
  MapField(std::shared_ptr<const DomainGrid> grid, SpaceFormSpec spec, std::vector<double> values,
           std::vector<Twist> twist = {})
      : grid_(std::move(grid)), spec_(spec), values_(std::move(values)), twist_(std::move(twist)) {
    const std::size_t d = spec_.ambient_dim();
    if (values_.size() != grid_->node_count() * d)
      throw Error(ErrorCode::InvalidSpec, "map values do not match grid size and ambient dimension");
    if (twist_.empty()) twist_.resize(static_cast<std::size_t>(grid_->dims()));
    if (twist_.size() != static_cast<std::size_t>(grid_->dims()))
      throw Error(ErrorCode::InvalidSpec, "one twist entry per axis");
    for (const Twist& t : twist_) validate_twist(t);
    if (twist_.size() == 2 && !twist_[0].generator.empty() && !twist_[1].generator.empty())
      check_commuting(twist_[0].generator, twist_[1].generator);
    for (double v : values_)
      if (!std::isfinite(v)) throw Error(ErrorCode::DegeneratePoint, "non-finite map value");
  }

  const std::shared_ptr<const DomainGrid>& grid_ptr() const { return grid_; }
  const DomainGrid& grid() const { return *grid_; }
  const SpaceFormSpec& spec() const { return spec_; }
  std::size_t dim() const { return spec_.ambient_dim(); }
  std::size_t node_count() const { return grid_->node_count(); }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }
  const std::vector<Twist>& twist() const { return twist_; }
  std::span<const double> point(std::size_t node) const { return {values_.data() + node * dim(), dim()}; }

  double max_constraint_residual() const {
    double r = 0.0;
    for (std::size_t j = 0; j < node_count(); ++j) r = std::max(r, constraint_residual(spec_, point(j)));
    return r;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Ambient derivative of phi along axis `axis` (co-moving representation).
  std::vector<double> point_derivative(int axis) const {
    std::vector<double> out = grid_->derivative(axis, values_, dim(), max_abs());
    apply_twist(axis, values_, out, /*translate=*/true);
    return out;
  }

  /// Ambient derivative of a section along axis `axis`.
  std::vector<double> section_derivative(const Section& v, int axis) const {
    std::vector<double> out = grid_->derivative(axis, v.values, dim(), v.scale);
    apply_twist(axis, v.values, out, /*translate=*/false);
    return out;
  }

  /// Projects every stored value back onto the model.
  void renormalize() {
    for (std::size_t j = 0; j < node_count(); ++j)
      settle_on_model(spec_, {values_.data() + j * dim(), dim()});
  }

 private:
  void validate_twist(const Twist& t) const {
    const std::size_t d = dim();
    if (!t.generator.empty()) {
      if (t.generator.size() != d * d) throw Error(ErrorCode::InvalidSpec, "twist generator has wrong size");
      // K must generate isometries: K^T G + G K = 0 with G the ambient form.
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
          const double gi = (spec_.model == Model::Hyperboloid && i == 0) ? -1.0 : 1.0;
          const double gj = (spec_.model == Model::Hyperboloid && j == 0) ? -1.0 : 1.0;
          const double s = t.generator[j * d + i] * gj + gi * t.generator[i * d + j];
          if (std::abs(s) > 1e-12)
            throw Error(ErrorCode::InvalidSpec, "twist generator is not an infinitesimal isometry");
        }
      if (spec_.model == Model::Flat)
        throw Error(ErrorCode::InvalidSpec, "flat targets support translation twists only");
    }
    if (!t.translation.empty()) {
      if (spec_.model != Model::Flat)
        throw Error(ErrorCode::InvalidSpec, "translation twists require a flat target");
      if (t.translation.size() != d) throw Error(ErrorCode::InvalidSpec, "twist translation has wrong size");
    }
  }

  void check_commuting(const std::vector<double>& a, const std::vector<double>& b) const {
    const std::size_t d = dim();
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double ab = 0.0;
        double ba = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          ab += a[i * d + k] * b[k * d + j];
          ba += b[i * d + k] * a[k * d + j];
        }
        if (std::abs(ab - ba) > 1e-12) throw Error(ErrorCode::InvalidSpec, "twist generators must commute");
      }
  }

  void apply_twist(int axis, std::span<const double> in, std::span<double> out, bool translate) const {
    const Twist& t = twist_[static_cast<std::size_t>(axis)];
    if (t.empty()) return;
    const std::size_t d = dim();
    const std::size_t nodes = node_count();
    if (!t.generator.empty()) {
      for (std::size_t j = 0; j < nodes; ++j)
        for (std::size_t r = 0; r < d; ++r) {
          double s = 0.0;
          for (std::size_t k = 0; k < d; ++k) s += t.generator[r * d + k] * in[j * d + k];
          out[j * d + r] += s;
        }
    }
    if (translate && !t.translation.empty()) {
      for (std::size_t j = 0; j < nodes; ++j)
        for (std::size_t r = 0; r < d; ++r) out[j * d + r] += t.translation[r];
    }
  }

  std::shared_ptr<const DomainGrid> grid_;
  SpaceFormSpec spec_;
  std::vector<double> values_;
  std::vector<Twist> twist_;
};

// Pointwise section arithmetic. Scales add so the roundoff floor stays honest.

inline Section operator+(const Section& a, const Section& b) {
  Section out(a.values, a.dim, a.scale + b.scale);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
  return out;
}

inline Section operator-(const Section& a, const Section& b) {
  Section out(a.values, a.dim, a.scale + b.scale);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= b.values[i];
  return out;
}

inline Section operator*(double k, const Section& a) {
  Section out(a.values, a.dim, std::abs(k) * a.scale);
  for (double& v : out.values) v *= k;
  return out;
}

/// Pointwise h(V(x), W(x)).
inline std::vector<double> pointwise_inner(const SpaceFormSpec& spec, const Section& v, const Section& w) {
  std::vector<double> out(v.node_count());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = model_form(spec, v.at(j), w.at(j));
  return out;
}

inline std::vector<double> pointwise_norm(const SpaceFormSpec& spec, const Section& v) {
  std::vector<double> out(v.node_count());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::sqrt(std::max(0.0, model_form(spec, v.at(j), v.at(j))));
  return out;
}

inline double sup_norm(const SpaceFormSpec& spec, const Section& v) {
  double m = 0.0;
  for (double x : pointwise_norm(spec, v)) m = std::max(m, x);
  return m;
}

/// Projects every value of `v` onto T_{phi(x)}N.
inline void project_section(const MapField& phi, Section& v) {
  const std::size_t d = phi.dim();
  parallel_for(phi.node_count(), [&](std::size_t j) {
    project_tangent_inplace(phi.spec(), phi.point(j), {v.values.data() + j * d, d});
  });
}

inline double max_tangency_residual(const MapField& phi, const Section& v) {
  double r = 0.0;
  for (std::size_t j = 0; j < phi.node_count(); ++j)
    r = std::max(r, tangency_residual(phi.spec(), phi.point(j), v.at(j)));
  return r;
}

}  // namespace polyflow
