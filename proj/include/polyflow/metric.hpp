#pragma once

// Metric, orthonormal frame and volume element of the discrete domain (M, g).

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polyflow/error.hpp"
#include "polyflow/fields.hpp"
#include "polyflow/grid.hpp"
#include "polyflow/parallel.hpp"

namespace polyflow {

enum class MetricMode { Prescribed, Induced };

inline std::string_view to_string(MetricMode m) {
  return m == MetricMode::Prescribed ? "Prescribed" : "Induced";
}

/// Per-node symmetric dims x dims matrix, stored row-major per node.
struct MetricField {
  int dims = 1;
  std::vector<double> g;
  MetricMode mode = MetricMode::Prescribed;

  std::size_t node_count() const { return g.size() / static_cast<std::size_t>(dims * dims); }
  double at(std::size_t node, int a, int b) const {
    return g[node * static_cast<std::size_t>(dims * dims) + static_cast<std::size_t>(a * dims + b)];
  }
};

/// Same matrix at every node; `matrix` is dims x dims row-major.
inline MetricField constant_metric(const DomainGrid& grid, std::span<const double> matrix) {
  const int m = grid.dims();
  if (matrix.size() != static_cast<std::size_t>(m * m))
    throw Error(ErrorCode::InvalidSpec, "metric matrix has wrong size");
  MetricField out;
  out.dims = m;
  out.mode = MetricMode::Prescribed;
  out.g.reserve(grid.node_count() * matrix.size());
  for (std::size_t j = 0; j < grid.node_count(); ++j) out.g.insert(out.g.end(), matrix.begin(), matrix.end());
  return out;
}

inline MetricField identity_metric(const DomainGrid& grid) {
  const std::vector<double> id = grid.dims() == 1 ? std::vector<double>{1.0} : std::vector<double>{1.0, 0.0, 0.0, 1.0};
  return constant_metric(grid, id);
}

namespace detail {
inline double metric_det(const MetricField& g, std::size_t j) {
  return g.dims == 1 ? g.at(j, 0, 0) : g.at(j, 0, 0) * g.at(j, 1, 1) - g.at(j, 0, 1) * g.at(j, 1, 0);
}
}  // namespace detail

/// g_ab = h(d_a phi, d_b phi).
inline MetricField induced_metric(const MapField& phi) {
  const DomainGrid& grid = phi.grid();
  const int m = grid.dims();
  const std::size_t d = phi.dim();
  std::vector<std::vector<double>> dphi;
  for (int a = 0; a < m; ++a) {
    std::vector<double> da = phi.point_derivative(a);
    for (std::size_t j = 0; j < phi.node_count(); ++j)
      project_tangent_inplace(phi.spec(), phi.point(j), {da.data() + j * d, d});
    dphi.push_back(std::move(da));
  }
  MetricField out;
  out.dims = m;
  out.mode = MetricMode::Induced;
  out.g.resize(phi.node_count() * static_cast<std::size_t>(m * m));
  for (std::size_t j = 0; j < phi.node_count(); ++j) {
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        std::span<const double> ua(dphi[static_cast<std::size_t>(a)].data() + j * d, d);
        std::span<const double> ub(dphi[static_cast<std::size_t>(b)].data() + j * d, d);
        out.g[j * static_cast<std::size_t>(m * m) + static_cast<std::size_t>(a * m + b)] = model_form(phi.spec(), ua, ub);
      }
    if (detail::metric_det(out, j) <= 1e-10)
      throw Error(ErrorCode::DegenerateImmersion, "induced metric is degenerate at node " + std::to_string(j));
  }
  return out;
}

/// Orthonormal frame {e_i} (Gram-Schmidt on coordinate fields, e_1 parallel to
/// d_1), the summed connection term sum_i nabla_{e_i} e_i, and sqrt(det g).
struct FrameField {
  std::shared_ptr<const DomainGrid> grid;
  MetricField metric;
  int dims = 1;
  std::vector<double> e;          // [node][i][a]: coordinate component a of e_i
  std::vector<double> div_terms;  // [node][a]: sum_i (nabla_{e_i} e_i)^a
  std::vector<double> vol;        // sqrt(det g)

  std::size_t node_count() const { return vol.size(); }
  double frame(std::size_t node, int i, int a) const {
    return e[node * static_cast<std::size_t>(dims * dims) + static_cast<std::size_t>(i * dims + a)];
  }
  double div(std::size_t node, int a) const { return div_terms[node * static_cast<std::size_t>(dims) + static_cast<std::size_t>(a)]; }
  MetricMode mode() const { return metric.mode; }
};

inline FrameField orthonormal_frame(std::shared_ptr<const DomainGrid> grid_ptr, const MetricField& g) {
  const DomainGrid& grid = *grid_ptr;
  const int m = grid.dims();
  const std::size_t nodes = grid.node_count();
  if (g.dims != m || g.node_count() != nodes) throw Error(ErrorCode::DegenerateMetric, "metric does not match grid");

  FrameField f;
  f.grid = grid_ptr;
  f.metric = g;
  f.dims = m;
  const std::size_t mm = static_cast<std::size_t>(m * m);
  f.e.assign(nodes * mm, 0.0);
  f.div_terms.assign(nodes * static_cast<std::size_t>(m), 0.0);
  f.vol.resize(nodes);

  for (std::size_t j = 0; j < nodes; ++j) {
    const double det = detail::metric_det(g, j);
    const double g11 = g.at(j, 0, 0);
    if (!(det > 1e-10) || !(g11 > 1e-10) || !std::isfinite(det))
      throw Error(ErrorCode::DegenerateMetric, "metric is not positive definite at node " + std::to_string(j));
    f.vol[j] = std::sqrt(det);
    double* ej = f.e.data() + j * mm;
    if (m == 1) {
      ej[0] = 1.0 / std::sqrt(g11);
    } else {
      const double g12 = g.at(j, 0, 1);
      const double g22 = g.at(j, 1, 1);
      ej[0] = 1.0 / std::sqrt(g11);
      ej[1] = 0.0;
      const double n2 = std::sqrt(g22 - g12 * g12 / g11);
      ej[2] = -(g12 / g11) / n2;
      ej[3] = 1.0 / n2;
    }
  }

  // Christoffel symbols Gamma^k_ab = 1/2 g^{kl} (d_a g_bl + d_b g_al - d_l g_ab).
  std::vector<std::vector<double>> dg;  // dg[c] = d_c g, node-major with mm comps
  double gscale = 0.0;
  for (double v : g.g) gscale = std::max(gscale, std::abs(v));
  for (int c = 0; c < m; ++c) dg.push_back(grid.derivative(c, g.g, mm, gscale));
  // d_c e_i^a, node-major with mm comps
  double escale = 0.0;
  for (double v : f.e) escale = std::max(escale, std::abs(v));
  std::vector<std::vector<double>> de;
  for (int c = 0; c < m; ++c) de.push_back(grid.derivative(c, f.e, mm, escale));

  for (std::size_t j = 0; j < nodes; ++j) {
    auto dgv = [&](int c, int a, int b) {
      return dg[static_cast<std::size_t>(c)][j * mm + static_cast<std::size_t>(a * m + b)];
    };
    double ginv[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    if (m == 1) {
      ginv[0][0] = 1.0 / g.at(j, 0, 0);
    } else {
      const double det = detail::metric_det(g, j);
      ginv[0][0] = g.at(j, 1, 1) / det;
      ginv[1][1] = g.at(j, 0, 0) / det;
      ginv[0][1] = ginv[1][0] = -g.at(j, 0, 1) / det;
    }
    for (int k = 0; k < m; ++k) {
      double acc = 0.0;
      for (int i = 0; i < m; ++i) {
        // e_i(e_i^k)
        double transport = 0.0;
        for (int c = 0; c < m; ++c)
          transport += f.frame(j, i, c) * de[static_cast<std::size_t>(c)][j * mm + static_cast<std::size_t>(i * m + k)];
        // Gamma^k_ab e_i^a e_i^b
        double gamma_term = 0.0;
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b) {
            double gamma = 0.0;
            for (int l = 0; l < m; ++l) gamma += 0.5 * ginv[k][l] * (dgv(a, b, l) + dgv(b, a, l) - dgv(l, a, b));
            gamma_term += gamma * f.frame(j, i, a) * f.frame(j, i, b);
          }
        acc += transport + gamma_term;
      }
      f.div_terms[j * static_cast<std::size_t>(m) + static_cast<std::size_t>(k)] = acc;
    }
  }
  return f;
}

/// Discrete integral of f against v_g: sum_x f(x) vol(x) prod_a h_a.
inline double integrate(const FrameField& frame, std::span<const double> f) {
  CompensatedSum s;
  for (std::size_t j = 0; j < frame.node_count(); ++j) s.add(f[j] * frame.vol[j]);
  return s.value() * frame.grid->cell_volume();
}

/// e_i(f) for a scalar field.
inline std::vector<double> frame_derivative(const FrameField& frame, std::span<const double> f, int i) {
  const DomainGrid& grid = *frame.grid;
  double scale = 0.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  std::vector<double> out(f.size(), 0.0);
  for (int a = 0; a < frame.dims; ++a) {
    const std::vector<double> da = grid.derivative(a, f, 1, scale);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += frame.frame(j, i, a) * da[j];
  }
  return out;
}

/// |grad f|^2 = sum_i e_i(f)^2.
inline std::vector<double> gradient_norm_sq(const FrameField& frame, std::span<const double> f) {
  std::vector<double> out(f.size(), 0.0);
  for (int i = 0; i < frame.dims; ++i) {
    const std::vector<double> ei = frame_derivative(frame, f, i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += ei[j] * ei[j];
  }
  return out;
}

/// Positive Laplace-Beltrami operator: Delta f = -sum_i { e_i e_i f - (nabla_{e_i} e_i) f }.
inline std::vector<double> scalar_laplacian(const FrameField& frame, std::span<const double> f) {
  const DomainGrid& grid = *frame.grid;
  double scale = 0.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  std::vector<std::vector<double>> df;
  for (int a = 0; a < frame.dims; ++a) df.push_back(grid.derivative(a, f, 1, scale));
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t j = 0; j < out.size(); ++j)
    for (int a = 0; a < frame.dims; ++a) out[j] += frame.div(j, a) * df[static_cast<std::size_t>(a)][j];
  for (int i = 0; i < frame.dims; ++i) {
    std::vector<double> ei(f.size(), 0.0);
    for (std::size_t j = 0; j < out.size(); ++j)
      for (int a = 0; a < frame.dims; ++a) ei[j] += frame.frame(j, i, a) * df[static_cast<std::size_t>(a)][j];
    const std::vector<double> eiei = frame_derivative(frame, ei, i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] -= eiei[j];
  }
  return out;
}

/// sup over nodes of |g - phi^* h| (entrywise).
inline double metric_deviation(const MetricField& g, const MetricField& other) {
  double m = 0.0;
  for (std::size_t i = 0; i < g.g.size(); ++i) m = std::max(m, std::abs(g.g[i] - other.g[i]));
  return m;
}

}  // namespace polyflow
