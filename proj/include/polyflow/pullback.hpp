#pragma once

// Operators on sections of the pull-back bundle phi^{-1}TN: the differential,
// induced connection, tension, rough Laplacian, curvature contraction,
// Jacobi operator and the bi/tri-tension fields.
//
// Conventions:
//   rough Laplacian  Delta V = -sum_i { nabla_{e_i} nabla_{e_i} V - nabla_{nabla_{e_i} e_i} V }  (>= 0)
//   curvature        R(X,Y)Z = c (h(Y,Z) X - h(X,Z) Y)
//   Jacobi           J(V) = Delta V - sum_i R(V, dphi(e_i)) dphi(e_i)
//   tritension       tau_3 = J(Delta tau) - sum_i R(nabla_{e_i} tau, tau) dphi(e_i)

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyflow/error.hpp"
#include "polyflow/fields.hpp"
#include "polyflow/metric.hpp"
#include "polyflow/space_form.hpp"

namespace polyflow {

/// Accumulates ambient terms and remembers the largest magnitude seen, which
/// becomes the roundoff scale of the projected result.
class TermAccumulator {
 public:
  TermAccumulator(std::size_t nodes, std::size_t dim) : buf_(nodes * dim, 0.0), dim_(dim) {}

  void add(std::span<const double> term, double factor = 1.0) {
    double m = 0.0;
    for (std::size_t i = 0; i < buf_.size(); ++i) {
      buf_[i] += factor * term[i];
      m = std::max(m, std::abs(factor * term[i]));
    }
    scale_ = std::max(scale_, m);
  }

  void note_scale(double s) { scale_ = std::max(scale_, s); }
  std::vector<double>& buffer() { return buf_; }

  Section finish(const MapField& phi) {
    for (double v : buf_) scale_ = std::max(scale_, std::abs(v));
    Section out(std::move(buf_), dim_, scale_);
    project_section(phi, out);
    return out;
  }

 private:
  std::vector<double> buf_;
  std::size_t dim_;
  double scale_ = 0.0;
};

class PullbackCalculus {
 public:
  PullbackCalculus(const MapField& phi, const FrameField& frame) : phi_(phi), frame_(frame) {
    if (frame.node_count() != phi.node_count() || frame.dims != phi.grid().dims())
      throw Error(ErrorCode::InvalidSpec, "frame does not belong to the map's grid");
  }

  // The calculus keeps references; temporaries would dangle.
  PullbackCalculus(MapField&&, const FrameField&) = delete;
  PullbackCalculus(const MapField&, FrameField&&) = delete;
  PullbackCalculus(MapField&&, FrameField&&) = delete;

  const MapField& map() const { return phi_; }
  const FrameField& frame() const { return frame_; }
  const SpaceFormSpec& spec() const { return phi_.spec(); }
  int dims() const { return frame_.dims; }
  std::size_t nodes() const { return phi_.node_count(); }
  std::size_t dim() const { return phi_.dim(); }

  /// d phi(e_i), i = 0..dims-1.
  const std::vector<Section>& differential() const {
    if (!dphi_) {
      std::vector<std::vector<double>> d;
      for (int a = 0; a < dims(); ++a) d.push_back(phi_.point_derivative(a));
      dphi_coord_ = d;
      std::vector<Section> out;
      for (int i = 0; i < dims(); ++i) out.push_back(frame_combine(d, i));
      dphi_ = std::move(out);
    }
    return *dphi_;
  }

  /// tau = sum_i { nabla_{e_i}(dphi(e_i)) - dphi(nabla_{e_i} e_i) }.
  const Section& tension() const {
    if (!tau_) {
      const std::vector<Section>& dphi = differential();
      TermAccumulator acc(nodes(), dim());
      for (int i = 0; i < dims(); ++i) {
        const auto dd = ambient_derivatives(dphi[static_cast<std::size_t>(i)]);
        acc.add(frame_sum(dd, i));
      }
      acc.add(div_sum(*dphi_coord_), -1.0);
      tau_ = acc.finish(phi_);
    }
    return *tau_;
  }

  /// nabla_{e_i} V for every frame index i.
  std::vector<Section> nabla_bar_all(const Section& v) const {
    const auto dv = ambient_derivatives(v);
    std::vector<Section> out;
    for (int i = 0; i < dims(); ++i) out.push_back(frame_combine(dv, i));
    return out;
  }

  Section nabla_bar(const Section& v, int i) const {
    const auto dv = ambient_derivatives(v);
    return frame_combine(dv, i);
  }

  Section rough_laplacian(const Section& v) const {
    const auto dv = ambient_derivatives(v);
    TermAccumulator acc(nodes(), dim());
    acc.add(div_sum(dv));
    for (int i = 0; i < dims(); ++i) {
      const Section wi = frame_combine(dv, i);
      const auto dw = ambient_derivatives(wi);
      acc.add(frame_sum(dw, i), -1.0);
    }
    return acc.finish(phi_);
  }

  /// W^ell = Delta^{ell-1} tau.
  Section iterated_laplacian(const Section& tau, int ell) const {
    if (ell < 1) throw Error(ErrorCode::BadParams, "iterated Laplacian needs ell >= 1");
    Section w = tau;
    for (int k = 1; k < ell; ++k) w = rough_laplacian(w);
    return w;
  }

  /// sum_i R(V, dphi(e_i)) dphi(e_i).
  Section curvature_contraction(const Section& v) const {
    Section out(nodes(), dim());
    if (spec().c == 0.0) return out;
    const std::vector<Section>& dphi = differential();
    const double c = spec().c;
    double scale = 0.0;
    for (std::size_t j = 0; j < nodes(); ++j) {
      auto o = out.at(j);
      const auto vj = v.at(j);
      for (int i = 0; i < dims(); ++i) {
        const auto ei = dphi[static_cast<std::size_t>(i)].at(j);
        const double ee = model_form(spec(), ei, ei);
        const double ve = model_form(spec(), vj, ei);
        for (std::size_t k = 0; k < dim(); ++k) {
          o[k] += c * (ee * vj[k] - ve * ei[k]);
          scale = std::max(scale, std::abs(c) * (std::abs(ee * vj[k]) + std::abs(ve * ei[k])));
        }
      }
    }
    out.scale = scale;
    project_section(phi_, out);
    return out;
  }

  Section jacobi(const Section& v) const { return rough_laplacian(v) - curvature_contraction(v); }

  Section bitension() const { return jacobi(tension()); }

  /// Delta tau, cached.
  const Section& laplacian_tension() const {
    if (!lap_tau_) lap_tau_ = rough_laplacian(tension());
    return *lap_tau_;
  }

  /// nabla_{e_i} tau for all i, cached.
  const std::vector<Section>& nabla_tension() const {
    if (!nabla_tau_) nabla_tau_ = nabla_bar_all(tension());
    return *nabla_tau_;
  }

  /// General-target form: J(Delta tau) - sum_i R(nabla_{e_i} tau, tau) dphi(e_i).
  Section tritension_general() const {
    const Section& tau = tension();
    Section result = jacobi(laplacian_tension());
    const double c = spec().c;
    if (c == 0.0) return result;
    const std::vector<Section>& dphi = differential();
    const std::vector<Section>& ntau = nabla_tension();
    Section extra(nodes(), dim());
    double scale = 0.0;
    std::vector<double> tmp(dim());
    for (std::size_t j = 0; j < nodes(); ++j) {
      auto o = extra.at(j);
      for (int i = 0; i < dims(); ++i) {
        curvature_op_into(spec(), ntau[static_cast<std::size_t>(i)].at(j), tau.at(j),
                          dphi[static_cast<std::size_t>(i)].at(j), tmp);
        for (std::size_t k = 0; k < dim(); ++k) {
          o[k] += tmp[k];
          scale = std::max(scale, std::abs(tmp[k]));
        }
      }
    }
    extra.scale = scale;
    result = result - extra;
    project_section(phi_, result);
    return result;
  }

  /// Space-form form for isometric immersions: Delta^2 tau - R(Delta tau) - c |tau|^2 tau.
  Section tritension_space_form() const {
    const double deviation = isometry_deviation();
    if (!(deviation <= kIsometryTolerance))
      throw Error(ErrorCode::NotIsometric,
                  "metric differs from the pull-back metric by " + std::to_string(deviation));
    const Section& tau = tension();
    Section result = jacobi(laplacian_tension());
    const double c = spec().c;
    if (c == 0.0) return result;
    Section cubic(nodes(), dim());
    double scale = 0.0;
    for (std::size_t j = 0; j < nodes(); ++j) {
      const double t2 = model_form(spec(), tau.at(j), tau.at(j));
      auto o = cubic.at(j);
      for (std::size_t k = 0; k < dim(); ++k) {
        o[k] = c * t2 * tau.at(j)[k];
        scale = std::max(scale, std::abs(o[k]));
      }
    }
    cubic.scale = scale;
    result = result - cubic;
    project_section(phi_, result);
    return result;
  }

  /// sup |g - phi^* h|; infinite when phi is not an immersion.
  double isometry_deviation() const {
    try {
      return metric_deviation(frame_.metric, induced_metric(phi_));
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  }

  static constexpr double kIsometryTolerance = 1e-6;

 private:
  std::vector<std::vector<double>> ambient_derivatives(const Section& v) const {
    std::vector<std::vector<double>> out;
    for (int a = 0; a < dims(); ++a) out.push_back(phi_.section_derivative(v, a));
    return out;
  }

  /// sum_a e_i^a D_a at each node (unprojected).
  std::vector<double> frame_sum(const std::vector<std::vector<double>>& d, int i) const {
    std::vector<double> out(nodes() * dim(), 0.0);
    for (std::size_t j = 0; j < nodes(); ++j)
      for (int a = 0; a < dims(); ++a) {
        const double ea = frame_.frame(j, i, a);
        const double* src = d[static_cast<std::size_t>(a)].data() + j * dim();
        for (std::size_t k = 0; k < dim(); ++k) out[j * dim() + k] += ea * src[k];
      }
    return out;
  }

  /// sum_a (sum_i nabla_{e_i} e_i)^a D_a at each node (unprojected).
  std::vector<double> div_sum(const std::vector<std::vector<double>>& d) const {
    std::vector<double> out(nodes() * dim(), 0.0);
    for (std::size_t j = 0; j < nodes(); ++j)
      for (int a = 0; a < dims(); ++a) {
        const double da = frame_.div(j, a);
        const double* src = d[static_cast<std::size_t>(a)].data() + j * dim();
        for (std::size_t k = 0; k < dim(); ++k) out[j * dim() + k] += da * src[k];
      }
    return out;
  }

  Section frame_combine(const std::vector<std::vector<double>>& d, int i) const {
    TermAccumulator acc(nodes(), dim());
    acc.add(frame_sum(d, i));
    return acc.finish(phi_);
  }

  const MapField& phi_;
  const FrameField& frame_;
  mutable std::optional<std::vector<std::vector<double>>> dphi_coord_;
  mutable std::optional<std::vector<Section>> dphi_;
  mutable std::optional<Section> tau_;
  mutable std::optional<Section> lap_tau_;
  mutable std::optional<std::vector<Section>> nabla_tau_;
};

// Free-function surface.

inline std::vector<Section> differential(const MapField& phi, const FrameField& frame) {
  return PullbackCalculus(phi, frame).differential();
}

inline Section nabla_bar(const MapField& phi, const Section& v, int i, const FrameField& frame) {
  return PullbackCalculus(phi, frame).nabla_bar(v, i);
}

inline Section tension(const MapField& phi, const FrameField& frame) {
  return PullbackCalculus(phi, frame).tension();
}

inline Section rough_laplacian(const MapField& phi, const Section& v, const FrameField& frame) {
  return PullbackCalculus(phi, frame).rough_laplacian(v);
}

inline Section iterated_laplacian(const MapField& phi, const Section& tau, int ell, const FrameField& frame) {
  return PullbackCalculus(phi, frame).iterated_laplacian(tau, ell);
}

inline Section curvature_contraction(const MapField& phi, const Section& v, const FrameField& frame) {
  return PullbackCalculus(phi, frame).curvature_contraction(v);
}

inline Section jacobi(const MapField& phi, const Section& v, const FrameField& frame) {
  return PullbackCalculus(phi, frame).jacobi(v);
}

inline Section bitension(const MapField& phi, const FrameField& frame) {
  return PullbackCalculus(phi, frame).bitension();
}

inline Section tritension_general(const MapField& phi, const FrameField& frame) {
  return PullbackCalculus(phi, frame).tritension_general();
}

inline Section tritension_space_form(const MapField& phi, const FrameField& frame) {
  return PullbackCalculus(phi, frame).tritension_space_form();
}

}  // namespace polyflow
