#pragma once

// Numerical checks of the variational and pointwise identities: first
// variation of E_1..E_3, the variation of the tension field, orthogonality,
// curvature symmetry, the Bochner-type identity, the curvature sign, the
// Kato inequality, the cut-off function and the Caccioppoli inequality.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "polyflow/energy.hpp"
#include "polyflow/error.hpp"
#include "polyflow/fields.hpp"
#include "polyflow/metric.hpp"
#include "polyflow/pullback.hpp"
#include "polyflow/space_form.hpp"

namespace polyflow {

struct AuditCheck {
  double max_residual = 0.0;
  long nodes_failed = 0;
  double tolerance = 0.0;
  bool pass = true;
  bool applicable = true;
};

struct AuditReport {
  std::map<std::string, AuditCheck> checks;
  std::map<std::string, double> diagnostics;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second.pass; });
  }
};

/// Base tolerance for identities that hold exactly in the continuum.
inline double scheme_tolerance(const DomainGrid& grid) {
  switch (grid.differentiation()) {
    case Differentiation::Spectral: return 1e-8;
    case Differentiation::CentralFD4: return std::max(1e-8, 10.0 * std::pow(grid.max_spacing(), 4));
    case Differentiation::CentralFD2: return std::max(1e-8, 10.0 * std::pow(grid.max_spacing(), 2));
  }
  return 1e-8;
}

/// phi_t(x) = exp_{phi(x)}(t V(x)).
inline MapField vary(const MapField& phi, const Section& v, double t) {
  std::vector<double> out(phi.values().size());
  const std::size_t d = phi.dim();
  std::vector<double> step(d);
  for (std::size_t j = 0; j < phi.node_count(); ++j) {
    const auto vj = v.at(j);
    for (std::size_t k = 0; k < d; ++k) step[k] = t * vj[k];
    exp_map_into(phi.spec(), phi.point(j), step, {out.data() + j * d, d});
  }
  if (t == 0.0) out = phi.values();
  return MapField(phi.grid_ptr(), phi.spec(), std::move(out), phi.twist());
}

/// Low-mode trigonometric section with seeded coefficients, projected to be
/// tangent and scaled to unit sup-norm.
inline Section random_smooth_section(const MapField& phi, std::uint64_t seed, int modes = 3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const DomainGrid& grid = phi.grid();
  const std::size_t d = phi.dim();
  Section v(phi.node_count(), d);
  for (std::size_t comp = 0; comp < d; ++comp) {
    for (int a = 0; a < grid.dims(); ++a)
      for (int k = 1; k <= modes; ++k) {
        const double ca = normal(rng) / k;
        const double sa = normal(rng) / k;
        const double w = 2.0 * std::numbers::pi * k / grid.length(a);
        for (std::size_t j = 0; j < phi.node_count(); ++j) {
          const double x = grid.coordinate(j, a);
          v.values[j * d + comp] += ca * std::cos(w * x) + sa * std::sin(w * x);
        }
      }
    const double c0 = normal(rng);
    for (std::size_t j = 0; j < phi.node_count(); ++j) v.values[j * d + comp] += c0;
  }
  project_section(phi, v);
  const double peak = sup_norm(phi.spec(), v);
  if (peak > 0.0)
    for (double& x : v.values) x /= peak;
  v.scale = v.max_abs();
  return v;
}

/// tau_k: tension (k=1), bitension (k=2) or tritension (k=3).
inline Section tension_of_order(const PullbackCalculus& calc, int k) {
  switch (k) {
    case 1: return calc.tension();
    case 2: return calc.bitension();
    case 3: return calc.tritension_general();
    default: throw Error(ErrorCode::BadParams, "variation order must be 1, 2 or 3");
  }
}

struct FirstVariation {
  double finite_difference = 0.0;  // (E_k(phi_t) - E_k(phi_-t)) / 2t
  double analytic = 0.0;           // -int <tau_k, V>
  double residual = 0.0;           // |FD - A| / (1 + |A|)
};

namespace detail {
inline void require_prescribed(const FrameField& frame) {
  if (frame.mode() == MetricMode::Induced)
    throw Error(ErrorCode::MetricModeError, "variation checks need a fixed prescribed metric");
}
}  // namespace detail

inline FirstVariation first_variation(const MapField& phi, const Section& v, const FrameField& frame, int k,
                                      double t) {
  detail::require_prescribed(frame);
  if (!(t > 0.0)) throw Error(ErrorCode::BadParams, "variation step must be positive");
  const PullbackCalculus calc(phi, frame);
  const Section tau_k = tension_of_order(calc, k);
  FirstVariation fv;
  fv.analytic = -integrate(frame, pointwise_inner(phi.spec(), tau_k, v));
  const MapField plus = vary(phi, v, t);
  const MapField minus = vary(phi, v, -t);
  fv.finite_difference = (energy_of_order(plus, frame, k) - energy_of_order(minus, frame, k)) / (2.0 * t);
  fv.residual = std::abs(fv.finite_difference - fv.analytic) / (1.0 + std::abs(fv.analytic));
  return fv;
}

inline double first_variation_residual(const MapField& phi, const Section& v, const FrameField& frame, int k,
                                       double t) {
  return first_variation(phi, v, frame, k, t).residual;
}

/// sup | P((tau(phi_t) - tau(phi_-t)) / 2t) - (-Delta V + R(V)) |.
inline double tension_variation_residual(const MapField& phi, const Section& v, const FrameField& frame,
                                         double t) {
  detail::require_prescribed(frame);
  if (!(t > 0.0)) throw Error(ErrorCode::BadParams, "variation step must be positive");
  const PullbackCalculus calc(phi, frame);
  const Section expected = calc.curvature_contraction(v) - calc.rough_laplacian(v);
  const MapField plus = vary(phi, v, t);
  const MapField minus = vary(phi, v, -t);
  const Section tp = tension(plus, frame);
  const Section tm = tension(minus, frame);
  Section fd = (1.0 / (2.0 * t)) * (tp - tm);
  project_section(phi, fd);
  return sup_norm(phi.spec(), fd - expected);
}

/// Richardson check of an O(t^2) residual.
///
/// When residual(t) is already below `floor` the finite difference is exact
/// up to roundoff (flat targets make E_k polynomial in t), the ratio carries
/// no information and the check passes as `exact`.
struct RichardsonResult {
  double residual_t = 0.0;
  double residual_half = 0.0;
  double ratio = 0.0;
  bool exact = false;
  bool pass = false;
};

template <typename ResidualFn>
RichardsonResult richardson_ratio(ResidualFn&& residual, double t, double floor = 1e-10) {
  RichardsonResult r;
  r.residual_t = residual(t);
  r.residual_half = residual(0.5 * t);
  r.ratio = r.residual_half > 0.0 ? r.residual_t / r.residual_half : std::numeric_limits<double>::infinity();
  r.exact = r.residual_t <= floor;
  r.pass = r.exact || (r.ratio >= 3.5 && r.ratio <= 4.5);
  return r;
}

namespace detail {

inline AuditCheck make_check(double max_residual, long failed, double tol) {
  AuditCheck c;
  c.max_residual = max_residual;
  c.nodes_failed = failed;
  c.tolerance = tol;
  c.pass = failed == 0 && max_residual <= tol;
  return c;
}

inline AuditCheck not_applicable(double tol) {
  AuditCheck c;
  c.tolerance = tol;
  c.applicable = false;
  return c;
}

inline double sup(const std::vector<double>& f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

/// Relative check: |value| <= tol * (1 + scale) per node; reports |value| / (1 + scale).
inline AuditCheck relative_zero_check(const std::vector<double>& value, const std::vector<double>& scale,
                                      double tol) {
  double worst = 0.0;
  long failed = 0;
  for (std::size_t j = 0; j < value.size(); ++j) {
    const double rel = std::abs(value[j]) / (1.0 + scale[j]);
    worst = std::max(worst, rel);
    if (rel > tol) ++failed;
  }
  return make_check(worst, failed, tol);
}

/// Kato inequality |grad |alpha|| <= |nabla alpha| at nodes with |alpha| > 1e-6.
/// |grad |alpha|| is taken from the smooth scalar |alpha|^2, which has no kinks.
inline AuditCheck kato_check(const PullbackCalculus& calc, const Section& alpha, double tol) {
  const SpaceFormSpec& spec = calc.spec();
  const FrameField& frame = calc.frame();
  const std::vector<double> a2 = pointwise_inner(spec, alpha, alpha);
  const std::vector<double> grad_a2 = gradient_norm_sq(frame, a2);
  const std::vector<Section> na = calc.nabla_bar_all(alpha);
  std::vector<double> na2(a2.size(), 0.0);
  for (const Section& s : na) {
    const auto n = pointwise_inner(spec, s, s);
    for (std::size_t j = 0; j < n.size(); ++j) na2[j] += n[j];
  }
  double sup_a = 0.0;
  double sup_na = 0.0;
  for (std::size_t j = 0; j < a2.size(); ++j) {
    sup_a = std::max(sup_a, std::sqrt(std::max(0.0, a2[j])));
    sup_na = std::max(sup_na, std::sqrt(std::max(0.0, na2[j])));
  }
  double worst = 0.0;
  long failed = 0;
  for (std::size_t j = 0; j < a2.size(); ++j) {
    const double a = std::sqrt(std::max(0.0, a2[j]));
    if (a <= 1e-6) continue;
    const double lhs = std::sqrt(std::max(0.0, grad_a2[j])) / (2.0 * a);
    const double rhs = std::sqrt(std::max(0.0, na2[j]));
    // Roundoff in d|alpha|^2 is relative to sup|alpha|, then divided by |alpha(x)|.
    const double unit = (sup_a / a) * (1.0 + sup_na + sup_a);
    const double normalized = std::max(0.0, lhs - rhs) / unit;
    worst = std::max(worst, normalized);
    if (normalized > tol) ++failed;
  }
  AuditCheck c = make_check(worst, failed, tol);
  return c;
}

}  // namespace detail

/// Bundles the orthogonality, curvature-symmetry, Bochner, curvature-sign and Kato checks.
inline AuditReport pointwise_identity_audit(const MapField& phi, const FrameField& frame,
                                            std::uint64_t seed = 7) {
  const PullbackCalculus calc(phi, frame);
  const SpaceFormSpec& spec = phi.spec();
  const std::size_t nodes = phi.node_count();
  const double tol = scheme_tolerance(phi.grid());
  const std::vector<Section>& dphi = calc.differential();
  const Section& tau = calc.tension();
  const std::vector<Section>& ntau = calc.nabla_tension();
  const Section& lap = calc.laplacian_tension();
  const std::vector<double> tau2 = pointwise_inner(spec, tau, tau);

  AuditReport report;

  // (a) sum_j h(nabla_j tau, dphi e_j) + |tau|^2 = 0 on isometric immersions.
  const double deviation = calc.isometry_deviation();
  report.diagnostics["isometry_deviation"] = deviation;
  if (deviation <= PullbackCalculus::kIsometryTolerance) {
    std::vector<double> value(tau2);
    std::vector<double> scale(tau2);
    for (int i = 0; i < calc.dims(); ++i) {
      const auto ip = pointwise_inner(spec, ntau[static_cast<std::size_t>(i)], dphi[static_cast<std::size_t>(i)]);
      const auto nn = pointwise_norm(spec, ntau[static_cast<std::size_t>(i)]);
      const auto dn = pointwise_norm(spec, dphi[static_cast<std::size_t>(i)]);
      for (std::size_t j = 0; j < nodes; ++j) {
        value[j] += ip[j];
        scale[j] += nn[j] * dn[j];
      }
    }
    report.checks["orthogonality"] = detail::relative_zero_check(value, scale, tol);
  } else {
    report.checks["orthogonality"] = detail::not_applicable(tol);
  }

  // (b) <R(v3,v4)v2,v1> = <R(v1,v2)v4,v3> on random tangent quadruples.
  {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, nodes - 1);
    const std::size_t d = phi.dim();
    const double sym_tol = 1e-12 * std::max(1.0, std::abs(spec.c));
    double worst = 0.0;
    long failed = 0;
    std::vector<std::vector<double>> v(4, std::vector<double>(d));
    std::vector<double> r1(d);
    std::vector<double> r2(d);
    for (int trial = 0; trial < 1000; ++trial) {
      const auto x = phi.point(pick(rng));
      for (auto& vi : v) {
        for (double& e : vi) e = normal(rng);
        project_tangent_inplace(spec, x, vi);
        const double n = std::sqrt(std::max(1e-300, model_form(spec, vi, vi)));
        for (double& e : vi) e /= n;
      }
      curvature_op_into(spec, v[2], v[3], v[1], r1);
      curvature_op_into(spec, v[0], v[1], v[3], r2);
      const double res = std::abs(model_form(spec, r1, v[0]) - model_form(spec, r2, v[2]));
      worst = std::max(worst, res);
      if (res > sym_tol) ++failed;
    }
    report.checks["curvature_symmetry"] = detail::make_check(worst, failed, sym_tol);
  }

  // (c) <tau, Delta tau> - 1/2 Delta|tau|^2 - |nabla tau|^2 = 0.
  {
    const std::vector<double> half_lap = scalar_laplacian(frame, tau2);
    const std::vector<double> cross = pointwise_inner(spec, tau, lap);
    std::vector<double> value(nodes);
    std::vector<double> scale(nodes);
    const auto tn = pointwise_norm(spec, tau);
    const auto ln = pointwise_norm(spec, lap);
    std::vector<double> nt2(nodes, 0.0);
    for (const Section& s : ntau) {
      const auto n = pointwise_inner(spec, s, s);
      for (std::size_t j = 0; j < nodes; ++j) nt2[j] += n[j];
    }
    for (std::size_t j = 0; j < nodes; ++j) {
      value[j] = cross[j] - 0.5 * half_lap[j] - nt2[j];
      scale[j] = tn[j] * ln[j] + 0.5 * std::abs(half_lap[j]) + nt2[j];
    }
    report.checks["bochner_identity"] = detail::relative_zero_check(value, scale, tol);
  }

  // (d) c (sum_i <Delta tau, dphi e_i>^2 - |Delta tau|^2 |dphi|^2) >= 0 for c <= 0.
  {
    const double sign_tol = 1e-10;
    if (spec.c <= 0.0) {
      const std::vector<double> l2 = pointwise_inner(spec, lap, lap);
      std::vector<double> proj(nodes, 0.0);
      std::vector<double> d2(nodes, 0.0);
      for (const Section& s : dphi) {
        const auto ip = pointwise_inner(spec, lap, s);
        const auto n = pointwise_inner(spec, s, s);
        for (std::size_t j = 0; j < nodes; ++j) {
          proj[j] += ip[j] * ip[j];
          d2[j] += n[j];
        }
      }
      double worst = 0.0;
      long failed = 0;
      double min_q = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < nodes; ++j) {
        const double q = spec.c * (proj[j] - l2[j] * d2[j]);
        min_q = std::min(min_q, q);
        const double normalized = std::max(0.0, -q) / std::max(1.0, std::abs(spec.c) * l2[j] * d2[j]);
        worst = std::max(worst, normalized);
        if (normalized > sign_tol) ++failed;
      }
      report.checks["curvature_sign"] = detail::make_check(worst, failed, sign_tol);
      report.diagnostics["curvature_sign_min"] = min_q;
    } else {
      report.checks["curvature_sign"] = detail::not_applicable(sign_tol);
    }
  }

  // (e) Kato for tau and Delta tau.
  report.checks["kato_tau"] = detail::kato_check(calc, tau, tol);
  report.checks["kato_laplacian_tau"] = detail::kato_check(calc, lap, tol);

  // Diagnostic only: node variance of |alpha| and int |alpha|^2 |nabla alpha|^2.
  {
    const auto tn = pointwise_norm(spec, tau);
    double mean = 0.0;
    for (double x : tn) mean += x;
    mean /= static_cast<double>(nodes);
    double var = 0.0;
    for (double x : tn) var += (x - mean) * (x - mean);
    report.diagnostics["tau_norm_variance"] = var / static_cast<double>(nodes);
    std::vector<double> w(nodes, 0.0);
    for (const Section& s : ntau) {
      const auto n = pointwise_inner(spec, s, s);
      for (std::size_t j = 0; j < nodes; ++j) w[j] += tau2[j] * n[j];
    }
    report.diagnostics["tau_sq_weighted_gradient"] = integrate(frame, w);
  }
  return report;
}

/// Cut-off eta = S((2r - d)/r), S the quintic smoothstep, d the periodic
/// coordinate distance to `center`.
struct CutoffField {
  std::vector<double> eta;
  std::vector<double> grad_norm;  // measured |grad eta| (second-order differences)
  std::size_t center = 0;
  double r = 0.0;
  double grad_bound = 0.0;  // 15 / (8 r)

  bool in_inner_ball(std::size_t node) const { return eta[node] >= 1.0; }
};

inline CutoffField cutoff(const FrameField& frame, std::size_t center, double r) {
  const DomainGrid& grid = *frame.grid;
  double shortest = grid.length(0);
  if (grid.dims() == 2) shortest = std::min(shortest, grid.length(1));
  if (!(r > 0.0)) throw Error(ErrorCode::BadParams, "cut-off radius must be positive");
  if (2.0 * r >= 0.5 * shortest) throw Error(ErrorCode::RadiusTooLarge, "2r must stay below half the shortest period");
  if (center >= grid.node_count()) throw Error(ErrorCode::BadParams, "cut-off center outside the grid");

  auto smoothstep = [](double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
  };
  CutoffField out;
  out.center = center;
  out.r = r;
  out.grad_bound = 15.0 / (8.0 * r);
  out.eta.resize(grid.node_count());
  for (std::size_t j = 0; j < grid.node_count(); ++j) {
    double d2 = 0.0;
    for (int a = 0; a < grid.dims(); ++a) {
      double dx = std::abs(grid.coordinate(j, a) - grid.coordinate(center, a));
      dx = std::min(dx, grid.length(a) - dx);
      d2 += dx * dx;
    }
    out.eta[j] = smoothstep((2.0 * r - std::sqrt(d2)) / r);
  }
  // |grad eta|^2 = g^{ab} d_a eta d_b eta with central second-order differences.
  out.grad_norm.resize(grid.node_count());
  for (std::size_t j = 0; j < grid.node_count(); ++j) {
    const auto idx = grid.multi_index(j);
    double d[2] = {0.0, 0.0};
    for (int a = 0; a < grid.dims(); ++a) {
      const int i0 = idx[0];
      const int i1 = idx[1];
      const std::size_t plus = a == 0 ? grid.node_at(i0 + 1, i1) : grid.node_at(i0, i1 + 1);
      const std::size_t minus = a == 0 ? grid.node_at(i0 - 1, i1) : grid.node_at(i0, i1 - 1);
      d[a] = (out.eta[plus] - out.eta[minus]) / (2.0 * grid.spacing(a));
    }
    double s = 0.0;
    for (int i = 0; i < frame.dims; ++i) {
      double ei = 0.0;
      for (int a = 0; a < frame.dims; ++a) ei += frame.frame(j, i, a) * d[a];
      s += ei * ei;
    }
    out.grad_norm[j] = std::sqrt(s);
  }
  return out;
}

struct CaccioppoliResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // lhs - rhs
};

/// (1/eps) int |Delta tau|^2 |grad eta|^2 - c int |tau|^4 |grad eta|^2
///   >= (1-eps) int_{B_r} |nabla Delta tau|^2 - (c/4) int_{B_r} |grad |tau|^2|^2 - c int_{B_r} |tau|^2 |nabla tau|^2
inline CaccioppoliResult caccioppoli_audit(const MapField& phi, const FrameField& frame, const CutoffField& eta,
                                           double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::BadParams, "epsilon must lie in (0, 1)");
  const SpaceFormSpec& spec = phi.spec();
  if (spec.c > 0.0) throw Error(ErrorCode::NotTriharmonic, "the inequality is derived for c <= 0");
  const PullbackCalculus calc(phi, frame);
  const double t3 = sup_norm(spec, calc.tritension_general());
  if (!(t3 <= 1e-5))
    throw Error(ErrorCode::NotTriharmonic, "sup |tau_3| = " + std::to_string(t3) + " exceeds 1e-5");

  const std::size_t nodes = phi.node_count();
  const Section& tau = calc.tension();
  const Section& lap = calc.laplacian_tension();
  const std::vector<double> tau2 = pointwise_inner(spec, tau, tau);
  const std::vector<double> lap2 = pointwise_inner(spec, lap, lap);
  const std::vector<double> grad_tau2 = gradient_norm_sq(frame, tau2);
  std::vector<double> nlap2(nodes, 0.0);
  for (const Section& s : calc.nabla_bar_all(lap)) {
    const auto n = pointwise_inner(spec, s, s);
    for (std::size_t j = 0; j < nodes; ++j) nlap2[j] += n[j];
  }
  std::vector<double> ntau2(nodes, 0.0);
  for (const Section& s : calc.nabla_tension()) {
    const auto n = pointwise_inner(spec, s, s);
    for (std::size_t j = 0; j < nodes; ++j) ntau2[j] += n[j];
  }
  std::vector<double> left(nodes);
  std::vector<double> right(nodes);
  const double c = spec.c;
  for (std::size_t j = 0; j < nodes; ++j) {
    const double g2 = eta.grad_norm[j] * eta.grad_norm[j];
    left[j] = lap2[j] * g2 / eps - c * tau2[j] * tau2[j] * g2;
    right[j] = eta.in_inner_ball(j)
                   ? (1.0 - eps) * nlap2[j] - 0.25 * c * grad_tau2[j] - c * tau2[j] * ntau2[j]
                   : 0.0;
  }
  CaccioppoliResult out;
  out.lhs = integrate(frame, left);
  out.rhs = integrate(frame, right);
  out.margin = out.lhs - out.rhs;
  return out;
}

}  // namespace polyflow
