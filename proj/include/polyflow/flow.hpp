#pragma once

// Descent flows for E, E_2 and E_3 with Armijo backtracking, and the probe
// that reads a terminal state against the vanishing results.
//
// The search direction is tau_k itself, or, with the Sobolev preconditioner,
// P(G S[vol tau_k]) where S = (1 + ell^2 |kappa|^2)^(-k) acts on ambient
// components in Fourier space and G is the ambient form. Either way the slope
// int <tau_k, d> is positive, so the Armijo test below is a true sufficient
// decrease condition on E_k.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "polyflow/energy.hpp"
#include "polyflow/error.hpp"
#include "polyflow/fields.hpp"
#include "polyflow/metric.hpp"
#include "polyflow/pullback.hpp"
#include "polyflow/verify.hpp"

namespace polyflow {

enum class FlowKind { Harmonic, Biharmonic, Triharmonic };
enum class MetricPolicy { FixedPrescribed, ReInduceEachStep };
enum class Preconditioner { None, Sobolev };

inline std::string_view to_string(FlowKind k) {
  switch (k) {
    case FlowKind::Harmonic: return "Harmonic";
    case FlowKind::Biharmonic: return "Biharmonic";
    case FlowKind::Triharmonic: return "Triharmonic";
  }
  return "?";
}

inline std::string_view to_string(MetricPolicy p) {
  return p == MetricPolicy::FixedPrescribed ? "FixedPrescribed" : "ReInduceEachStep";
}

inline std::string_view to_string(Preconditioner p) { return p == Preconditioner::None ? "None" : "Sobolev"; }

inline int order_of(FlowKind k) { return static_cast<int>(k) + 1; }

struct FlowConfig {
  FlowKind kind = FlowKind::Triharmonic;
  double dt0 = 0.0;  // <= 0 picks 0.1 h^2 (Harmonic) or 0.1 h^4
  long max_iters = 100000;
  double grad_tol = 1e-8;
  double armijo_c = 1e-4;
  double shrink = 0.5;
  double grow = 1.5;
  MetricPolicy metric_policy = MetricPolicy::ReInduceEachStep;
  Preconditioner preconditioner = Preconditioner::Sobolev;

  void validate() const {
    if (!(max_iters >= 0)) throw Error(ErrorCode::BadParams, "max_iters must be >= 0");
    if (!(grad_tol > 0.0)) throw Error(ErrorCode::BadParams, "grad_tol must be positive");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw Error(ErrorCode::BadParams, "armijo_c must lie in (0, 1)");
    if (!(shrink > 0.0 && shrink < 1.0)) throw Error(ErrorCode::BadParams, "shrink must lie in (0, 1)");
    if (!(grow >= 1.0)) throw Error(ErrorCode::BadParams, "grow must be >= 1");
    if (!std::isfinite(dt0)) throw Error(ErrorCode::BadParams, "dt0 must be finite");
  }
};

inline double initial_step(const FlowConfig& cfg, const DomainGrid& grid) {
  if (cfg.dt0 > 0.0) return cfg.dt0;
  const double h = grid.max_spacing();
  return cfg.kind == FlowKind::Harmonic ? 0.1 * h * h : 0.1 * std::pow(h, 4);
}

struct FlowRecord {
  long iter = 0;
  double E = 0.0;
  double E2 = 0.0;
  double E3 = 0.0;
  double Etilde4 = 0.0;
  double L4_tension = 0.0;
  double sup_tau = 0.0;
  double sup_descent = 0.0;
  double dt = 0.0;  // step accepted to reach this state (0 for the initial state)
};

enum class FlowStatus { Converged, MaxIterations, Stalled };

inline std::string_view to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::Converged: return "Converged";
    case FlowStatus::MaxIterations: return "MaxIterations";
    case FlowStatus::Stalled: return "Stalled";
  }
  return "?";
}

struct FlowTrace {
  std::vector<FlowRecord> records;
  FlowStatus status = FlowStatus::MaxIterations;
  long rejected_steps = 0;
  std::string message;
};

/// tau, tau_2 or tau_3 according to the flow kind.
inline Section descent_field(const PullbackCalculus& calc, FlowKind kind) {
  return tension_of_order(calc, order_of(kind));
}

inline Section descent_field(const MapField& phi, const FrameField& frame, FlowKind kind) {
  return descent_field(PullbackCalculus(phi, frame), kind);
}

/// Search direction for a given descent field.
inline Section search_direction(const MapField& phi, const FrameField& frame, const Section& field,
                                const FlowConfig& cfg) {
  if (cfg.preconditioner == Preconditioner::None) return field;
  const DomainGrid& grid = phi.grid();
  const std::size_t d = phi.dim();
  Section dir(phi.node_count(), d);
  for (std::size_t j = 0; j < phi.node_count(); ++j)
    for (std::size_t k = 0; k < d; ++k) dir.values[j * d + k] = frame.vol[j] * field.values[j * d + k];
  double ell = grid.length(0);
  if (grid.dims() == 2) ell = std::min(ell, grid.length(1));
  ell /= 2.0 * std::numbers::pi;
  grid.sobolev_smooth(dir.values, d, order_of(cfg.kind), ell);
  if (phi.spec().model == Model::Hyperboloid)
    for (std::size_t j = 0; j < phi.node_count(); ++j) dir.values[j * d] = -dir.values[j * d];
  project_section(phi, dir);
  dir.scale = dir.max_abs();
  return dir;
}

struct StepResult {
  std::optional<MapField> phi;  // set when accepted
  bool accepted = false;
  double dt_next = 0.0;
  double energy_before = 0.0;
  double energy_after = 0.0;
};

/// Everything a backtracking loop needs from the current state.
struct StepPlan {
  Section field;
  Section direction;
  double energy = 0.0;
  double slope = 0.0;  // int <tau_k, d>
};

inline StepPlan plan_step(const PullbackCalculus& calc, const FlowConfig& cfg) {
  StepPlan plan;
  plan.field = descent_field(calc, cfg.kind);
  plan.direction = search_direction(calc.map(), calc.frame(), plan.field, cfg);
  plan.energy = energy_of_order(calc, order_of(cfg.kind));
  plan.slope = integrate(calc.frame(), pointwise_inner(calc.spec(), plan.field, plan.direction));
  return plan;
}

/// Largest pointwise displacement a single step may make: one curvature radius,
/// or the map's own extent on flat targets. Beyond it the sampled map is no
/// longer resolved and energies computed on it are meaningless.
inline double trust_radius(const MapField& phi) {
  const double c = phi.spec().c;
  if (c != 0.0) return 1.0 / std::sqrt(std::abs(c));
  return std::max(1.0, phi.max_abs());
}

inline StepResult try_step(const MapField& phi, const FrameField& frame, const FlowConfig& cfg,
                           const StepPlan& plan, double dt) {
  StepResult out;
  out.energy_before = plan.energy;
  if (!(plan.slope > 0.0)) {
    out.phi = phi;
    out.accepted = true;
    out.dt_next = dt;
    out.energy_after = plan.energy;
    return out;
  }
  out.dt_next = dt * cfg.shrink;
  if (dt * sup_norm(phi.spec(), plan.direction) > trust_radius(phi)) {
    out.energy_after = std::numeric_limits<double>::infinity();
    return out;
  }
  std::optional<MapField> candidate;
  try {
    candidate = vary(phi, plan.direction, dt);
    candidate->renormalize();
    out.energy_after = energy_of_order(*candidate, frame, order_of(cfg.kind));
  } catch (const Error&) {
    out.energy_after = std::numeric_limits<double>::infinity();
  }
  if (std::isfinite(out.energy_after) && out.energy_after <= plan.energy - cfg.armijo_c * dt * plan.slope) {
    out.accepted = true;
    out.phi = std::move(candidate);
    out.dt_next = dt * cfg.grow;
  }
  return out;
}

/// One Armijo trial: phi' = exp_phi(dt d), accepted iff
/// E_k(phi') <= E_k(phi) - armijo_c dt int <tau_k, d>.
inline StepResult flow_step(const MapField& phi, const FrameField& frame, const FlowConfig& cfg, double dt) {
  const PullbackCalculus calc(phi, frame);
  return try_step(phi, frame, cfg, plan_step(calc, cfg), dt);
}

struct FlowResult {
  MapField phi;
  FrameField frame;
  FlowTrace trace;
};

inline FlowRecord make_record(const PullbackCalculus& calc, const Section& field, long iter, double dt) {
  static const double p4[] = {4.0};
  const EnergyReport rep = energy_report(calc, p4, /*with_tritension=*/false);
  FlowRecord r;
  r.iter = iter;
  r.E = rep.E;
  r.E2 = rep.E2;
  r.E3 = rep.E3;
  r.Etilde4 = rep.Etilde4;
  r.L4_tension = rep.Lp_tension.at(4.0);
  r.sup_tau = rep.sup_tau;
  r.sup_descent = sup_norm(calc.spec(), field);
  r.dt = dt;
  return r;
}

/// Iterates flow_step until sup |tau_k| <= grad_tol or max_iters accepted steps.
inline FlowResult run_flow(const MapField& phi0, const FrameField& frame0, const FlowConfig& cfg) {
  cfg.validate();
  if (cfg.metric_policy == MetricPolicy::FixedPrescribed && frame0.mode() == MetricMode::Induced)
    throw Error(ErrorCode::MetricModeError, "FixedPrescribed flow needs a prescribed metric");
  FlowResult res{phi0, frame0, {}};
  if (cfg.metric_policy == MetricPolicy::ReInduceEachStep)
    res.frame = orthonormal_frame(phi0.grid_ptr(), induced_metric(phi0));
  double dt = initial_step(cfg, phi0.grid());
  long iter = 0;
  for (;;) {
    const PullbackCalculus calc(res.phi, res.frame);
    const StepPlan plan = plan_step(calc, cfg);
    const FlowRecord rec = make_record(calc, plan.field, iter, iter == 0 ? 0.0 : dt);
    res.trace.records.push_back(rec);
    if (rec.sup_descent <= cfg.grad_tol) {
      res.trace.status = FlowStatus::Converged;
      break;
    }
    if (iter >= cfg.max_iters) {
      res.trace.status = FlowStatus::MaxIterations;
      break;
    }
    bool accepted = false;
    double trial = iter == 0 ? dt : dt * cfg.grow;
    while (!accepted && trial >= 1e-14) {
      StepResult step = try_step(res.phi, res.frame, cfg, plan, trial);
      if (step.accepted) {
        res.phi = std::move(*step.phi);
        accepted = true;
        dt = trial;
      } else {
        ++res.trace.rejected_steps;
        trial = step.dt_next;
      }
    }
    if (!accepted) {
      res.trace.status = FlowStatus::Stalled;
      res.trace.message = std::string(to_string(ErrorCode::StepUnderflow)) + ": step size fell below 1e-14";
      break;
    }
    if (cfg.metric_policy == MetricPolicy::ReInduceEachStep)
      res.frame = orthonormal_frame(res.phi.grid_ptr(), induced_metric(res.phi));
    ++iter;
  }
  return res;
}

struct ProbeVerdict {
  double sup_tau3 = 0.0;
  double Etilde4 = 0.0;
  double L4_tension = 0.0;
  double sup_tau = 0.0;
  double tau_sq_variance = 0.0;       // node variance of |tau|^2
  double sup_nabla_lap_tau = 0.0;     // sup |nabla Delta tau|
  double sup_lap_tau = 0.0;
  double cmc_variation = 0.0;         // coefficient of variation of |tau|
  bool triharmonic = false;
  std::string verdict;
  std::vector<std::string> caveats;
};

/// Reads a terminal state: triharmonicity, hypothesis surrogates, conclusion measures.
inline ProbeVerdict theorem_probe(const MapField& phi, const FrameField& frame, const FlowTrace* trace = nullptr,
                                  double tau3_tol = 1e-6, double probe_tol = 1e-4) {
  const PullbackCalculus calc(phi, frame);
  const SpaceFormSpec& spec = phi.spec();
  ProbeVerdict v;
  static const double p4[] = {4.0};
  const EnergyReport rep = energy_report(calc, p4);
  v.sup_tau3 = rep.sup_tau3;
  v.Etilde4 = rep.Etilde4;
  v.L4_tension = rep.Lp_tension.at(4.0);
  v.sup_tau = rep.sup_tau;
  v.sup_lap_tau = sup_norm(spec, calc.laplacian_tension());

  const std::vector<double> tn = pointwise_norm(spec, calc.tension());
  const double nodes = static_cast<double>(tn.size());
  double m1 = 0.0;
  double m2 = 0.0;
  for (double x : tn) {
    m1 += x;
    m2 += x * x;
  }
  m1 /= nodes;
  m2 /= nodes;
  double var_sq = 0.0;
  double var_n = 0.0;
  for (double x : tn) {
    var_sq += (x * x - m2) * (x * x - m2);
    var_n += (x - m1) * (x - m1);
  }
  v.tau_sq_variance = var_sq / nodes;
  v.cmc_variation = m1 > 0.0 ? std::sqrt(var_n / nodes) / m1 : 0.0;

  std::vector<double> nl2(tn.size(), 0.0);
  for (const Section& s : calc.nabla_bar_all(calc.laplacian_tension())) {
    const auto n = pointwise_inner(spec, s, s);
    for (std::size_t j = 0; j < n.size(); ++j) nl2[j] += n[j];
  }
  for (double x : nl2) v.sup_nabla_lap_tau = std::max(v.sup_nabla_lap_tau, std::sqrt(x));

  v.triharmonic = v.sup_tau3 <= tau3_tol;
  v.caveats.push_back("compact periodic domain: energy finiteness is automatic, completeness and infinite-volume "
                      "hypotheses are outside numerical scope");
  if (frame.mode() == MetricMode::Prescribed && calc.isometry_deviation() > PullbackCalculus::kIsometryTolerance)
    v.caveats.push_back("metric is prescribed and the map is not an isometric immersion of it");
  if (trace != nullptr && trace->status != FlowStatus::Converged)
    v.caveats.push_back(std::string("flow ended with status ") + std::string(to_string(trace->status)));

  if (v.sup_tau <= probe_tol) {
    v.verdict = "minimal";
  } else if (!v.triharmonic) {
    v.verdict = "INCONCLUSIVE";
  } else if (spec.c == 0.0 && v.sup_lap_tau <= probe_tol) {
    v.verdict = "biharmonic non-minimal";
  } else {
    v.verdict = "triharmonic non-minimal";
  }
  return v;
}

}  // namespace polyflow
