#pragma once

// JSON-configured experiments: build a grid, target and initial map, run one
// action (Audit, Energies, Flow, VariationCheck) and write
// <prefix>_summary.json plus, for flows, <prefix>_trace.csv.
//
// Exit codes: 0 success, 1 audit failure, 2 configuration error.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "polyflow/builtin_maps.hpp"
#include "polyflow/energy.hpp"
#include "polyflow/error.hpp"
#include "polyflow/flow.hpp"
#include "polyflow/grid.hpp"
#include "polyflow/metric.hpp"
#include "polyflow/parallel.hpp"
#include "polyflow/pullback.hpp"
#include "polyflow/space_form.hpp"
#include "polyflow/verify.hpp"

namespace polyflow {

using nlohmann::json;

enum class Action { Audit, Energies, Flow, VariationCheck };

inline std::string_view to_string(Action a) {
  switch (a) {
    case Action::Audit: return "Audit";
    case Action::Energies: return "Energies";
    case Action::Flow: return "Flow";
    case Action::VariationCheck: return "VariationCheck";
  }
  return "?";
}

struct VariationSettings {
  double t = 1e-3;
  int samples = 5;
};

struct ExperimentConfig {
  double c = 0.0;
  int n = 2;
  GridSpec grid;
  std::string map_name;
  std::map<std::string, double> map_params;
  MetricMode metric_mode = MetricMode::Prescribed;
  std::vector<double> metric_matrix;  // empty = identity
  Action action = Action::Energies;
  FlowConfig flow;
  VariationSettings variation;
  std::vector<double> p_list{2.0, 4.0};
  std::string output_prefix = "polyflow";
  std::uint64_t seed = 1;
  json source;
};

namespace detail {

inline void config_fail(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

inline void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) config_fail(where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& item : obj.items())
    if (!allowed.contains(item.key())) config_fail("unknown key '" + item.key() + "' in " + where);
}

inline double number(const json& v, const std::string& where) {
  if (!v.is_number()) config_fail(where + " must be a number");
  return v.get<double>();
}

inline long integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) config_fail(where + " must be an integer");
  return v.get<long>();
}

inline std::string text(const json& v, const std::string& where) {
  if (!v.is_string()) config_fail(where + " must be a string");
  return v.get<std::string>();
}

template <typename Enum>
Enum pick(const json& v, const std::string& where, std::initializer_list<Enum> options) {
  const std::string s = text(v, where);
  for (Enum e : options)
    if (to_string(e) == s) return e;
  std::string list;
  for (Enum e : options) list += (list.empty() ? "" : ", ") + std::string(to_string(e));
  config_fail(where + " must be one of: " + list);
  return *options.begin();
}

inline std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) config_fail(where + " must be an array");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number(x, where + " entry"));
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  using namespace detail;
  ExperimentConfig cfg;
  cfg.source = j;
  allow_keys(j, "config",
             {"target", "grid", "initial_map", "metric", "action", "flow", "variation", "p_list", "output_prefix",
              "seed"});
  if (!j.contains("target")) config_fail("missing 'target'");
  if (!j.contains("initial_map")) config_fail("missing 'initial_map'");
  if (!j.contains("action")) config_fail("missing 'action'");

  const json& target = j.at("target");
  allow_keys(target, "target", {"c", "n"});
  if (!target.contains("c") || !target.contains("n")) config_fail("target needs 'c' and 'n'");
  cfg.c = number(target.at("c"), "target.c");
  cfg.n = static_cast<int>(integer(target.at("n"), "target.n"));

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    allow_keys(g, "grid", {"dims", "sizes", "lengths", "differentiation", "spectral_chop"});
    if (g.contains("dims")) cfg.grid.dims = static_cast<int>(integer(g.at("dims"), "grid.dims"));
    cfg.grid.sizes.assign(static_cast<std::size_t>(std::max(cfg.grid.dims, 1)), 256);
    cfg.grid.lengths.assign(static_cast<std::size_t>(std::max(cfg.grid.dims, 1)), 2.0 * std::numbers::pi);
    if (g.contains("sizes")) {
      cfg.grid.sizes.clear();
      for (double s : number_list(g.at("sizes"), "grid.sizes")) {
        if (s != std::floor(s)) config_fail("grid.sizes must be integers");
        cfg.grid.sizes.push_back(static_cast<int>(s));
      }
    }
    if (g.contains("lengths")) cfg.grid.lengths = number_list(g.at("lengths"), "grid.lengths");
    if (g.contains("differentiation"))
      cfg.grid.differentiation =
          pick(g.at("differentiation"), "grid.differentiation",
               {Differentiation::CentralFD2, Differentiation::CentralFD4, Differentiation::Spectral});
    if (g.contains("spectral_chop")) cfg.grid.spectral_chop = number(g.at("spectral_chop"), "grid.spectral_chop");
  }

  const json& im = j.at("initial_map");
  allow_keys(im, "initial_map", {"name", "params"});
  if (!im.contains("name")) config_fail("initial_map needs 'name'");
  cfg.map_name = text(im.at("name"), "initial_map.name");
  if (im.contains("params")) {
    if (!im.at("params").is_object()) config_fail("initial_map.params must be an object");
    for (const auto& item : im.at("params").items())
      cfg.map_params[item.key()] = number(item.value(), "initial_map.params." + item.key());
  }

  if (j.contains("metric")) {
    const json& m = j.at("metric");
    allow_keys(m, "metric", {"mode", "matrix"});
    if (m.contains("mode"))
      cfg.metric_mode = pick(m.at("mode"), "metric.mode", {MetricMode::Prescribed, MetricMode::Induced});
    if (m.contains("matrix")) {
      if (cfg.metric_mode == MetricMode::Induced) config_fail("metric.matrix applies to Prescribed mode only");
      cfg.metric_matrix = number_list(m.at("matrix"), "metric.matrix");
    }
  }

  cfg.action = pick(j.at("action"), "action", {Action::Audit, Action::Energies, Action::Flow, Action::VariationCheck});

  if (j.contains("flow")) {
    const json& f = j.at("flow");
    allow_keys(f, "flow",
               {"kind", "dt0", "max_iters", "grad_tol", "armijo_c", "shrink", "grow", "metric_policy",
                "preconditioner"});
    if (f.contains("kind"))
      cfg.flow.kind = pick(f.at("kind"), "flow.kind", {FlowKind::Harmonic, FlowKind::Biharmonic, FlowKind::Triharmonic});
    if (f.contains("dt0")) cfg.flow.dt0 = number(f.at("dt0"), "flow.dt0");
    if (f.contains("max_iters")) cfg.flow.max_iters = integer(f.at("max_iters"), "flow.max_iters");
    if (f.contains("grad_tol")) cfg.flow.grad_tol = number(f.at("grad_tol"), "flow.grad_tol");
    if (f.contains("armijo_c")) cfg.flow.armijo_c = number(f.at("armijo_c"), "flow.armijo_c");
    if (f.contains("shrink")) cfg.flow.shrink = number(f.at("shrink"), "flow.shrink");
    if (f.contains("grow")) cfg.flow.grow = number(f.at("grow"), "flow.grow");
    if (f.contains("metric_policy"))
      cfg.flow.metric_policy = pick(f.at("metric_policy"), "flow.metric_policy",
                                    {MetricPolicy::FixedPrescribed, MetricPolicy::ReInduceEachStep});
    if (f.contains("preconditioner"))
      cfg.flow.preconditioner =
          pick(f.at("preconditioner"), "flow.preconditioner", {Preconditioner::None, Preconditioner::Sobolev});
    cfg.flow.validate();
  } else if (cfg.action == Action::Flow) {
    config_fail("action Flow needs a 'flow' block");
  }

  if (j.contains("variation")) {
    const json& v = j.at("variation");
    allow_keys(v, "variation", {"t", "samples"});
    if (v.contains("t")) cfg.variation.t = number(v.at("t"), "variation.t");
    if (v.contains("samples")) cfg.variation.samples = static_cast<int>(integer(v.at("samples"), "variation.samples"));
    if (!(cfg.variation.t > 0.0) || cfg.variation.samples < 0) config_fail("variation needs t > 0 and samples >= 0");
  }

  if (j.contains("p_list")) {
    cfg.p_list = number_list(j.at("p_list"), "p_list");
    for (double p : cfg.p_list)
      if (!(p >= 1.0)) config_fail("p_list entries must be >= 1");
  }
  if (j.contains("output_prefix")) cfg.output_prefix = text(j.at("output_prefix"), "output_prefix");
  if (j.contains("seed")) {
    const long s = integer(j.at("seed"), "seed");
    if (s < 0) config_fail("seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

/// Grid, target, map and frame described by a config.
struct Fixture {
  std::shared_ptr<const DomainGrid> grid;
  SpaceFormSpec spec;
  MapField phi;
  FrameField frame;
};

inline Fixture build_fixture(const ExperimentConfig& cfg) {
  auto grid = build_grid(cfg.grid);
  const SpaceFormSpec spec = SpaceFormSpec::make(cfg.c, cfg.n);
  MapField phi = builtin_map(cfg.map_name, cfg.map_params, grid, spec);
  MetricField g = cfg.metric_mode == MetricMode::Induced ? induced_metric(phi)
                  : cfg.metric_matrix.empty()           ? identity_metric(*grid)
                                                        : constant_metric(*grid, cfg.metric_matrix);
  FrameField frame = orthonormal_frame(grid, g);
  return Fixture{grid, spec, std::move(phi), std::move(frame)};
}

namespace detail {

inline std::string p_key(double p) {
  std::ostringstream os;
  os << p;
  return os.str();
}

inline json to_json(const EnergyReport& r) {
  json j;
  j["E"] = r.E;
  j["E2"] = r.E2;
  j["E3"] = r.E3;
  j["Etilde4"] = r.Etilde4;
  j["Etilde4_note"] = "lower bound of E4; the d d tau term is not computed";
  json lp = json::object();
  for (const auto& [p, v] : r.Lp_tension) lp[p_key(p)] = v;
  j["Lp_tension"] = lp;
  json ll = json::object();
  for (const auto& [p, v] : r.Lp_laplacian_tension) ll[p_key(p)] = v;
  j["Lp_laplacian_tension"] = ll;
  j["sup_tau"] = r.sup_tau;
  j["sup_tau3"] = r.sup_tau3;
  j["mean_curvature_sup"] = r.mean_curvature_sup;
  j["volume"] = r.volume;
  return j;
}

inline json to_json(const AuditCheck& c) {
  return json{{"max_residual", c.max_residual},
              {"nodes_failed", c.nodes_failed},
              {"tolerance", c.tolerance},
              {"pass", c.pass},
              {"applicable", c.applicable}};
}

inline json to_json(const AuditReport& r) {
  json checks = json::object();
  for (const auto& [name, c] : r.checks) checks[name] = to_json(c);
  json diag = json::object();
  for (const auto& [name, v] : r.diagnostics) diag[name] = std::isfinite(v) ? json(v) : json(nullptr);
  return json{{"checks", checks}, {"diagnostics", diag}, {"pass", r.all_pass()}};
}

inline json to_json(const ProbeVerdict& v) {
  return json{{"sup_tau3", v.sup_tau3},
              {"Etilde4", v.Etilde4},
              {"L4_tension", v.L4_tension},
              {"sup_tau", v.sup_tau},
              {"tau_sq_variance", v.tau_sq_variance},
              {"sup_nabla_laplacian_tau", v.sup_nabla_lap_tau},
              {"sup_laplacian_tau", v.sup_lap_tau},
              {"cmc_coefficient_of_variation", v.cmc_variation},
              {"triharmonic", v.triharmonic},
              {"verdict", v.verdict},
              {"caveats", v.caveats}};
}

inline void write_trace_csv(const std::filesystem::path& path, const FlowTrace& trace) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
  out << "iter,E,E2,E3,Etilde4,L4_tension,sup_tau,sup_descent,dt\n";
  out << std::setprecision(17);
  for (const FlowRecord& r : trace.records)
    out << r.iter << ',' << r.E << ',' << r.E2 << ',' << r.E3 << ',' << r.Etilde4 << ',' << r.L4_tension << ','
        << r.sup_tau << ',' << r.sup_descent << ',' << r.dt << '\n';
}

/// Extra audit rows that need more than pointwise data.
inline void extend_audit(const Fixture& fx, AuditReport& report) {
  const PullbackCalculus calc(fx.phi, fx.frame);
  const SpaceFormSpec& spec = fx.spec;
  const double tol = scheme_tolerance(*fx.grid);

  // Harmonic chain on geodesic-like data.
  const double st = sup_norm(spec, calc.tension());
  if (st <= 1e-9) {
    const double worst = std::max({st, sup_norm(spec, calc.bitension()), sup_norm(spec, calc.tritension_general())});
    report.checks["harmonic_chain"] = detail::make_check(worst, worst <= 1e-9 ? 0 : 1, 1e-9);
  }

  // Tangency of every produced section.
  {
    double worst = 0.0;
    auto note = [&](const Section& s) { worst = std::max(worst, max_tangency_residual(fx.phi, s)); };
    for (const Section& s : calc.differential()) note(s);
    note(calc.tension());
    note(calc.laplacian_tension());
    note(calc.bitension());
    const Section t3 = calc.tritension_general();
    note(t3);
    report.checks["tangency"] = detail::make_check(worst, worst <= 1e-8 ? 0 : 1, 1e-8);

    // General and space-form tritension agree on isometric immersions.
    if (calc.isometry_deviation() <= PullbackCalculus::kIsometryTolerance) {
      const double agree_tol = fx.grid->differentiation() == Differentiation::Spectral ? 1e-7 : tol;
      const double diff = sup_norm(spec, t3 - calc.tritension_space_form()) / (1.0 + sup_norm(spec, t3));
      report.checks["tritension_agreement"] = detail::make_check(diff, diff <= agree_tol ? 0 : 1, agree_tol);
    }
  }

  // Hoelder: E2 <= 1/2 vol^(1/2) (int |tau|^4)^(1/2).
  {
    static const double p4[] = {4.0};
    const EnergyReport rep = energy_report(calc, p4, false);
    const double bound = 0.5 * std::sqrt(rep.volume) * std::sqrt(rep.Lp_tension.at(4.0));
    const double excess = std::max(0.0, rep.E2 - bound);
    report.checks["holder"] = detail::make_check(excess, excess <= 1e-12 ? 0 : 1, 1e-12);
  }

  // Cut-off and Caccioppoli margin on (near-)triharmonic states with c <= 0.
  double shortest = fx.grid->length(0);
  if (fx.grid->dims() == 2) shortest = std::min(shortest, fx.grid->length(1));
  const CutoffField eta = cutoff(fx.frame, 0, shortest / 8.0);
  {
    double worst = 0.0;
    long failed = 0;
    const double limit = 2.0 / eta.r;
    for (double gval : eta.grad_norm) {
      worst = std::max(worst, gval);
      if (gval > limit) ++failed;
    }
    report.checks["cutoff_gradient"] = detail::make_check(worst, failed, limit);
  }
  if (spec.c <= 0.0 && sup_norm(spec, calc.tritension_general()) <= 1e-5) {
    const CaccioppoliResult cr = caccioppoli_audit(fx.phi, fx.frame, eta, 0.5);
    const double floor = -1e-8 * (1.0 + std::abs(cr.lhs));
    report.checks["caccioppoli"] = detail::make_check(std::max(0.0, -cr.margin), cr.margin >= floor ? 0 : 1,
                                                      1e-8 * (1.0 + std::abs(cr.lhs)));
    report.diagnostics["caccioppoli_margin"] = cr.margin;
  }
}

}  // namespace detail

struct RunOutcome {
  int exit_code = 0;
  json summary;
};

/// Runs the configured action and returns the summary without touching disk.
inline RunOutcome execute(const ExperimentConfig& cfg, std::ostream& err, FlowTrace* trace_out = nullptr) {
  RunOutcome out;
  json& s = out.summary;
  s["action"] = std::string(to_string(cfg.action));
  s["config"] = cfg.source;
  Fixture fx = build_fixture(cfg);
  s["target"] = json{{"c", fx.spec.c}, {"n", fx.spec.n}, {"model", std::string(to_string(fx.spec.model))}};
  s["metric_mode"] = std::string(to_string(fx.frame.mode()));

  auto fail_checks = [&](const AuditReport& rep) {
    for (const auto& [name, c] : rep.checks)
      if (!c.pass)
        err << "audit check failed: " << name << " (max_residual " << c.max_residual << ", tolerance " << c.tolerance
            << ", nodes_failed " << c.nodes_failed << ")\n";
  };

  switch (cfg.action) {
    case Action::Energies: {
      s["energies"] = detail::to_json(energy_report(fx.phi, fx.frame, cfg.p_list));
      break;
    }
    case Action::Audit: {
      s["energies"] = detail::to_json(energy_report(fx.phi, fx.frame, cfg.p_list));
      AuditReport rep = pointwise_identity_audit(fx.phi, fx.frame, cfg.seed);
      detail::extend_audit(fx, rep);
      s["audit"] = detail::to_json(rep);
      if (!rep.all_pass()) {
        fail_checks(rep);
        out.exit_code = 1;
      }
      break;
    }
    case Action::VariationCheck: {
      json rows = json::array();
      bool ok = true;
      const PullbackCalculus calc(fx.phi, fx.frame);
      std::vector<std::pair<std::string, Section>> fields;
      fields.emplace_back("tau", calc.tension());
      for (int i = 0; i < cfg.variation.samples; ++i)
        fields.emplace_back("random_" + std::to_string(i), random_smooth_section(fx.phi, cfg.seed + static_cast<std::uint64_t>(i)));
      for (const auto& [label, v] : fields) {
        for (int k = 1; k <= 3; ++k) {
          const FirstVariation fv = first_variation(fx.phi, v, fx.frame, k, cfg.variation.t);
          const RichardsonResult rr = richardson_ratio(
              [&](double t) { return first_variation_residual(fx.phi, v, fx.frame, k, t); }, cfg.variation.t);
          const bool pass = fv.residual <= 1e-4 && rr.pass;
          ok = ok && pass;
          if (!pass) err << "variation check failed: first_variation k=" << k << " field=" << label << '\n';
          rows.push_back(json{{"check", "first_variation"},
                              {"k", k},
                              {"field", label},
                              {"finite_difference", fv.finite_difference},
                              {"analytic", fv.analytic},
                              {"residual", fv.residual},
                              {"richardson_ratio", rr.ratio},
                              {"fd_exact", rr.exact},
                              {"pass", pass}});
        }
        const RichardsonResult tr = richardson_ratio(
            [&](double t) { return tension_variation_residual(fx.phi, v, fx.frame, t); }, cfg.variation.t);
        const bool pass = tr.residual_t <= 1e-3 && tr.pass;
        ok = ok && pass;
        if (!pass) err << "variation check failed: tension_variation field=" << label << '\n';
        rows.push_back(json{{"check", "tension_variation"},
                            {"field", label},
                            {"residual", tr.residual_t},
                            {"richardson_ratio", tr.ratio},
                            {"fd_exact", tr.exact},
                            {"pass", pass}});
      }
      s["variation"] = rows;
      s["variation_pass"] = ok;
      if (!ok) out.exit_code = 1;
      break;
    }
    case Action::Flow: {
      FlowResult fr = run_flow(fx.phi, fx.frame, cfg.flow);
      const FlowTrace& tr = fr.trace;
      bool monotone = true;
      for (std::size_t i = 1; i < tr.records.size(); ++i) {
        const double prev = tr.records[i - 1].E3;
        if (cfg.flow.kind == FlowKind::Triharmonic && tr.records[i].E3 > prev + 1e-12 * std::abs(prev)) monotone = false;
      }
      const bool asserted = cfg.flow.kind == FlowKind::Triharmonic && cfg.flow.metric_policy == MetricPolicy::FixedPrescribed;
      s["flow"] = json{{"kind", std::string(to_string(cfg.flow.kind))},
                       {"metric_policy", std::string(to_string(cfg.flow.metric_policy))},
                       {"preconditioner", std::string(to_string(cfg.flow.preconditioner))},
                       {"status", std::string(to_string(tr.status))},
                       {"message", tr.message},
                       {"iterations", tr.records.empty() ? 0 : tr.records.back().iter},
                       {"rejected_steps", tr.rejected_steps},
                       {"E3_monotone", monotone},
                       {"E3_monotonicity_asserted", asserted}};
      s["energies"] = detail::to_json(energy_report(fr.phi, fr.frame, cfg.p_list));
      s["probe"] = detail::to_json(theorem_probe(fr.phi, fr.frame, &tr));
      if (asserted && !monotone) {
        err << "audit check failed: E3 monotonicity along the flow\n";
        out.exit_code = 1;
      }
      if (trace_out != nullptr) *trace_out = tr;
      break;
    }
  }
  s["exit_code"] = out.exit_code;
  return out;
}

/// Full run: executes, writes files, maps errors to exit codes.
inline int run(const ExperimentConfig& cfg, std::ostream& err) {
  try {
    FlowTrace trace;
    RunOutcome outcome = execute(cfg, err, &trace);
    const std::filesystem::path prefix(cfg.output_prefix);
    if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
    const std::filesystem::path summary_path = cfg.output_prefix + "_summary.json";
    std::ofstream out(summary_path);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + summary_path.string());
    out << outcome.summary.dump(2) << '\n';
    if (cfg.action == Action::Flow) detail::write_trace_csv(cfg.output_prefix + "_trace.csv", trace);
    return outcome.exit_code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: ConfigError: " << e.what() << '\n';
    return 2;
  }
}

inline int run_file(const std::filesystem::path& path, std::ostream& err, std::optional<Action> force = {}) {
  try {
    ExperimentConfig cfg = load_config(path);
    if (force) cfg.action = *force;
    return run(cfg, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace polyflow
