#pragma once

// The k-energy ladder: E, E_2, E_3 and the extended 4-energy, plus the L^p
// tension norms and sup-norms that appear as hypotheses of the vanishing
// theorems.
//
// Factor convention: Etilde4 = 1/2 int |Delta tau|^2 (with the 1/2). It is a
// lower bound for E_4, whose d d tau part is not computed.

#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "polyflow/fields.hpp"
#include "polyflow/metric.hpp"
#include "polyflow/pullback.hpp"

namespace polyflow {

struct EnergyReport {
  double E = 0.0;
  double E2 = 0.0;
  double E3 = 0.0;
  double Etilde4 = 0.0;
  std::map<double, double> Lp_tension;            // p -> int |tau|^p
  std::map<double, double> Lp_laplacian_tension;  // p -> int |Delta tau|^p
  double sup_tau = 0.0;
  double sup_tau3 = 0.0;
  double mean_curvature_sup = 0.0;  // sup |tau| / m
  double volume = 0.0;
};

namespace detail {

inline std::vector<double> section_norm_sq(const SpaceFormSpec& spec, const Section& v) {
  std::vector<double> out(v.node_count());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::max(0.0, model_form(spec, v.at(j), v.at(j)));
  return out;
}

inline std::vector<double> frame_norm_sq(const SpaceFormSpec& spec, const std::vector<Section>& vs) {
  std::vector<double> out(vs.front().node_count(), 0.0);
  for (const Section& v : vs) {
    const auto n2 = section_norm_sq(spec, v);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += n2[j];
  }
  return out;
}

inline double half_integral(const FrameField& frame, const std::vector<double>& f) {
  return 0.5 * integrate(frame, f);
}

}  // namespace detail

/// E_k for k = 1 (energy), 2 (bienergy), 3 (trienergy).
inline double energy_of_order(const PullbackCalculus& calc, int k) {
  const SpaceFormSpec& spec = calc.spec();
  switch (k) {
    case 1: return detail::half_integral(calc.frame(), detail::frame_norm_sq(spec, calc.differential()));
    case 2: return detail::half_integral(calc.frame(), detail::section_norm_sq(spec, calc.tension()));
    case 3: return detail::half_integral(calc.frame(), detail::frame_norm_sq(spec, calc.nabla_tension()));
    default: throw Error(ErrorCode::BadParams, "energy order must be 1, 2 or 3");
  }
}

inline double energy_of_order(const MapField& phi, const FrameField& frame, int k) {
  return energy_of_order(PullbackCalculus(phi, frame), k);
}

/// Etilde4 = 1/2 int |Delta tau|^2, the implemented lower bound of E_4.
inline double extended_energy4(const PullbackCalculus& calc) {
  return detail::half_integral(calc.frame(), detail::section_norm_sq(calc.spec(), calc.laplacian_tension()));
}

inline EnergyReport energy_report(const PullbackCalculus& calc, std::span<const double> p_list,
                                  bool with_tritension = true) {
  const SpaceFormSpec& spec = calc.spec();
  const FrameField& frame = calc.frame();
  EnergyReport r;
  r.E = energy_of_order(calc, 1);
  r.E2 = energy_of_order(calc, 2);
  r.E3 = energy_of_order(calc, 3);
  r.Etilde4 = extended_energy4(calc);

  const auto tau2 = detail::section_norm_sq(spec, calc.tension());
  const auto lap2 = detail::section_norm_sq(spec, calc.laplacian_tension());
  for (double p : p_list) {
    if (!(p >= 1.0)) throw Error(ErrorCode::BadParams, "L^p exponents must be >= 1");
    std::vector<double> ft(tau2.size());
    std::vector<double> fl(lap2.size());
    for (std::size_t j = 0; j < ft.size(); ++j) {
      ft[j] = std::pow(tau2[j], 0.5 * p);
      fl[j] = std::pow(lap2[j], 0.5 * p);
    }
    r.Lp_tension[p] = integrate(frame, ft);
    r.Lp_laplacian_tension[p] = integrate(frame, fl);
  }
  for (double t : tau2) r.sup_tau = std::max(r.sup_tau, std::sqrt(t));
  r.mean_curvature_sup = r.sup_tau / frame.dims;
  if (with_tritension) r.sup_tau3 = sup_norm(spec, calc.tritension_general());
  const std::vector<double> ones(frame.node_count(), 1.0);
  r.volume = integrate(frame, ones);
  return r;
}

inline EnergyReport energy_report(const MapField& phi, const FrameField& frame, std::span<const double> p_list) {
  return energy_report(PullbackCalculus(phi, frame), p_list);
}

/// Returns Etilde4; E_4 itself (which adds 1/2 int |d d tau|^2 >= 0) is not computed.
inline double e4_lower_bound_check(const MapField& phi, const FrameField& frame) {
  return extended_energy4(PullbackCalculus(phi, frame));
}

}  // namespace polyflow
