#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace polyflow;
using fixtures::kPi;

namespace {

struct Case {
  std::string label;
  MapField phi;
  FrameField frame;
};

/// Isometric prescribed fixtures, one per model.
std::vector<Case> model_fixtures() {
  std::vector<Case> out;
  auto add = [&](std::string label, MapField phi) {
    FrameField f = fixtures::flat_frame(phi.grid_ptr());
    out.push_back({std::move(label), std::move(phi), std::move(f)});
  };
  add("flat", fixtures::planar_circle(1.0));
  add("sphere", builtin_map("Circle", {{"r", 0.8}}, fixtures::line(256, 2.0 * kPi * std::sin(0.8)),
                            SpaceFormSpec::make(1.0, 2)));
  add("hyperboloid", builtin_map("PerturbedGeodesicH2", {}, fixtures::line(256), SpaceFormSpec::make(-1.0, 2)));
  return out;
}

/// Every built-in example with a metric that makes sense for it.
std::vector<Case> builtin_fixtures() {
  std::vector<Case> out;
  auto g1 = fixtures::line(256);
  auto g2 = fixtures::torus(48);
  auto induced = [&](std::string label, MapField phi) {
    FrameField f = fixtures::induced_frame(phi);
    out.push_back({std::move(label), std::move(phi), std::move(f)});
  };
  auto prescribed = [&](std::string label, MapField phi) {
    FrameField f = fixtures::flat_frame(phi.grid_ptr());
    out.push_back({std::move(label), std::move(phi), std::move(f)});
  };
  prescribed("circle", fixtures::planar_circle(1.0));
  induced("circle_h2", builtin_map("Circle", {{"r", 1.2}}, g1, SpaceFormSpec::make(-1.0, 2)));
  prescribed("perturbed_geodesic_h2", builtin_map("PerturbedGeodesicH2", {}, g1, SpaceFormSpec::make(-1.0, 2)));
  induced("perturbed_geodesic_h2_induced", builtin_map("PerturbedGeodesicH2", {}, g1, SpaceFormSpec::make(-1.0, 2)));
  induced("geodesic_h2", builtin_map("PerturbedGeodesicH2", {{"amplitude", 0.0}}, g1, SpaceFormSpec::make(-1.0, 2)));
  induced("great_circle", builtin_map("GreatCircleS2", {}, g1, SpaceFormSpec::make(1.0, 2)));
  induced("great_circle_perturbed", builtin_map("GreatCircleS2", {{"amplitude", 0.1}}, g1, SpaceFormSpec::make(1.0, 2)));
  induced("torus_flat", builtin_map("TorusCliffordLike", {}, g2, SpaceFormSpec::make(0.0, 4)));
  induced("torus_sphere", builtin_map("TorusCliffordLike", {{"b", 0.6}}, g2, SpaceFormSpec::make(1.0, 3)));
  induced("torus_hyperboloid", builtin_map("TorusCliffordLike", {}, g2, SpaceFormSpec::make(-1.0, 4)));
  induced("graph_surface", builtin_map("GraphSurface", {}, g2, SpaceFormSpec::make(0.0, 3)));
  prescribed("graph_curve", builtin_map("GraphSurface", {{"amplitude", 0.3}}, g1, SpaceFormSpec::make(0.0, 2)));
  return out;
}

}  // namespace

TEST(Vary, ZeroStepAndStaysOnModel) {
  for (const Case& c : model_fixtures()) {
    const Section v = random_smooth_section(c.phi, 4);
    EXPECT_EQ(vary(c.phi, v, 0.0).values(), c.phi.values());
    const MapField moved = vary(c.phi, v, 0.3);
    EXPECT_LE(moved.max_constraint_residual(), 1e-10) << c.label;
  }
}

TEST(RandomSection, TangentUnitAndSeeded) {
  for (const Case& c : model_fixtures()) {
    const Section a = random_smooth_section(c.phi, 11);
    const Section b = random_smooth_section(c.phi, 11);
    const Section other = random_smooth_section(c.phi, 12);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, other.values);
    EXPECT_NEAR(sup_norm(c.phi.spec(), a), 1.0, 1e-12);
    EXPECT_LE(max_tangency_residual(c.phi, a), 1e-12);
  }
}

TEST(Richardson, RatioOfQuadraticResidual) {
  const auto r = richardson_ratio([](double t) { return 3.0 * t * t + t * t * t * t; }, 1e-2);
  EXPECT_NEAR(r.ratio, 4.0, 1e-3);
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(r.exact);
  const auto lin = richardson_ratio([](double t) { return t; }, 1e-2);
  EXPECT_FALSE(lin.pass);
  const auto exact = richardson_ratio([](double) { return 1e-14; }, 1e-2);
  EXPECT_TRUE(exact.exact);
  EXPECT_TRUE(exact.pass);
}

TEST(FirstVariation, UnitCircleAlongTension) {
  const MapField phi = fixtures::planar_circle(1.0);
  const FrameField frame = fixtures::flat_frame(phi.grid_ptr());
  const Section tau = tension(phi, frame);
  for (int k = 1; k <= 3; ++k) {
    const FirstVariation fv = first_variation(phi, tau, frame, k, 1e-3);
    EXPECT_NEAR(fv.analytic, -2.0 * kPi, 1e-4 * 2.0 * kPi) << "k=" << k;
    EXPECT_NEAR(fv.finite_difference, -2.0 * kPi, 1e-4 * 2.0 * kPi) << "k=" << k;
    const auto rr = richardson_ratio([&](double t) { return first_variation_residual(phi, tau, frame, k, t); }, 1e-3);
    EXPECT_TRUE(rr.pass) << "k=" << k << " ratio " << rr.ratio;
  }
}

TEST(FirstVariation, RandomSectionsOnEveryModel) {
  for (const Case& c : model_fixtures()) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Section v = random_smooth_section(c.phi, seed);
      for (int k = 1; k <= 3; ++k) {
        const auto rr =
            richardson_ratio([&](double t) { return first_variation_residual(c.phi, v, c.frame, k, t); }, 1e-3);
        EXPECT_LE(rr.residual_t, 1e-4) << c.label << " seed " << seed << " k " << k;
        EXPECT_TRUE(rr.pass) << c.label << " seed " << seed << " k " << k << " ratio " << rr.ratio;
      }
    }
  }
}

TEST(FirstVariation, InducedMetricIsRejected) {
  const MapField phi = fixtures::planar_circle(1.0, 64);
  const FrameField frame = fixtures::induced_frame(phi);
  const Section v = random_smooth_section(phi, 1);
  try {
    first_variation(phi, v, frame, 2, 1e-3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MetricModeError);
  }
  EXPECT_THROW(tension_variation_residual(phi, v, frame, 1e-3), Error);
}

TEST(TensionVariation, MatchesJacobiOperator) {
  for (const Case& c : model_fixtures()) {
    std::vector<Section> vs{tension(c.phi, c.frame), random_smooth_section(c.phi, 21)};
    for (const Section& v : vs) {
      if (sup_norm(c.phi.spec(), v) == 0.0) continue;
      const auto rr = richardson_ratio([&](double t) { return tension_variation_residual(c.phi, v, c.frame, t); }, 1e-3);
      EXPECT_LE(rr.residual_t, 1e-3) << c.label;
      EXPECT_TRUE(rr.pass) << c.label << " ratio " << rr.ratio;
    }
  }
}

TEST(IdentityAudit, PassesOnEveryBuiltinExample) {
  for (const Case& c : builtin_fixtures()) {
    const AuditReport r = pointwise_identity_audit(c.phi, c.frame);
    for (const auto& [name, check] : r.checks) {
      EXPECT_TRUE(check.pass) << c.label << ": " << name << " residual " << check.max_residual;
    }
    EXPECT_EQ(r.checks.at("kato_tau").nodes_failed, 0) << c.label;
    EXPECT_EQ(r.checks.at("kato_laplacian_tau").nodes_failed, 0) << c.label;
    if (c.phi.spec().c <= 0.0) {
      EXPECT_TRUE(r.checks.at("curvature_sign").applicable);
      EXPECT_GE(r.diagnostics.at("curvature_sign_min"), -1e-10) << c.label;
    } else {
      EXPECT_FALSE(r.checks.at("curvature_sign").applicable);
    }
  }
}

TEST(IdentityAudit, OrthogonalityNeedsIsometry) {
  auto g = fixtures::line(128, 4.0 * kPi);
  const MapField phi = builtin_map("Circle", {}, g, SpaceFormSpec::make(0.0, 2));
  const AuditReport r = pointwise_identity_audit(phi, fixtures::flat_frame(g));
  EXPECT_FALSE(r.checks.at("orthogonality").applicable);
  EXPECT_TRUE(r.checks.at("orthogonality").pass);
}

TEST(IdentityAudit, KatoSeesConstantNormAsSharp) {
  // |tau| is constant on a circle, so |grad|tau|| = 0 <= |nabla tau| trivially.
  const MapField phi = fixtures::planar_circle(1.0);
  const AuditReport r = pointwise_identity_audit(phi, fixtures::flat_frame(phi.grid_ptr()));
  EXPECT_LE(r.diagnostics.at("tau_norm_variance"), 1e-20);
}

TEST(Cutoff, GradientBoundOnOneAndTwoDimensionalGrids) {
  for (auto g : {fixtures::line(256, 5.0), fixtures::torus(64, 5.0)}) {
    const FrameField frame = fixtures::flat_frame(g);
    const double r = 5.0 / 8.0;
    const CutoffField eta = cutoff(frame, g->node_at(10, 20), r);
    double worst = 0.0;
    for (double gn : eta.grad_norm) worst = std::max(worst, gn);
    EXPECT_LE(worst, 2.0 / r);
    EXPECT_GT(worst, 1.0 / r);
    for (std::size_t j = 0; j < g->node_count(); ++j) {
      EXPECT_GE(eta.eta[j], 0.0);
      EXPECT_LE(eta.eta[j], 1.0);
      if (eta.in_inner_ball(j)) {
        EXPECT_EQ(eta.eta[j], 1.0);
      }
    }
    EXPECT_EQ(eta.eta[eta.center], 1.0);
    EXPECT_EQ(eta.eta[g->node_at(10 + g->size(0) / 2, 20)], 0.0);
  }
}

TEST(Cutoff, RejectsOversizedRadius) {
  auto g = fixtures::line(64, 4.0);
  const FrameField frame = fixtures::flat_frame(g);
  try {
    cutoff(frame, 0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RadiusTooLarge);
  }
  EXPECT_NO_THROW(cutoff(frame, 0, 0.99));
}

TEST(Caccioppoli, HoldsOnGeodesics) {
  auto g = fixtures::line(256);
  const MapField phi = builtin_map("PerturbedGeodesicH2", {{"amplitude", 0.0}}, g, SpaceFormSpec::make(-1.0, 2));
  const FrameField frame = fixtures::induced_frame(phi);
  const CutoffField eta = cutoff(frame, 0, g->length(0) / 8.0);
  for (double eps : {0.1, 0.5, 0.9}) EXPECT_GE(caccioppoli_audit(phi, frame, eta, eps).margin, -1e-8);
}

TEST(Caccioppoli, RejectsPositiveCurvatureAndNonTriharmonicMaps) {
  auto g = fixtures::line(256);
  const MapField sphere = builtin_map("GreatCircleS2", {}, g, SpaceFormSpec::make(1.0, 2));
  const FrameField fs = fixtures::induced_frame(sphere);
  try {
    caccioppoli_audit(sphere, fs, cutoff(fs, 0, 0.5), 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotTriharmonic);
  }
  const MapField bumpy = builtin_map("PerturbedGeodesicH2", {}, g, SpaceFormSpec::make(-1.0, 2));
  const FrameField fb = fixtures::flat_frame(g);
  EXPECT_THROW(caccioppoli_audit(bumpy, fb, cutoff(fb, 0, 0.5), 0.5), Error);
  const MapField geo = builtin_map("PerturbedGeodesicH2", {{"amplitude", 0.0}}, g, SpaceFormSpec::make(-1.0, 2));
  EXPECT_THROW(caccioppoli_audit(geo, fb, cutoff(fb, 0, 0.5), 1.5), Error);
}
