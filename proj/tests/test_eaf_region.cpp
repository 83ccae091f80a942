#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "steelflex/eaf_region.hpp"
#include "support.hpp"

namespace steelflex {
namespace {

using testing::Rng;

EafPolytope with_box(const EafPolytope& base, EafPolytope::Row lo, EafPolytope::Row hi) {
  return EafPolytope(base.a_eq(), base.b_eq(), lo, hi);
}

TEST(EafRegion, CdriIntensityReproducesValidationPoint) {
  const EafState s = EafPolytope::calibrated().solve_single_material(Material::cdri, 1.0);
  const double kwh = s.p_eaf * 1000.0;
  EXPECT_NEAR(kwh, 565.45, 0.01);
  EXPECT_LE(std::abs(kwh - 566.0), 1.0);
  const double rel_pct = (590.0 - kwh) / 590.0 * 100.0;
  EXPECT_NEAR(rel_pct, 4.07, 0.1);
  EXPECT_NEAR(rel_pct, 4.1, 0.1);
}

TEST(EafRegion, ScrapOnlyMatchesHandSolvedSystem) {
  // Cramer's rule on the two equality rows with x_H = x_C = 0 gives
  // x_S = 1 / a21 and P = a11 x_S, evaluated here as 2.35e-3 / 5.26e-3.
  const EafState s = EafPolytope::calibrated().solve_single_material(Material::scrap, 1.0);
  EXPECT_NEAR(s.p_eaf, 0.44676806083650190, 1e-12);
  EXPECT_NEAR(s.x[2], 190.11406844106464, 1e-9);
  EXPECT_EQ(s.x[0], 0.0);
  EXPECT_EQ(s.x[1], 0.0);
}

TEST(EafRegion, BoundaryPointIsAccepted) {
  const EafPolytope base = EafPolytope::calibrated();
  const EafState s = base.solve_single_material(Material::cdri, 1.0);
  const EafPolytope tight = with_box(base, {0, 0, 0, 0}, {0, s.x[1], 0, s.p_eaf});
  const MembershipResult m = tight.membership(tight.solve_single_material(Material::cdri, 1.0));
  EXPECT_TRUE(m.member);
  EXPECT_GE(m.min_bound_slack, -EafPolytope::kBoundTolerance);
  EXPECT_LE(m.min_bound_slack, 1e-12);
}

TEST(EafRegion, InfeasibleBoundsAreReported) {
  const EafPolytope base = EafPolytope::calibrated();
  const EafPolytope narrow = with_box(base, {0, 0, 0, 0}, {1100, 100, 200, 1});
  try {
    narrow.solve_single_material(Material::cdri, 1.0);
    FAIL() << "expected infeasible_bounds";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::infeasible_bounds);
  }
  EXPECT_THROW(base.solve_single_material(Material::cdri, 0.0), Error);
}

TEST(EafRegion, MembershipOfSolvedAndPerturbedPoints) {
  const EafPolytope p = EafPolytope::calibrated();
  for (Material m : {Material::hdri, Material::cdri, Material::scrap}) {
    EafState s = p.solve_single_material(m, 1.0);
    EXPECT_TRUE(p.membership(s).member) << to_string(m);
    s.p_eaf += 0.01;
    const MembershipResult r = p.membership(s);
    EXPECT_FALSE(r.member);
    EXPECT_NEAR(r.residual[0], 0.01, 1e-12);
  }
}

// Samples a member by drawing two charges and solving for the third.
bool sample_member(const EafPolytope& p, Rng& rng, EafState& out) {
  const auto& a = p.a_eq();
  const auto& hi = p.z_max();
  const double xh = rng.uniform(0.0, hi[0]);
  const double xs = rng.uniform(0.0, hi[2]);
  const double xc = (p.b_eq()[1] - a[1][0] * xh - a[1][2] * xs) / a[1][1];
  out.x = {xh, xc, xs};
  out.p_eaf = a[0][0] * xh + a[0][1] * xc + a[0][2] * xs;
  return p.membership(out).member;
}

TEST(EafRegion, ConvexCombinationsOfMembersAreMembers) {
  const EafPolytope p = EafPolytope::calibrated();
  Rng rng(20241);
  int pairs = 0;
  while (pairs < 50) {
    EafState a, b;
    if (!sample_member(p, rng, a) || !sample_member(p, rng, b)) continue;
    ++pairs;
    for (int i = 0; i < 100; ++i) {
      const double th = rng.uniform(0.0, 1.0);
      EafState z;
      for (std::size_t k = 0; k < kMaterialCount; ++k) z.x[k] = th * a.x[k] + (1 - th) * b.x[k];
      z.p_eaf = th * a.p_eaf + (1 - th) * b.p_eaf;
      ASSERT_TRUE(p.membership(z).member) << "theta " << th;
    }
  }
}

TEST(EafRegion, SingleMaterialSolutionsAreHomogeneous) {
  const EafPolytope p = EafPolytope::calibrated();
  for (double lambda : {0.5, 2.0, 7.25}) {
    const EafPolytope q = p.scaled(lambda);
    for (Material m : {Material::hdri, Material::cdri, Material::scrap}) {
      const EafState s1 = p.solve_single_material(m, 1.0);
      const EafState sl = q.solve_single_material(m, q.steel_target());
      for (std::size_t k = 0; k < kMaterialCount; ++k) EXPECT_NEAR(sl.x[k], lambda * s1.x[k], 1e-9 * lambda * 1000);
      EXPECT_NEAR(sl.p_eaf, lambda * s1.p_eaf, 1e-9 * lambda);
      EXPECT_TRUE(q.membership(sl).member);
    }
  }
}

TEST(EafRegion, DegenerateRegionPinsPower) {
  const EafPolytope base = EafPolytope::calibrated();
  const EafPolytope cdri_only = with_box(base, {0, 0, 0, 0}, {0, 500, 0, 5});
  const PowerRange r = cdri_only.min_max_power(1.0);
  EXPECT_NEAR(r.p_min, 3.11e-3 / 5.50e-3, 1e-12);
  EXPECT_NEAR(r.p_max, 3.11e-3 / 5.50e-3, 1e-12);
}

TEST(EafRegion, ColdChargePowerRangeSpansScrapToCdri) {
  const EafPolytope base = EafPolytope::calibrated();
  const EafPolytope cold = with_box(base, {0, 0, 0, 0}, {0, 500, 500, 5});
  const PowerRange r = cold.min_max_power(1.0);
  EXPECT_NEAR(r.p_min, 2.35e-3 / 5.26e-3, 1e-12);
  EXPECT_NEAR(r.argmin.x[2], 1.0 / 5.26e-3, 1e-9);
  EXPECT_NEAR(r.p_max, 3.11e-3 / 5.50e-3, 1e-12);
  EXPECT_NEAR(r.argmax.x[1], 1.0 / 5.50e-3, 1e-9);
}

TEST(EafRegion, PowerRangeAgreesWithGridScanOracle) {
  // Independent oracle: scan (x_H, x_S) on a fine grid, solve the mass row
  // for x_C and keep the feasible extremes of P.
  for (const auto& box : {EafPolytope::Row{1100, 200, 200, 1}, EafPolytope::Row{600, 120, 90, 1}}) {
    const EafPolytope p = with_box(EafPolytope::calibrated(), {0, 0, 0, 0}, box);
    const auto& a = p.a_eq();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    const int n = 800;
    for (int i = 0; i <= n; ++i)
      for (int k = 0; k <= n; ++k) {
        const double xh = box[0] * i / n, xs = box[2] * k / n;
        const double xc = (1.0 - a[1][0] * xh - a[1][2] * xs) / a[1][1];
        const double pw = a[0][0] * xh + a[0][1] * xc + a[0][2] * xs;
        if (xc < 0 || xc > box[1] || pw > box[3]) continue;
        lo = std::min(lo, pw);
        hi = std::max(hi, pw);
      }
    const PowerRange r = p.min_max_power(1.0);
    EXPECT_LE(r.p_min, lo + 1e-12);
    EXPECT_NEAR(r.p_min, lo, 2e-3);
    EXPECT_GE(r.p_max, hi - 1e-12);
    EXPECT_NEAR(r.p_max, hi, 2e-3);
    EXPECT_TRUE(p.membership(r.argmin).member);
    EXPECT_TRUE(p.membership(r.argmax).member);
  }
}

TEST(EafRegion, ZeroTargetGivesZeroPower) {
  const PowerRange r = EafPolytope::calibrated().min_max_power(0.0);
  EXPECT_EQ(r.p_min, 0.0);
  EXPECT_EQ(r.p_max, 0.0);
  for (double v : r.argmin.z()) EXPECT_EQ(v, 0.0);
}

TEST(EafRegion, EmptyRegionIsReported) {
  const EafPolytope p = with_box(EafPolytope::calibrated(), {0, 0, 0, 0}, {10, 10, 10, 1});
  try {
    p.min_max_power(1.0);
    FAIL() << "expected empty_region";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_region);
  }
}

TEST(EafRegion, PolytopeJsonRoundTrip) {
  const EafPolytope p = EafPolytope::calibrated();
  const EafPolytope q = nlohmann::json(p).get<EafPolytope>();
  EXPECT_EQ(q.a_eq(), p.a_eq());
  EXPECT_EQ(q.z_max(), p.z_max());
  nlohmann::json bad = p;
  bad["a_eq"][0][3] = 1.0;
  try {
    (void)bad.get<EafPolytope>();
    FAIL() << "expected schema error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema);
  }
}

TEST(CarbonFlows, ZeroCoefficients) {
  const CarbonFlows f = carbon_flows(CarbonBalanceCoefficients{}, 10.0, 5.0);
  EXPECT_EQ(f.carbon_powder, 0.0);
  EXPECT_EQ(f.lime, 0.0);
  EXPECT_EQ(f.co2, 0.0);
}

TEST(CarbonFlows, HandArithmetic) {
  CarbonBalanceCoefficients c;
  c.psi_carbon_per_steel = 0.01;
  c.psi_lime_per_steel = 0.05;
  c.psi_c_carbon = 3.67;
  c.psi_c_lime = 0.44;
  c.psi_c_scrap = 0.005;
  const CarbonFlows f = carbon_flows(c, 100.0, 20.0);
  EXPECT_NEAR(f.carbon_powder, 1.0, 1e-12);
  EXPECT_NEAR(f.lime, 5.0, 1e-12);
  EXPECT_NEAR(f.co2, 5.97, 1e-12);
}

TEST(CarbonFlows, AdditiveAndHomogeneous) {
  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    CarbonBalanceCoefficients c{rng.uniform(0, 4), rng.uniform(0, 1), rng.uniform(0, 0.1), rng.uniform(0, 0.05),
                                rng.uniform(0, 0.1)};
    const double s1 = rng.uniform(0, 200), r1 = rng.uniform(0, 50), s2 = rng.uniform(0, 200), r2 = rng.uniform(0, 50);
    const double lam = rng.uniform(0, 5);
    const CarbonFlows a = carbon_flows(c, s1, r1), b = carbon_flows(c, s2, r2);
    const CarbonFlows sum = carbon_flows(c, s1 + s2, r1 + r2), scaled = carbon_flows(c, lam * s1, lam * r1);
    EXPECT_NEAR(sum.co2, a.co2 + b.co2, 1e-9);
    EXPECT_NEAR(sum.lime, a.lime + b.lime, 1e-9);
    EXPECT_NEAR(scaled.co2, lam * a.co2, 1e-9);
    EXPECT_NEAR(scaled.carbon_powder, lam * a.carbon_powder, 1e-9);
  }
  EXPECT_THROW(carbon_flows(CarbonBalanceCoefficients{}, -1.0, 0.0), Error);
}

}  // namespace
}  // namespace steelflex
