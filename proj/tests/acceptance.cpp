// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "steelflex/highs_backend.hpp"
#include "steelflex/metrics.hpp"
#include "steelflex/penalty.hpp"
#include "steelflex/report.hpp"
#include "support.hpp"

using namespace steelflex;
using testing::Rng;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(secs < budget_s, fmt::format("runtime {:.1f} s over budget {} s", secs, budget_s));
  if (!o.pass) ++failures;
  std::printf("%s  %d  %s  (%.2f s)%s%s\n", o.pass ? "PASS" : "FAIL", id, name, secs, o.detail.empty() ? "" : "  ",
              o.detail.c_str());
  std::fflush(stdout);
}

Outcome eaf_validation_point() {
  Outcome o;
  const EafState s = EafPolytope::calibrated().solve_single_material(Material::cdri, 1.0);
  const double kwh = s.p_eaf * 1000.0;
  const double rel = (590.0 - kwh) / 590.0 * 100.0;
  o.detail = fmt::format("{:.2f} kWh/t, {:.2f}% below 590", kwh, rel);
  o.require(std::abs(kwh - 565.45) < 0.01, "intensity differs from 565.45");
  o.require(std::abs(kwh - 566.0) <= 1.0, "more than 1 kWh/t from 566");
  o.require(std::abs(rel - 4.07) <= 0.1 && std::abs(rel - 4.1) <= 0.1, "relative error off");
  return o;
}

Outcome polytope_properties() {
  Outcome o;
  const EafPolytope p = EafPolytope::calibrated();
  const auto& a = p.a_eq();
  Rng rng(2);
  std::vector<EafState> members;
  int draws = 0;
  while (members.size() < 1000 && draws < 1000000) {
    ++draws;
    EafState z;
    const double xh = rng.uniform(0.0, p.z_max()[0]), xs = rng.uniform(0.0, p.z_max()[2]);
    z.x = {xh, (p.b_eq()[1] - a[1][0] * xh - a[1][2] * xs) / a[1][1], xs};
    z.p_eaf = a[0][0] * z.x[0] + a[0][1] * z.x[1] + a[0][2] * z.x[2];
    const MembershipResult m = p.membership(z);
    if (!m.member) continue;
    if (std::max(std::abs(m.residual[0]), std::abs(m.residual[1])) > 1e-6 || m.min_bound_slack < -1e-9) {
      o.require(false, "member with residual above 1e-6");
      break;
    }
    members.push_back(z);
  }
  o.require(members.size() == 1000, fmt::format("only {} members sampled", members.size()));
  int combos_ok = 0;
  for (int i = 0; i < 100 && members.size() >= 2; ++i) {
    const EafState& u = members[static_cast<std::size_t>(rng.integer(0, static_cast<int>(members.size()) - 1))];
    const EafState& v = members[static_cast<std::size_t>(rng.integer(0, static_cast<int>(members.size()) - 1))];
    const double th = rng.uniform(0.0, 1.0);
    EafState z;
    for (std::size_t k = 0; k < kMaterialCount; ++k) z.x[k] = th * u.x[k] + (1 - th) * v.x[k];
    z.p_eaf = th * u.p_eaf + (1 - th) * v.p_eaf;
    combos_ok += p.membership(z).member ? 1 : 0;
  }
  o.require(combos_ok == 100, fmt::format("{}/100 convex combinations are members", combos_ok));
  double worst = 0.0;
  for (double lam : {0.5, 2.0}) {
    const EafPolytope q = p.scaled(lam);
    for (Material m : {Material::hdri, Material::cdri, Material::scrap}) {
      const EafState s1 = p.solve_single_material(m, 1.0), sl = q.solve_single_material(m, q.steel_target());
      worst = std::max(worst, std::abs(sl.p_eaf - lam * s1.p_eaf));
      for (std::size_t k = 0; k < kMaterialCount; ++k)
        worst = std::max(worst, std::abs(sl.x[k] - lam * s1.x[k]) / std::max(1.0, std::abs(lam * s1.x[k])));
    }
  }
  o.require(worst <= 1e-9, fmt::format("homogeneity error {}", worst));
  if (o.pass) o.detail = fmt::format("1000 members from {} draws, homogeneity error {:.1e}", draws, worst);
  return o;
}

Outcome arm_properties() {
  Outcome o;
  Rng rng(26);
  const int T = 24, L = 8;
  double worst_rel = 0.0;
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    const double cap = rng.uniform(5.0, 250.0);
    const double order = rng.uniform(0.0, 1.0) * T * cap;
    double residual = order;
    for (int k = 0; k < T; ++k) {
      const int len = std::min(L, T - k);
      const PacingBounds b = pacing_bounds(PacingPolicy::arm, residual, len, T - k, cap);
      const double attainable = std::min(b.upper, len * cap);
      if (b.lower > attainable * (1 + 1e-12) + 1e-12) {
        o.require(false, fmt::format("empty bounds at trial {} roll {}", trial, k));
        break;
      }
      if (len == T - k && std::abs(b.lower - residual) > 1e-9 * std::max(1.0, residual)) {
        o.require(false, fmt::format("terminal window does not force Q = R at trial {}", trial));
        break;
      }
      // commit the first step of some window plan inside the bounds
      const double target = rng.uniform(b.lower, attainable);
      const double q_min = std::max(0.0, target - (len - 1) * cap);
      const double q = rng.coin() ? q_min : rng.uniform(q_min, std::min(cap, target));
      residual -= q;
    }
    worst_rel = std::max(worst_rel, std::abs(residual) / std::max(1.0, order));
  }
  o.require(worst_rel <= 1e-6, fmt::format("realized production misses the order by {}", worst_rel));
  if (o.pass) o.detail = fmt::format("1000 instances, worst relative miss {:.1e}", worst_rel);
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  json j = testing::toy_config_json(12);
  for (const char* k : {"lambda_p", "lambda_rf", "lambda_s"}) j["penalty"][k] = 0.0;
  j["forecast"]["da_error_frac"] = 0.0;
  j["forecast"]["id_error_frac"] = 0.0;
  const PlantConfig plant = parse_plant_config(j);
  HighsBackend backend;
  const FullRun r =
      run_pipeline(plant, testing::toy_truth(12), nullptr, PipelineOptions::from_plant(plant), backend);
  const double oracle = r.dr.dd.objective, got = r.dr.costs.f_global_di;
  const double rel = std::abs(got - oracle) / std::abs(oracle);
  o.detail = fmt::format("rolling {:.6f} vs one-shot {:.6f}, rel {:.1e}", got, oracle, rel);
  o.require(rel <= 1e-4, "relative difference above 1e-4");
  return o;
}

Outcome penalty_encoding() {
  Outcome o;
  PenaltyConfig c;
  c.mechanism = PenaltyMechanism::m3;
  for (std::size_t u = 0; u < kCoreUnitCount; ++u) {
    c.alpha[u] = {1.0, 1.0};
    c.beta[u] = {2.0, 2.0};
    c.epsilon[u] = {0.05, 0.05};
  }
  c.tangent_cut_count = 16;
  double worst = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double d = -1.0 + 0.02 * i;
    const double exact = exact_penalty(c, CoreUnit::ae, d), enc = encoded_penalty(c, CoreUnit::ae, d);
    if (std::abs(d) <= 0.05 + 1e-12) {
      o.require(exact == 0.0 && enc == 0.0, fmt::format("nonzero penalty in the deadband at {}", d));
      continue;
    }
    o.require(enc <= exact + 1e-12, fmt::format("encoding above exact at {}", d));
    worst = std::max(worst, (exact - enc) / exact);
  }
  o.require(worst <= 0.01, fmt::format("relative error {:.3f}%", 100 * worst));
  if (o.pass) o.detail = fmt::format("worst relative error {:.3f}%", 100 * worst);
  return o;
}

struct BundledRuns {
  RunOutcome base, fcfb, m1, m2;
  std::map<double, RunOutcome> sweep;
};

RunOutcome bundled_run(const std::function<void(RunRequest&)>& tweak) {
  const auto d = testing::data_dir();
  RunRequest rq;
  rq.config = d / "plant_config.json";
  rq.scenario = d / "scenario_synthetic.csv";
  rq.history = d / "history";
  tweak(rq);
  const RunInputs in = load_inputs(rq);
  HighsBackend backend;
  return execute_run(rq, in, backend);
}

const BundledRuns& bundled() {
  static const BundledRuns runs = [] {
    BundledRuns r;
    r.base = bundled_run([](RunRequest&) {});
    r.fcfb = bundled_run([](RunRequest& q) { q.pacing = PacingPolicy::fcfb; });
    r.m1 = bundled_run([](RunRequest& q) { q.penalty = "m1"; });
    r.m2 = bundled_run([](RunRequest& q) { q.penalty = "m2"; });
    for (double l : {0.0, 50.0, 200.0, 2000.0}) r.sweep[l] = bundled_run([l](RunRequest& q) { q.lambda_p = l; });
    return r;
  }();
  return runs;
}

Outcome directional_reproduction() {
  Outcome o;
  const BundledRuns& r = bundled();
  const DrRun& dr = *r.base.dr;
  const double bi = dr.costs.bi.total(), di = dr.costs.f_global_di;
  o.require(di < bi, fmt::format("DI cost {:.0f} not below BI {:.0f}", di, bi));
  const double eta_di = dr.metrics.matching_di.value, eta_bi = dr.metrics.matching_bi.value;
  o.require(eta_di > eta_bi, fmt::format("matching {:.3f} not above {:.3f}", eta_di, eta_bi));
  const DrRun& f = *r.fcfb.dr;
  o.require(dr.costs.f_global_di <= f.costs.f_global_di + 1e-6 * std::abs(f.costs.f_global_di),
            fmt::format("ARM cost {:.0f} above FCFB {:.0f}", dr.costs.f_global_di, f.costs.f_global_di));
  o.require(dr.costs.curtailed_di <= f.costs.curtailed_di + 1e-6,
            fmt::format("ARM curtails {:.3f} MWh, FCFB {:.3f}", dr.costs.curtailed_di, f.costs.curtailed_di));
  double prev = INFINITY;
  std::string rates;
  for (const auto& [lam, run] : r.sweep) {
    const double rate = run.dr->metrics.deviation.rate;
    rates += fmt::format("{}{}:{:.3f}", rates.empty() ? "" : ",", lam, rate);
    o.require(rate <= prev + 1e-9, fmt::format("deviation rate rises at lambda_p {}", lam));
    prev = rate;
  }
  const double m3 = dr.metrics.deviation.max_abs, m2 = r.m2.dr->metrics.deviation.max_abs,
               m1 = r.m1.dr->metrics.deviation.max_abs;
  o.require(m3 <= m2 + 1e-9 && m3 <= m1 + 1e-9, fmt::format("max |dpsi| m3 {:.3f} m2 {:.3f} m1 {:.3f}", m3, m2, m1));
  if (o.pass)
    o.detail = fmt::format(
        "cost {:.0f} < {:.0f}; eta {:.3f} > {:.3f}; ARM/FCFB cost {:.0f}/{:.0f} curt {:.2f}/{:.2f}; "
        "rate {}; max|dpsi| {:.3f}/{:.3f}/{:.3f}",
        di, bi, eta_di, eta_bi, dr.costs.f_global_di, f.costs.f_global_di, dr.costs.curtailed_di,
        f.costs.curtailed_di, rates, m3, m2, m1);
  return o;
}

Outcome conservation_audit() {
  Outcome o;
  const BundledRuns& r = bundled();
  std::vector<const RunOutcome*> runs{&r.base, &r.fcfb, &r.m1, &r.m2};
  for (const auto& [lam, run] : r.sweep) runs.push_back(&run);
  double worst = 0.0;
  std::size_t schedules = 0, checks = 0;
  const PlantConfig plant = testing::bundled_plant();
  const Auditor auditor(plant);
  for (const RunOutcome* run : runs) {
    std::vector<const DispatchSolution*> sols{&*run->baseline->bd.solution, &run->baseline->bi_realized,
                                              &*run->dr->dd.solution, &run->dr->di_realized};
    for (const auto& plan : run->baseline->bi_plans) sols.push_back(&plan);
    for (const DispatchSolution* s : sols) {
      const AuditReport a = auditor.audit(*s);
      worst = std::max(worst, a.max_residual);
      checks += a.checks;
      ++schedules;
      if (!a.ok() && o.pass) o.require(false, fmt::format("{} above tolerance", a.worst_check));
    }
    worst = std::max(worst, run->dr->audit_max);  // every DI window, audited as solved
    schedules += run->dr->windows.size();
  }
  o.require(worst <= 1e-6, fmt::format("max normalized residual {}", worst));
  if (o.pass) o.detail = fmt::format("{} schedules, {} checks, max residual {:.1e}", schedules, checks, worst);
  return o;
}

Outcome metric_examples() {
  Outcome o;
  const EffectiveCapacity c = effective_capacity(DrOffer{{10, 10, 10}, {1, 1, 1}}, {50, 50, 50}, {38, 52, 42.5});
  o.require(c.per_period == std::vector<double>{10, 0, 7.5}, "effective capacity");
  o.require(effective_capacity(DrOffer{{0, 0}, {0, 0}}, {1, 2}, {0, 0}).average == 0.0, "empty offer average");
  o.require(recovery_ramp({7, 7, 7}) == 0.0 && recovery_ramp({100, 50, 150, 120}) == 100.0, "recovery ramp");
  o.require(matching_degree({1, 4, 2}, {1, 4, 2}).value == 1.0, "identical series matching");
  o.require(matching_degree({0, 10}, {10, 0}).value == 0.0, "opposed series matching");
  o.require(matching_degree({0, 10, 10}, {0, 5, 10}).value == 0.5, "partial matching");
  o.require(matching_degree({3, 3}, {8, 8}).value == 1.0, "flat series matching");
  o.require(nri({5, 5, 5}, 10.0) == 0.0 && nri({0, 50, 0}, 100.0) == 1.0, "nri");
  PerCore<std::vector<double>> base{}, moved{};
  for (auto& s : base) s.assign(5, 3.0);
  moved = base;
  moved[1][2] += 4.0;
  const PerCore<double> psi{10, 20, 5, 4};
  o.require(deviation_stats(base, base, psi).rate == 0.0, "zero deviation rate");
  o.require(std::abs(deviation_stats(moved, base, psi).rate - 0.2) < 1e-15, "deviation rate 0.2");
  Rng rng(8);
  int out_of_range = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(2, 48));
    std::vector<double> a(n), b(n);
    for (std::size_t t = 0; t < n; ++t) {
      a[t] = rng.uniform(-100, 100);
      b[t] = rng.uniform(-100, 100);
    }
    const double m = matching_degree(a, b).value;
    out_of_range += (m < 0.0 || m > 1.0) ? 1 : 0;
  }
  o.require(out_of_range == 0, fmt::format("{} matching values outside [0, 1]", out_of_range));
  if (o.pass) o.detail = "hand examples exact, 10000 random pairs in [0, 1]";
  return o;
}

}  // namespace

int main() {
  criterion(1, "EAF validation point", 1.0, eaf_validation_point);
  criterion(2, "polytope properties", 5.0, polytope_properties);
  criterion(3, "ARM pacing properties", 30.0, arm_properties);
  criterion(4, "oracle equivalence", 60.0, oracle_equivalence);
  criterion(5, "penalty encoding", 5.0, penalty_encoding);
  criterion(6, "directional reproduction", 900.0, directional_reproduction);
  criterion(7, "conservation audit", 60.0, conservation_audit);
  criterion(8, "metric examples", 5.0, metric_examples);
  return failures == 0 ? 0 : 1;
}
