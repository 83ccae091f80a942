#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "steelflex/highs_backend.hpp"
#include "steelflex/rolling_engine.hpp"
#include "support.hpp"

namespace steelflex {
namespace {

using testing::Rng;
using testing::toy_plant;
using testing::toy_truth;

ExogenousScenario flat(std::size_t n, double value) {
  ExogenousScenario s;
  for (std::size_t i = 0; i < n; ++i) s.t.push_back(static_cast<int>(i));
  for (auto& col : s.series) col.assign(n, value);
  return s;
}

// --- forecasts ----------------------------------------------------------------

TEST(Forecast, ZeroErrorIsTruth) {
  const ExogenousScenario truth = testing::bundled_scenario();
  const ExogenousScenario f = simulate_forecast(truth, 0.0, 99);
  EXPECT_EQ(f.series, truth.series);
}

TEST(Forecast, SameSeedSameDraw) {
  const ExogenousScenario truth = testing::bundled_scenario();
  EXPECT_EQ(simulate_forecast(truth, 0.1, 5).series, simulate_forecast(truth, 0.1, 5).series);
  EXPECT_NE(simulate_forecast(truth, 0.1, 5).series, simulate_forecast(truth, 0.1, 6).series);
}

TEST(Forecast, ErrorStatistics) {
  const ExogenousScenario truth = flat(1000, 100.0);
  const ExogenousScenario f = simulate_forecast(truth, 0.10, 2024);
  double max_e = 0.0;
  for (std::size_t q = 0; q < kFeatureCount; ++q) {
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const double e = std::abs(f.series[q][i] / 100.0 - 1.0);
      max_e = std::max(max_e, e);
      sum += e;
    }
    EXPECT_NEAR(sum / 1000.0, 0.05, 0.01) << to_string(kFeatures[q]);
  }
  EXPECT_LE(max_e, 0.10);
}

TEST(Forecast, WindowUsesTruthForTheCurrentPeriod) {
  const ExogenousScenario truth = testing::bundled_scenario();
  const ExogenousScenario w = window_inputs(truth, 5, 8, 0.05, 7);
  ASSERT_EQ(w.size(), 8u);
  for (std::size_t q = 0; q < kFeatureCount; ++q) {
    EXPECT_EQ(w.series[q][0], truth.series[q][5]);
    for (std::size_t i = 1; i < w.size(); ++i)
      EXPECT_LE(std::abs(w.series[q][i] - truth.series[q][5 + i]), 0.05 * std::abs(truth.series[q][5 + i]) + 1e-12);
  }
  EXPECT_EQ(w.t.front(), truth.t[5]);
}

// --- kernel references ----------------------------------------------------------

HistoryLibrary two_scenarios(const std::vector<double>& wind_a, const std::vector<double>& wind_b, double bw) {
  HistoryLibrary lib;
  lib.bandwidth.fill(bw);
  lib.tracked = {StorageId::bess};
  for (const auto* w : {&wind_a, &wind_b}) {
    HistoryScenario sc;
    sc.name = w == &wind_a ? "a" : "b";
    sc.features = flat(w->size(), 0.0);
    sc.features[Feature::wind] = *w;
    sc.soc[0].assign(w->size(), w == &wind_a ? 0.2 : 0.6);
    lib.scenarios.push_back(sc);
  }
  return lib;
}

TEST(Kernel, SingleScenarioReproducesItsTrajectory) {
  HistoryLibrary lib = two_scenarios({1, 2, 3}, {1, 2, 3}, 1.0);
  lib.scenarios.pop_back();
  lib.scenarios[0].soc[0] = {0.1, 0.4, 0.9};
  for (int t = 0; t < 3; ++t) EXPECT_DOUBLE_EQ(soc_reference(lib, flat(3, 50.0), t)[0], lib.scenarios[0].soc[0][t]);
}

TEST(Kernel, IdenticalScenariosShareWeightEvenly) {
  const HistoryLibrary lib = two_scenarios({4, 5, 6}, {4, 5, 6}, 1.0);
  const KernelWeights kw = kernel_weights(lib, flat(3, 3.0), 2);
  EXPECT_DOUBLE_EQ(kw.weights[0], 0.5);
  EXPECT_DOUBLE_EQ(kw.weights[1], 0.5);
}

TEST(Kernel, TwoScenarioHandOracle) {
  // Observed wind {10.5, 12, 14}; squared prefix distances at t = 2 are 0.25
  // and 1.25, divided by 2 sigma^2 (t + 1) = 6:
  // w_a = 1 / (1 + exp(-1/6)).
  const HistoryLibrary lib = two_scenarios({10, 12, 14}, {11, 12, 15}, 1.0);
  ExogenousScenario obs = flat(3, 0.0);
  obs[Feature::wind] = {10.5, 12, 14};
  const KernelWeights kw1 = kernel_weights(lib, obs, 1);
  EXPECT_NEAR(kw1.weights[0], 0.5, 1e-15);
  KernelWeights kw2;
  const PerStorage<double> ref = soc_reference(lib, obs, 2, &kw2);
  EXPECT_NEAR(kw2.weights[0], 0.5415704832167999, 1e-14);
  EXPECT_NEAR(kw2.weights[1], 0.4584295167832001, 1e-14);
  EXPECT_NEAR(ref[0], 0.38337180671328003, 1e-14);
  EXPECT_FALSE(kw2.degenerate);
}

TEST(Kernel, MatchingPrefixConcentratesWeight) {
  const HistoryLibrary lib = two_scenarios({10, 12, 14}, {11, 12, 15}, 0.05);
  ExogenousScenario obs = flat(3, 0.0);
  obs[Feature::wind] = {10, 12, 14};
  const KernelWeights kw = kernel_weights(lib, obs, 2);
  EXPECT_GT(kw.weights[0], 1.0 - 1e-12);
}

TEST(Kernel, UnderflowFallsBackToUniform) {
  const HistoryLibrary lib = two_scenarios({10, 12, 14}, {11, 12, 15}, 1e-3);
  ExogenousScenario obs = flat(3, 0.0);
  obs[Feature::wind] = {500, 500, 500};
  const KernelWeights kw = kernel_weights(lib, obs, 2);
  EXPECT_TRUE(kw.degenerate);
  EXPECT_DOUBLE_EQ(kw.weights[0], 0.5);
}

TEST(Kernel, WindowReferenceUsesPrefixWeightsForEveryPeriod) {
  HistoryLibrary lib = two_scenarios({10, 12, 14, 16}, {11, 12, 15, 16}, 1.0);
  lib.scenarios[0].soc[0] = {0.1, 0.2, 0.3, 0.4};
  lib.scenarios[1].soc[0] = {0.5, 0.6, 0.7, 0.8};
  ExogenousScenario obs = flat(4, 0.0);
  obs[Feature::wind] = {10.5, 12, 14, 99};
  KernelWeights kw;
  const auto ref = window_soc_reference(lib, obs, 1, 3, &kw);
  ASSERT_EQ(ref[0].size(), 3u);
  for (int i = 0; i < 3; ++i)
    EXPECT_NEAR(ref[0][i], kw.weights[0] * lib.scenarios[0].soc[0][1 + i] + kw.weights[1] * lib.scenarios[1].soc[0][1 + i],
                1e-15);
  EXPECT_NEAR(kw.weights[0], 0.5, 1e-15);
}

TEST(History, SaveLoadRoundTrip) {
  HistoryLibrary lib = two_scenarios({10.125, 12, 14}, {11, 12.5, 15}, 0.7);
  lib.scenarios[1].soc[0] = {0.123456789012345, 0.5, 1.0 / 3.0};
  const auto dir = std::filesystem::temp_directory_path() / "steelflex_history_roundtrip";
  std::filesystem::remove_all(dir);
  save_history(lib, dir);
  const HistoryLibrary back = load_history(dir);
  ASSERT_EQ(back.scenarios.size(), 2u);
  EXPECT_EQ(back.bandwidth, lib.bandwidth);
  EXPECT_EQ(back.tracked, lib.tracked);
  for (std::size_t s = 0; s < 2; ++s) {
    EXPECT_EQ(back.scenarios[s].features.series, lib.scenarios[s].features.series);
    EXPECT_EQ(back.scenarios[s].soc[0], lib.scenarios[s].soc[0]);
  }
  std::filesystem::remove_all(dir);
}

TEST(History, BundledLibraryMatchesThePlant) {
  const HistoryLibrary lib = load_history(testing::data_dir() / "history");
  const PlantConfig plant = testing::bundled_plant();
  EXPECT_EQ(lib.periods(), static_cast<std::size_t>(plant.periods));
  EXPECT_EQ(lib.tracked, default_tracked(plant));
  for (const auto& sc : lib.scenarios)
    for (StorageId id : lib.tracked)
      for (double v : sc.soc[static_cast<std::size_t>(id)]) {
        EXPECT_GE(v, -1e-9);
        EXPECT_LE(v, 1.0 + 1e-9);
      }
}

// --- pacing --------------------------------------------------------------------

TEST(Pacing, TerminalWindowForcesResidual) {
  const PacingBounds b = pacing_bounds(PacingPolicy::arm, 40.0, 3, 3, 125.0);
  EXPECT_DOUBLE_EQ(b.lower, 40.0);
  EXPECT_DOUBLE_EQ(b.upper, 40.0);
}

TEST(Pacing, ProportionalLowerBound) {
  const PacingBounds b = pacing_bounds(PacingPolicy::arm, 240.0, 8, 24, 125.0);
  EXPECT_DOUBLE_EQ(b.lower, 80.0);
  EXPECT_DOUBLE_EQ(b.upper, 240.0);
}

TEST(Pacing, CompletedOrder) {
  for (PacingPolicy p : {PacingPolicy::arm, PacingPolicy::fcfb}) {
    const PacingBounds b = pacing_bounds(p, 0.0, 8, 20, 125.0);
    EXPECT_EQ(b.lower, 0.0);
    EXPECT_EQ(b.upper, 0.0);
  }
}

TEST(Pacing, FeasibilityBoundOnlyBindsLate) {
  EXPECT_DOUBLE_EQ(pacing_bounds(PacingPolicy::fcfb, 1000.0, 8, 24, 100.0).lower, 0.0);
  EXPECT_DOUBLE_EQ(pacing_bounds(PacingPolicy::fcfb, 1000.0, 8, 12, 100.0).lower, 600.0);
}

TEST(Pacing, PreconditionViolations) {
  auto kind = [](double r, int left, double cap) {
    try {
      pacing_bounds(PacingPolicy::arm, r, 1, left, cap);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::invalid_argument;
  };
  EXPECT_EQ(kind(1201.0, 12, 100.0), ErrorKind::capacity_violation);
  EXPECT_EQ(kind(-5.0, 12, 100.0), ErrorKind::pacing_infeasible);
  EXPECT_THROW(pacing_bounds(PacingPolicy::arm, 10.0, 9, 8, 100.0), Error);
}

TEST(Pacing, ArmStaysFeasibleUnderAdversarialCommitments) {
  // Each roll commits the first step of some window plan meeting the bounds;
  // the adversary picks the smallest or a random admissible first step.
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const int T = 24, L = rng.integer(1, 12);
    const double cap = rng.uniform(10.0, 200.0);
    double residual = rng.uniform(0.0, T * cap);
    for (int k = 0; k < T; ++k) {
      const int len = std::min(L, T - k);
      const PacingBounds b = pacing_bounds(PacingPolicy::arm, residual, len, T - k, cap);
      ASSERT_LE(b.lower, len * cap * (1 + 1e-12)) << "trial " << trial << " k " << k;
      const double target = rng.uniform(b.lower, std::min(b.upper, len * cap));
      const double q_min = std::max(0.0, target - (len - 1) * cap);
      const double q = rng.coin() ? q_min : rng.uniform(q_min, std::min(cap, target));
      residual -= q;
    }
    EXPECT_NEAR(residual, 0.0, 1e-9 * T * cap);
  }
}

TEST(SellQuota, FutureResCountsAtTheForecastLowerBound) {
  const PlantConfig plant = toy_plant(4);
  RollingLedger ledger;
  ledger.res_cum = 100.0;
  ledger.sell_cum = 5.0;
  ExogenousScenario w = flat(2, 0.0);
  w[Feature::wind] = {6.0, 11.0};
  w[Feature::solar] = {4.0, 11.0};
  // 10 realized plus 22 / 1.1 forecast
  EXPECT_NEAR(ledger.sell_quota(plant, w, 0.1), plant.psi_sell * 130.0 * plant.dt - 5.0, 1e-12);
  EXPECT_NEAR(ledger.sell_quota(plant, w, 0.0), plant.psi_sell * 132.0 * plant.dt - 5.0, 1e-12);
  ledger.sell_cum = 1e6;
  EXPECT_EQ(ledger.sell_quota(plant, w, 0.1), 0.0);
}

// --- pipeline on the toy plant --------------------------------------------------

class ToyPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    json j = testing::toy_config_json(12);
    j["horizon"]["lookahead"] = 4;
    plant_ = new PlantConfig(parse_plant_config(j));
    truth_ = new ExogenousScenario(toy_truth(12));
    HighsBackend backend;
    run_ = new FullRun(run_pipeline(*plant_, *truth_, nullptr, PipelineOptions::from_plant(*plant_), backend));
  }
  static void TearDownTestSuite() {
    delete run_;
    delete truth_;
    delete plant_;
  }
  static PlantConfig* plant_;
  static ExogenousScenario* truth_;
  static FullRun* run_;
};
PlantConfig* ToyPipeline::plant_ = nullptr;
ExogenousScenario* ToyPipeline::truth_ = nullptr;
FullRun* ToyPipeline::run_ = nullptr;

TEST_F(ToyPipeline, WindowsStartFromTheRealizedState) {
  const BaselineRun& b = run_->baseline;
  for (std::size_t k = 1; k < b.bi_plans.size(); ++k) {
    const UnitState want = b.bi_realized.state_after(k - 1);
    const UnitState got = b.bi_plans[k].start;
    EXPECT_EQ(got.sf_qss_prev, want.sf_qss_prev);
    EXPECT_EQ(got.msr_qss_prev, want.msr_qss_prev);
    EXPECT_EQ(got.pending_hot, want.pending_hot);
    EXPECT_EQ(got.level, want.level);
  }
}

TEST_F(ToyPipeline, PeakIsMonotoneAndEndsAtTheRealizedMaximum) {
  const BaselineRun& b = run_->baseline;
  double realized = 0.0, prev = 0.0;
  for (std::size_t k = 0; k < b.bi_plans.size(); ++k) {
    EXPECT_GE(b.bi_plans[k].peak_buy, realized - 1e-7);
    EXPECT_GE(b.bi_plans[k].peak_buy, prev - 1e-7);
    prev = b.bi_plans[k].peak_buy;
    realized = std::max(realized, b.bi_realized.p_buy[k]);
  }
  EXPECT_NEAR(b.bi_plans.back().peak_buy, realized, 1e-7);
}

TEST_F(ToyPipeline, RealizedSalesRespectTheQuota) {
  for (const DispatchSolution* s : {&run_->baseline.bi_realized, &run_->dr.di_realized}) {
    double sold = 0.0, res = 0.0;
    for (std::size_t i = 0; i < s->size(); ++i) {
      sold += s->p_sell[i] * plant_->dt;
      res += truth_->res(i) * plant_->dt;
    }
    EXPECT_LE(sold, plant_->psi_sell * res + 1e-6);
  }
}

TEST_F(ToyPipeline, OrdersAreMetExactlyUnderArm) {
  for (OrderUnit v : kOrderUnits) {
    const double order = plant_->order(v);
    EXPECT_NEAR(run_->dr.produced_di[static_cast<std::size_t>(v)], order, 1e-6 * order);
    EXPECT_NEAR(run_->dr.produced_bi[static_cast<std::size_t>(v)], order, 1e-6 * order);
  }
  for (const WindowRecord& w : run_->dr.windows) EXPECT_LE(w.audit_max, 1e-6);
}

TEST_F(ToyPipeline, RealizedCostAssembly) {
  const RealizedCosts& c = run_->dr.costs;
  EXPECT_EQ(c.h2_backfill, 0.0);  // no hydrogen tank on the toy plant
  const PenaltyConfig& p = run_->dr.options.penalty;
  EXPECT_NEAR(c.f_global_di, c.di.total() + p.lambda_s * c.shortfall_global + p.lambda_p * c.penalty_global + c.h2_backfill,
              1e-9 * std::abs(c.f_global_di));
  EXPECT_GE(c.shortfall_global, 0.0);
}

TEST(Pipeline, OracleEquivalenceOnTheToy) {
  json j = testing::toy_config_json(12);
  for (const char* k : {"lambda_p", "lambda_rf", "lambda_s"}) j["penalty"][k] = 0.0;
  j["forecast"]["da_error_frac"] = 0.0;
  j["forecast"]["id_error_frac"] = 0.0;
  const PlantConfig plant = parse_plant_config(j);
  const ExogenousScenario truth = toy_truth(12);
  HighsBackend backend;
  const FullRun r = run_pipeline(plant, truth, nullptr, PipelineOptions::from_plant(plant), backend);
  const double oracle = r.dr.dd.objective;
  EXPECT_NEAR(r.dr.costs.f_global_di, oracle, 1e-4 * std::abs(oracle));
}

}  // namespace
}  // namespace steelflex
