#pragma once

// Day-ahead to intra-day pipeline:
//   1. bd on day-ahead forecasts
//   2. bi rolling, truth revealed period by period, first step committed
//   3. dd on the same day-ahead forecasts against bd, producing offers
//   4. di rolling against the bi benchmark with offers, pacing and penalties
//   5. realized global objective and order-completion audit

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "steelflex/audit.hpp"
#include "steelflex/config.hpp"
#include "steelflex/dispatch.hpp"
#include "steelflex/metrics.hpp"
#include "steelflex/penalty.hpp"
#include "steelflex/scheduler.hpp"

namespace steelflex {

// --- forecasts ---------------------------------------------------------------

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Streams for the seeded forecast draws.
inline constexpr std::uint64_t kDayAheadStream = 0xDA;
inline std::uint64_t intraday_stream(int k) { return 0x1D000 + static_cast<std::uint64_t>(k); }

/// Multiplicative i.i.d. uniform perturbation truth * (1 + e), e ~ U[-f, f].
/// Series whose truth is nonnegative are floored at zero.
inline ExogenousScenario simulate_forecast(const ExogenousScenario& truth, double error_frac, std::uint64_t seed) {
  if (!(error_frac >= 0.0)) fail(ErrorKind::invalid_argument, "simulate_forecast: error_frac must be >= 0");
  ExogenousScenario out = truth;
  if (error_frac == 0.0) return out;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-error_frac, error_frac);
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const double v = truth.series[f][i];
      const double e = dist(gen);
      out.series[f][i] = v >= 0.0 ? std::max(0.0, v * (1.0 + e)) : v * (1.0 + e);
    }
  return out;
}

/// Window inputs at roll k: truth for period k, forecast for later periods.
inline ExogenousScenario window_inputs(const ExogenousScenario& truth, int k, int length, double error_frac,
                                       std::uint64_t seed) {
  ExogenousScenario w = truth.slice(static_cast<std::size_t>(k), static_cast<std::size_t>(length));
  const ExogenousScenario f = simulate_forecast(w, error_frac, mix_seed(seed, intraday_stream(k)));
  for (std::size_t q = 0; q < kFeatureCount; ++q)
    for (std::size_t i = 1; i < w.size(); ++i) w.series[q][i] = f.series[q][i];
  return w;
}

// --- kernel-weighted SoC references ------------------------------------------

struct HistoryScenario {
  std::string name;
  ExogenousScenario features;
  PerStorage<std::vector<double>> soc{};  // fraction of e_max at the end of each period
};

struct HistoryLibrary {
  std::vector<HistoryScenario> scenarios;
  std::array<double, kFeatureCount> bandwidth{};
  std::vector<StorageId> tracked;

  std::size_t periods() const { return scenarios.empty() ? 0 : scenarios.front().features.size(); }

  void validate() const {
    if (scenarios.empty()) fail(ErrorKind::schema, "history library has no scenarios");
    for (double s : bandwidth)
      if (!(s > 0.0)) fail(ErrorKind::schema, "history bandwidths must be > 0");
    const std::size_t n = periods();
    for (const auto& sc : scenarios) {
      if (sc.features.size() != n) fail(ErrorKind::schema, "history scenarios must share the time grid");
      for (StorageId id : tracked)
        if (sc.soc[static_cast<std::size_t>(id)].size() != n)
          fail(ErrorKind::schema, fmt::format("history scenario {} lacks soc_{}", sc.name, to_string(id)));
    }
  }
};

struct KernelWeights {
  std::vector<double> weights;
  bool degenerate = false;  // every kernel underflowed; uniform fallback
};

/// Scenario weights from the observed feature prefix over periods 0..t.
inline KernelWeights kernel_weights(const HistoryLibrary& lib, const ExogenousScenario& observed, int t) {
  lib.validate();
  if (t < 0 || static_cast<std::size_t>(t) >= observed.size() || static_cast<std::size_t>(t) >= lib.periods())
    fail(ErrorKind::invalid_argument, fmt::format("kernel_weights: period {} outside the observed prefix", t));
  KernelWeights kw;
  const std::size_t ns = lib.scenarios.size();
  kw.weights.assign(ns, 0.0);
  double total = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    double k = 1.0;
    for (std::size_t q = 0; q < kFeatureCount; ++q) {
      double dist2 = 0.0;
      for (int tau = 0; tau <= t; ++tau) {
        const double d = observed.series[q][static_cast<std::size_t>(tau)] -
                         lib.scenarios[s].features.series[q][static_cast<std::size_t>(tau)];
        dist2 += d * d;
      }
      k *= std::exp(-dist2 / (2.0 * lib.bandwidth[q] * lib.bandwidth[q] * (t + 1)));
    }
    kw.weights[s] = k;
    total += k;
  }
  if (!(total > 0.0)) {
    kw.degenerate = true;
    kw.weights.assign(ns, 1.0 / static_cast<double>(ns));
    return kw;
  }
  for (double& w : kw.weights) w /= total;
  return kw;
}

inline PerStorage<double> soc_reference(const HistoryLibrary& lib, const ExogenousScenario& observed, int t,
                                        KernelWeights* weights_out = nullptr) {
  const KernelWeights kw = kernel_weights(lib, observed, t);
  PerStorage<double> ref{};
  for (StorageId id : lib.tracked) {
    const auto k = static_cast<std::size_t>(id);
    for (std::size_t s = 0; s < lib.scenarios.size(); ++s)
      ref[k] += kw.weights[s] * lib.scenarios[s].soc[k][static_cast<std::size_t>(t)];
  }
  if (weights_out != nullptr) *weights_out = kw;
  return ref;
}

/// References for the periods k..k+length-1 with weights from the prefix 0..k.
inline PerStorage<std::vector<double>> window_soc_reference(const HistoryLibrary& lib,
                                                            const ExogenousScenario& observed, int k, int length,
                                                            KernelWeights* weights_out = nullptr) {
  const KernelWeights kw = kernel_weights(lib, observed, k);
  PerStorage<std::vector<double>> ref{};
  for (StorageId id : lib.tracked) {
    const auto n = static_cast<std::size_t>(id);
    ref[n].assign(static_cast<std::size_t>(length), 0.0);
    for (int i = 0; i < length; ++i)
      for (std::size_t s = 0; s < lib.scenarios.size(); ++s)
        ref[n][static_cast<std::size_t>(i)] +=
            kw.weights[s] * lib.scenarios[s].soc[n][static_cast<std::size_t>(k + i)];
  }
  if (weights_out != nullptr) *weights_out = kw;
  return ref;
}

inline HistoryLibrary load_history(const std::filesystem::path& dir) {
  const json meta = read_json_file(dir / "bandwidths.json");
  HistoryLibrary lib;
  try {
    const json& bw = meta.at("bandwidth");
    for (Feature f : kFeatures) lib.bandwidth[static_cast<std::size_t>(f)] = bw.at(to_string(f)).get<double>();
    for (const auto& s : meta.at("tracked")) lib.tracked.push_back(storage_from_string(s.get<std::string>()));
    for (const auto& s : meta.at("scenarios")) {
      HistoryScenario sc;
      sc.name = s.get<std::string>();
      const CsvTable table = read_csv(dir / (sc.name + ".csv"));
      sc.features = scenario_from_table(table);
      for (StorageId id : lib.tracked)
        sc.soc[static_cast<std::size_t>(id)] = table.column(std::string("soc_") + to_string(id));
      lib.scenarios.push_back(std::move(sc));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::schema, (dir / "bandwidths.json").string() + ": " + e.what());
  }
  lib.validate();
  return lib;
}

inline void save_history(const HistoryLibrary& lib, const std::filesystem::path& dir) {
  lib.validate();
  std::filesystem::create_directories(dir);
  json meta;
  for (Feature f : kFeatures) meta["bandwidth"][to_string(f)] = lib.bandwidth[static_cast<std::size_t>(f)];
  meta["tracked"] = json::array();
  for (StorageId id : lib.tracked) meta["tracked"].push_back(to_string(id));
  meta["scenarios"] = json::array();
  for (const auto& sc : lib.scenarios) {
    meta["scenarios"].push_back(sc.name);
    std::ofstream out(dir / (sc.name + ".csv"));
    if (!out) fail(ErrorKind::io, "cannot write " + (dir / (sc.name + ".csv")).string());
    out << "t";
    for (Feature f : kFeatures) out << ',' << to_string(f);
    for (StorageId id : lib.tracked) out << ",soc_" << to_string(id);
    out << '\n';
    for (std::size_t i = 0; i < sc.features.size(); ++i) {
      out << sc.features.t[i];
      for (Feature f : kFeatures) out << fmt::format(",{}", sc.features.at(f, i));
      for (StorageId id : lib.tracked) out << fmt::format(",{}", sc.soc[static_cast<std::size_t>(id)][i]);
      out << '\n';
    }
  }
  std::ofstream(dir / "bandwidths.json") << meta.dump(2) << '\n';
}

/// Storages worth tracking: configured carrier storages, not the material silos.
inline std::vector<StorageId> default_tracked(const PlantConfig& p) {
  std::vector<StorageId> out;
  for (StorageId id : {StorageId::bess, StorageId::lts, StorageId::ht, StorageId::cst})
    if (p.has_storage(id) && p.storage(id).e_max > 0.0) out.push_back(id);
  return out;
}

/// Synthetic history: perturbed copies of a representative day, each solved
/// with perfect information (bd, then dd against it) to obtain SoC paths.
/// Bandwidths are the RMS perturbation per feature.
inline HistoryLibrary build_history(const PlantConfig& plant, const ExogenousScenario& representative, int count,
                                    double spread, std::uint64_t seed, SolverBackend& backend) {
  if (count < 1) fail(ErrorKind::invalid_argument, "build_history: count must be >= 1");
  HistoryLibrary lib;
  lib.tracked = default_tracked(plant);
  std::array<double, kFeatureCount> sq{};
  std::array<std::size_t, kFeatureCount> n{};
  for (int s = 0; s < count; ++s) {
    HistoryScenario sc;
    sc.name = fmt::format("scenario_{:02}", s);
    sc.features = simulate_forecast(representative, spread, mix_seed(seed, 0x4157000 + static_cast<std::uint64_t>(s)));
    const SolvedProblem bd = solve_problem(make_bd_spec(plant, sc.features), backend);
    if (!bd.solution) fail(ErrorKind::solver_failure, sc.name + ": bd " + bd.status_text);
    const SolvedProblem dd = solve_problem(make_dd_spec(plant, sc.features, *bd.solution, plant.penalty), backend);
    if (!dd.solution) fail(ErrorKind::solver_failure, sc.name + ": dd " + dd.status_text);
    for (StorageId id : lib.tracked) {
      const auto k = static_cast<std::size_t>(id);
      const double cap = plant.storage(id).e_max;
      for (double level : dd.solution->storage[k].level) sc.soc[k].push_back(level / cap);
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      for (std::size_t i = 0; i < representative.size(); ++i) {
        const double d = sc.features.series[f][i] - representative.series[f][i];
        sq[f] += d * d;
        ++n[f];
      }
    lib.scenarios.push_back(std::move(sc));
  }
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const double rms = n[f] ? std::sqrt(sq[f] / static_cast<double>(n[f])) : 0.0;
    lib.bandwidth[f] = rms > 0.0 ? rms : 1.0;
  }
  return lib;
}

// --- pacing ------------------------------------------------------------------

enum class PacingPolicy { arm, fcfb };

inline const char* to_string(PacingPolicy p) { return p == PacingPolicy::arm ? "arm" : "fcfb"; }
inline PacingPolicy pacing_from_string(const std::string& s) {
  if (s == "arm" || s == "ARM") return PacingPolicy::arm;
  if (s == "fcfb" || s == "FCFB") return PacingPolicy::fcfb;
  fail(ErrorKind::invalid_argument, "unknown pacing policy '" + s + "'");
}

/// Window production bounds at roll k (0-based; periods_left = T - k).
inline PacingBounds pacing_bounds(PacingPolicy policy, double residual, int window, int periods_left,
                                  double max_step_output) {
  if (window < 1 || window > periods_left)
    fail(ErrorKind::invalid_argument, fmt::format("pacing_bounds: window {} with {} periods left", window, periods_left));
  const double tol = 1e-9 * std::max(1.0, std::abs(residual));
  if (residual < -tol)
    fail(ErrorKind::pacing_infeasible, fmt::format("pacing_bounds: residual order {} is negative", residual));
  const double r = std::max(0.0, residual);
  if (r > periods_left * max_step_output + tol)
    fail(ErrorKind::capacity_violation, fmt::format("residual order {} exceeds remaining capacity {} x {}", r,
                                                    periods_left, max_step_output));
  PacingBounds b;
  b.upper = r;
  if (policy == PacingPolicy::arm)
    b.lower = static_cast<double>(window) / static_cast<double>(periods_left) * r;
  else
    b.lower = std::max(0.0, r - static_cast<double>(periods_left - window) * max_step_output);
  b.lower = std::min(b.lower, b.upper);
  return b;
}

// --- ledger and records -------------------------------------------------------

struct RollingLedger {
  int k = 0;
  DispatchSolution realized;
  double sell_cum = 0.0;  // MWh
  double res_cum = 0.0;   // MWh of realized RES availability
  double peak = 0.0;
  std::array<double, 2> produced{};

  double residual(const PlantConfig& p, OrderUnit v) const {
    return p.order(v) - produced[static_cast<std::size_t>(v)];
  }

  void commit(const DispatchSolution& plan, const PlantConfig& p) {
    realized.append_period(plan, 0);
    sell_cum += plan.p_sell[0] * p.dt;
    res_cum += plan.res[0] * p.dt;
    peak = std::max(peak, plan.p_buy[0]);
    produced[0] += plan.m_dri[0] * p.dt;
    produced[1] += plan.m_eaf[0] * p.dt;
    ++k;
  }

  /// Remaining sales for a window whose first period is realized. Later
  /// periods count RES at the forecast's lower bound f / (1 + e), so sales
  /// committed now can never exceed the quota earned by the realized day.
  double sell_quota(const PlantConfig& p, const ExogenousScenario& window, double error_frac) const {
    double res = window.size() > 0 ? window.res(0) * p.dt : 0.0;
    for (std::size_t i = 1; i < window.size(); ++i) res += window.res(i) / (1.0 + error_frac) * p.dt;
    return std::max(0.0, p.psi_sell * (res_cum + res) - sell_cum);
  }

  UnitState state(const PlantConfig& p) const {
    return realized.size() == 0 ? UnitState::initial(p) : realized.state_after(realized.size() - 1);
  }
};

struct WindowRecord {
  std::string stage;
  int k = 0;
  int length = 0;
  SolveStatus status = SolveStatus::error;
  std::string status_text;
  double objective = 0.0;
  double mip_gap = 0.0;
  ModelStats stats;
  std::array<PacingBounds, 2> pacing{};
  bool degenerate_kernel = false;
  double audit_max = 0.0;
};

struct PipelineOptions {
  PenaltyConfig penalty;
  PacingPolicy pacing = PacingPolicy::arm;
  double da_error_frac = 0.10;
  double id_error_frac = 0.05;
  int lookahead = 8;
  std::uint64_t seed = 1;
  bool audit = true;
  /// Dump every solved model in LP format; receives (stage, k, text).
  std::function<void(const std::string&, int, const std::string&)> lp_sink;

  static PipelineOptions from_plant(const PlantConfig& p) {
    PipelineOptions o;
    o.penalty = p.penalty;
    o.da_error_frac = p.da_error_frac;
    o.id_error_frac = p.id_error_frac;
    o.lookahead = p.lookahead;
    o.seed = p.seed;
    return o;
  }
};

struct BaselineRun {
  ExogenousScenario da_forecast;
  SolvedProblem bd;
  DispatchSolution bi_realized;
  std::vector<DispatchSolution> bi_plans;  // window plan at each roll
  std::vector<PerStorage<std::vector<double>>> soc_refs;
  std::vector<WindowRecord> windows;
  double audit_max = 0.0;
};

struct RealizedCosts {
  EconomicCost bi;
  EconomicCost di;
  double shortfall_global = 0.0;  // D_s over realized net loads
  double penalty_global = 0.0;    // D_p over realized core-unit deviations
  double h2_backfill = 0.0;
  double f_global_di = 0.0;
  double curtailed_bi = 0.0;  // MWh
  double curtailed_di = 0.0;
};

struct MetricsReport {
  EffectiveCapacity capacity;
  double recovery_ramp_di = 0.0;
  double recovery_ramp_bi = 0.0;
  MatchingDegree matching_di;
  MatchingDegree matching_bi;
  PerCore<double> nri_di{};
  PerCore<double> nri_bi{};
  DeviationStats deviation;  // di realized against bi realized
  DeviationStats deviation_dd;  // dd against bd
};

struct DrRun {
  PipelineOptions options;
  SolvedProblem dd;
  DrOffer offer;
  DispatchSolution di_realized;
  std::vector<WindowRecord> windows;
  RealizedCosts costs;
  MetricsReport metrics;
  std::array<double, 2> produced_di{};
  std::array<double, 2> produced_bi{};
  double audit_max = 0.0;
};

struct FullRun {
  BaselineRun baseline;
  DrRun dr;
};

namespace detail {

inline std::string format_window_error(const char* stage, int k, const std::string& what) {
  return fmt::format("{} window k={}: {}", stage, k, what);
}

inline SolvedProblem solve_checked(const ProblemSpec& spec, SolverBackend& backend, const char* stage, int k,
                                   const PipelineOptions& opt) {
  SolvedProblem sp;
  try {
    if (opt.lp_sink) {
      std::ostringstream lp;
      sp = solve_problem(spec, backend, &lp);
      opt.lp_sink(stage, k, lp.str());
    } else {
      sp = solve_problem(spec, backend);
    }
  } catch (const Error& e) {
    fail(e.kind(), format_window_error(stage, k, e.what()));
  }
  if (!sp.solution) {
    const ErrorKind kind = sp.status == SolveStatus::infeasible ? ErrorKind::infeasible_order : ErrorKind::solver_failure;
    fail(kind, format_window_error(stage, k, fmt::format("solver status {} ({})", to_string(sp.status), sp.status_text)));
  }
  return sp;
}

inline WindowRecord make_record(const char* stage, int k, const SolvedProblem& sp) {
  WindowRecord w;
  w.stage = stage;
  w.k = k;
  w.length = static_cast<int>(sp.solution->size());
  w.status = sp.status;
  w.status_text = sp.status_text;
  w.objective = sp.objective;
  w.mip_gap = sp.mip_gap;
  w.stats = sp.stats;
  return w;
}

inline double audit_or_throw(const Auditor& auditor, const DispatchSolution& s, const std::string& what) {
  const AuditReport r = auditor.audit(s);
  if (!r.ok())
    fail(ErrorKind::decode_mismatch, fmt::format("{}: audit residual {} in {} at t={}", what, r.findings.front().residual,
                                                 r.findings.front().check, r.findings.front().period));
  return r.max_residual;
}

inline void audit_orders(const PlantConfig& p, const std::array<double, 2>& produced, const char* stage) {
  for (OrderUnit v : kOrderUnits) {
    const double o = p.order(v);
    const double got = produced[static_cast<std::size_t>(v)];
    if (std::abs(got - o) > 1e-6 * std::max(1.0, o))
      fail(ErrorKind::order_shortfall,
           fmt::format("{}: realized {} production {} t misses order {} t", stage, to_string(v), got, o));
  }
}

}  // namespace detail

/// Stages 1 and 2: bd on day-ahead forecasts and the bi rolling benchmark.
inline BaselineRun run_baseline(const PlantConfig& plant, const ExogenousScenario& truth, const HistoryLibrary* library,
                                const PipelineOptions& opt, SolverBackend& backend) {
  truth.validate();
  const int T = plant.periods;
  if (static_cast<int>(truth.size()) != T)
    fail(ErrorKind::length_mismatch, fmt::format("scenario has {} periods, config expects {}", truth.size(), T));
  if (library != nullptr && static_cast<int>(library->periods()) < T)
    fail(ErrorKind::length_mismatch, "history library is shorter than the horizon");
  const Auditor auditor(plant);
  BaselineRun run;
  run.da_forecast = simulate_forecast(truth, opt.da_error_frac, mix_seed(opt.seed, kDayAheadStream));

  ProblemSpec bd = make_bd_spec(plant, run.da_forecast);
  bd.penalty = opt.penalty;
  run.bd = detail::solve_checked(bd, backend, "bd", 0, opt);
  run.windows.push_back(detail::make_record("bd", 0, run.bd));
  run.audit_max = detail::audit_or_throw(auditor, *run.bd.solution, "bd");

  RollingLedger ledger;
  for (int k = 0; k < T; ++k) {
    const int len = std::min(opt.lookahead, T - k);
    ProblemSpec spec;
    spec.mode = ProblemMode::bi;
    spec.plant = &plant;
    spec.penalty = opt.penalty;
    spec.first_period = k;
    spec.exo = window_inputs(truth, k, len, opt.id_error_frac, opt.seed);
    spec.start = ledger.state(plant);
    spec.enforce_terminal = false;  // silo boundary only in full-horizon solves
    spec.realized_peak = ledger.peak;
    spec.sell_quota = ledger.sell_quota(plant, spec.exo, opt.id_error_frac);
    KernelWeights kw;
    if (library != nullptr) {
      for (StorageId id : library->tracked)
        if (plant.has_storage(id)) spec.tracked.push_back(id);
      spec.soc_reference = window_soc_reference(*library, truth, k, len, &kw);
    }
    const SolvedProblem sp = detail::solve_checked(spec, backend, "bi", k, opt);
    WindowRecord rec = detail::make_record("bi", k, sp);
    rec.degenerate_kernel = kw.degenerate;
    if (opt.audit) rec.audit_max = detail::audit_or_throw(auditor, *sp.solution, fmt::format("bi k={}", k));
    run.audit_max = std::max(run.audit_max, rec.audit_max);
    run.windows.push_back(rec);
    run.soc_refs.push_back(spec.soc_reference);
    run.bi_plans.push_back(*sp.solution);
    ledger.commit(*sp.solution, plant);
  }
  run.bi_realized = ledger.realized;
  run.audit_max = std::max(run.audit_max, detail::audit_or_throw(auditor, run.bi_realized, "bi realized"));
  return run;
}

inline MetricsReport compute_metrics(const PlantConfig& plant, const PenaltyConfig& penalty,
                                     const BaselineRun& base, const DrRun& dr) {
  MetricsReport m;
  const DispatchSolution& bi = base.bi_realized;
  const DispatchSolution& di = dr.di_realized;
  m.capacity = effective_capacity(dr.offer, bi.netload(), di.netload());
  m.recovery_ramp_di = recovery_ramp(di.netload());
  m.recovery_ramp_bi = recovery_ramp(bi.netload());
  m.matching_di = matching_degree(di.plant_load(), di.res);
  m.matching_bi = matching_degree(bi.plant_load(), bi.res);
  PerCore<std::vector<double>> tr_di{}, tr_bi{}, tr_dd{}, tr_bd{};
  for (CoreUnit u : kCoreUnits) {
    const auto k = static_cast<std::size_t>(u);
    m.nri_di[k] = nri(di.core(u), penalty.psi_max[k]);
    m.nri_bi[k] = nri(bi.core(u), penalty.psi_max[k]);
    tr_di[k] = di.core(u);
    tr_bi[k] = bi.core(u);
    tr_dd[k] = dr.dd.solution->core(u);
    tr_bd[k] = base.bd.solution->core(u);
  }
  m.deviation = deviation_stats(tr_di, tr_bi, penalty.psi_max);
  m.deviation_dd = deviation_stats(tr_dd, tr_bd, penalty.psi_max);
  (void)plant;
  return m;
}

/// Stages 3 to 5 against a computed baseline.
inline DrRun run_dr(const PlantConfig& plant, const ExogenousScenario& truth, const HistoryLibrary* library,
                    const BaselineRun& base, const PipelineOptions& opt, SolverBackend& backend) {
  const int T = plant.periods;
  const Auditor auditor(plant);
  DrRun run;
  run.options = opt;
  opt.penalty.validate();

  const ProblemSpec dd = make_dd_spec(plant, base.da_forecast, *base.bd.solution, opt.penalty);
  run.dd = detail::solve_checked(dd, backend, "dd", 0, opt);
  run.windows.push_back(detail::make_record("dd", 0, run.dd));
  run.audit_max = detail::audit_or_throw(auditor, *run.dd.solution, "dd");
  run.offer = DrOffer::from_netloads(base.bd.solution->netload(), run.dd.solution->netload());

  RollingLedger ledger;
  for (int k = 0; k < T; ++k) {
    const int len = std::min(opt.lookahead, T - k);
    const DispatchSolution& bi_plan = base.bi_plans.at(static_cast<std::size_t>(k));
    ProblemSpec spec;
    spec.mode = ProblemMode::di;
    spec.plant = &plant;
    spec.penalty = opt.penalty;
    spec.first_period = k;
    spec.exo = window_inputs(truth, k, len, opt.id_error_frac, opt.seed);
    spec.start = ledger.state(plant);
    spec.enforce_terminal = false;  // silo boundary only in full-horizon solves
    spec.realized_peak = ledger.peak;
    spec.sell_quota = ledger.sell_quota(plant, spec.exo, opt.id_error_frac);
    if (library != nullptr) {
      for (StorageId id : library->tracked)
        if (plant.has_storage(id)) spec.tracked.push_back(id);
      spec.soc_reference = base.soc_refs.at(static_cast<std::size_t>(k));
    }
    for (CoreUnit u : kCoreUnits) spec.core_reference[static_cast<std::size_t>(u)] = bi_plan.core(u);
    spec.netload_reference = bi_plan.netload();
    const DrOffer o = run.offer.slice(static_cast<std::size_t>(k), static_cast<std::size_t>(len));
    spec.offer_magnitude = o.magnitude;
    spec.offer_direction = o.direction;
    for (OrderUnit v : kOrderUnits) {
      try {
        spec.pacing[static_cast<std::size_t>(v)] = pacing_bounds(opt.pacing, ledger.residual(plant, v), len, T - k,
                                                                 plant.max_step_output(v) * plant.dt);
      } catch (const Error& e) {
        fail(e.kind(), detail::format_window_error("di", k, e.what()));
      }
    }
    const SolvedProblem sp = detail::solve_checked(spec, backend, "di", k, opt);
    WindowRecord rec = detail::make_record("di", k, sp);
    rec.pacing = spec.pacing;
    if (opt.audit) rec.audit_max = detail::audit_or_throw(auditor, *sp.solution, fmt::format("di k={}", k));
    run.audit_max = std::max(run.audit_max, rec.audit_max);
    run.windows.push_back(rec);
    ledger.commit(*sp.solution, plant);
  }
  run.di_realized = ledger.realized;
  run.audit_max = std::max(run.audit_max, detail::audit_or_throw(auditor, run.di_realized, "di realized"));
  run.produced_di = ledger.produced;

  for (std::size_t i = 0; i < base.bi_realized.size(); ++i) {
    run.produced_bi[0] += base.bi_realized.m_dri[i] * plant.dt;
    run.produced_bi[1] += base.bi_realized.m_eaf[i] * plant.dt;
  }
  detail::audit_orders(plant, run.produced_bi, "bi");
  detail::audit_orders(plant, run.produced_di, "di");

  RealizedCosts& c = run.costs;
  const DispatchSolution& bi = base.bi_realized;
  const DispatchSolution& di = run.di_realized;
  c.bi = economic_cost(bi, plant);
  c.di = economic_cost(di, plant);
  for (std::size_t t = 0; t < di.size(); ++t) {
    const double delivered = bi.netload(t) - di.netload(t);
    c.shortfall_global += std::max(0.0, run.offer.magnitude[t] - run.offer.direction[t] * delivered);
    for (CoreUnit u : kCoreUnits) {
      const auto k = static_cast<std::size_t>(u);
      c.penalty_global += exact_penalty(opt.penalty, u, (di.core(u)[t] - bi.core(u)[t]) / opt.penalty.psi_max[k]);
    }
    c.curtailed_bi += bi.p_curt[t] * plant.dt;
    c.curtailed_di += di.p_curt[t] * plant.dt;
  }
  if (plant.has_storage(StorageId::ht)) {
    const double e0 = plant.storage(StorageId::ht).e_initial;
    c.h2_backfill = plant.rho_h2_bf * (bi.storage_level_end(StorageId::ht, e0) - di.storage_level_end(StorageId::ht, e0));
  }
  c.f_global_di = c.di.total() + opt.penalty.lambda_s * c.shortfall_global + opt.penalty.lambda_p * c.penalty_global +
                  c.h2_backfill;
  run.metrics = compute_metrics(plant, opt.penalty, base, run);
  return run;
}

inline FullRun run_pipeline(const PlantConfig& plant, const ExogenousScenario& truth, const HistoryLibrary* library,
                            const PipelineOptions& opt, SolverBackend& backend) {
  FullRun r;
  r.baseline = run_baseline(plant, truth, library, opt, backend);
  r.dr = run_dr(plant, truth, library, r.baseline, opt, backend);
  return r;
}

}  // namespace steelflex
