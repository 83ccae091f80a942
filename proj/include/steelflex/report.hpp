#pragma once

// Run orchestration and artifact emission for the command-line front end.
// Artifacts carry no timestamps or absolute paths so identical inputs give
// byte-identical output.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "steelflex/config.hpp"
#include "steelflex/dispatch.hpp"
#include "steelflex/errors.hpp"
#include "steelflex/metrics.hpp"
#include "steelflex/rolling_engine.hpp"
#include "steelflex/scheduler.hpp"

namespace steelflex {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kArtifactSchema = 1;

// --- exit codes --------------------------------------------------------------

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitSchema = 3;
inline constexpr int kExitIo = 4;
inline constexpr int kExitSolver = 5;
inline constexpr int kExitInfeasible = 6;

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return kExitUsage;
    case ErrorKind::schema:
    case ErrorKind::configuration:
    case ErrorKind::length_mismatch:
    case ErrorKind::missing_unit:
    case ErrorKind::infeasible_bounds:
    case ErrorKind::singular_coefficient:
    case ErrorKind::empty_region: return kExitSchema;
    case ErrorKind::io: return kExitIo;
    case ErrorKind::infeasible_order:
    case ErrorKind::pacing_infeasible:
    case ErrorKind::capacity_violation:
    case ErrorKind::order_shortfall: return kExitInfeasible;
    default: return kExitSolver;
  }
}

inline std::string error_json(ErrorKind kind, const std::string& message) {
  json j;
  j["error"] = std::string(to_string(kind));
  j["message"] = message;
  j["exit_code"] = exit_code(kind);
  return j.dump();
}

// --- requests ------------------------------------------------------------------

enum class RunMode { bd, bi, dd, di, full };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::bd: return "bd";
    case RunMode::bi: return "bi";
    case RunMode::dd: return "dd";
    case RunMode::di: return "di";
    case RunMode::full: return "full";
  }
  return "?";
}

inline RunMode run_mode_from_string(const std::string& s) {
  for (RunMode m : {RunMode::bd, RunMode::bi, RunMode::dd, RunMode::di, RunMode::full})
    if (s == to_string(m)) return m;
  fail(ErrorKind::invalid_argument, "unknown mode '" + s + "' (bd|bi|dd|di|full)");
}

struct RunRequest {
  std::filesystem::path config;
  std::filesystem::path scenario;
  std::optional<std::filesystem::path> history;
  RunMode mode = RunMode::full;
  std::optional<std::string> penalty;
  PacingPolicy pacing = PacingPolicy::arm;
  std::optional<double> lambda_p;
  std::optional<int> cuts;
  std::optional<std::uint64_t> seed;
  bool dump_lp = false;
};

/// Loaded and override-applied inputs of a run.
struct RunInputs {
  json config_doc;  // effective document after command-line overrides
  PlantConfig plant;
  ExogenousScenario truth;
  std::optional<HistoryLibrary> history;
  std::string scenario_digest;
  std::string history_digest;
};

/// FNV-1a over a file's bytes, hex encoded.
inline std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

inline std::string directory_digest(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string joined;
  for (const auto& f : files) joined += f.filename().string() + ":" + file_digest(f) + ";";
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : joined) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

inline RunInputs load_inputs(const RunRequest& rq) {
  RunInputs in;
  in.config_doc = read_json_file(rq.config);
  json& pen = in.config_doc["penalty"];
  if (rq.penalty) pen["mechanism"] = *rq.penalty;
  if (rq.lambda_p) pen["lambda_p"] = *rq.lambda_p;
  if (rq.cuts) pen["tangent_cut_count"] = *rq.cuts;
  if (rq.seed) in.config_doc["forecast"]["seed"] = *rq.seed;
  in.plant = parse_plant_config(in.config_doc, rq.config.parent_path());
  in.truth = load_scenario(rq.scenario);
  in.scenario_digest = file_digest(rq.scenario);
  if (static_cast<int>(in.truth.size()) != in.plant.periods)
    fail(ErrorKind::length_mismatch,
         fmt::format("scenario has {} periods, config expects {}", in.truth.size(), in.plant.periods));
  if (rq.history) {
    in.history = load_history(*rq.history);
    in.history_digest = directory_digest(*rq.history);
  }
  return in;
}

// --- execution -----------------------------------------------------------------

struct RunOutcome {
  RunMode mode = RunMode::full;
  PipelineOptions options;
  std::optional<BaselineRun> baseline;
  std::optional<SolvedProblem> dd;  // dd-only mode
  std::optional<DrRun> dr;
  using LpDumps = std::vector<std::pair<std::string, std::string>>;  // file name, text
  std::shared_ptr<LpDumps> lp_dumps = std::make_shared<LpDumps>();
};

inline RunOutcome execute_run(const RunRequest& rq, const RunInputs& in, SolverBackend& backend) {
  RunOutcome out;
  out.mode = rq.mode;
  out.options = PipelineOptions::from_plant(in.plant);
  out.options.pacing = rq.pacing;
  if (rq.dump_lp)
    out.options.lp_sink = [dumps = out.lp_dumps](const std::string& stage, int k, const std::string& text) {
      dumps->emplace_back(fmt::format("{}_k{:02}.lp", stage, k), text);
    };
  const HistoryLibrary* lib = in.history ? &*in.history : nullptr;
  const PlantConfig& p = in.plant;

  if (rq.mode == RunMode::bd || rq.mode == RunMode::dd) {
    // Day-ahead stages only: no rolling pass.
    BaselineRun b;
    b.da_forecast = simulate_forecast(in.truth, out.options.da_error_frac, mix_seed(out.options.seed, kDayAheadStream));
    ProblemSpec bd = make_bd_spec(p, b.da_forecast);
    b.bd = detail::solve_checked(bd, backend, "bd", 0, out.options);
    b.windows.push_back(detail::make_record("bd", 0, b.bd));
    b.audit_max = detail::audit_or_throw(Auditor(p), *b.bd.solution, "bd");
    if (rq.mode == RunMode::dd) {
      const ProblemSpec dd = make_dd_spec(p, b.da_forecast, *b.bd.solution, out.options.penalty);
      out.dd = detail::solve_checked(dd, backend, "dd", 0, out.options);
      detail::audit_or_throw(Auditor(p), *out.dd->solution, "dd");
    }
    out.baseline = std::move(b);
    return out;
  }
  out.baseline = run_baseline(p, in.truth, lib, out.options, backend);
  if (rq.mode == RunMode::bi) return out;
  out.dr = run_dr(p, in.truth, lib, *out.baseline, out.options, backend);
  return out;
}

// --- writers -------------------------------------------------------------------

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  return out;
}

inline std::string num(double v) { return fmt::format("{}", v); }

}  // namespace detail

/// One row per period per phase with every dispatch field.
inline void write_trajectories(std::ostream& out, const PlantConfig& plant,
                               const std::vector<std::pair<std::string, const DispatchSolution*>>& phases) {
  std::vector<StorageId> storages;
  for (StorageId id : kAllStorages)
    if (plant.has_storage(id)) storages.push_back(id);
  out << "phase,t";
  for (const auto& [name, col] : DispatchSolution::columns()) out << ',' << name;
  for (StorageId id : storages) {
    const char* n = to_string(id);
    out << ",ch_" << n << ",dis_" << n << ",level_" << n;
  }
  out << ",p_load\n";
  for (const auto& [phase, s] : phases) {
    for (std::size_t i = 0; i < s->size(); ++i) {
      out << phase << ',' << s->t[i];
      for (const auto& [name, col] : DispatchSolution::columns()) out << ',' << detail::num((s->*col)[i]);
      for (StorageId id : storages) {
        const auto& tr = s->storage[static_cast<std::size_t>(id)];
        out << ',' << detail::num(tr.ch[i]) << ',' << detail::num(tr.dis[i]) << ',' << detail::num(tr.level[i]);
      }
      out << ',' << detail::num(s->plant_load(i)) << '\n';
    }
  }
}

inline void write_offers(std::ostream& out, const DrOffer& offer, const std::vector<int>& t,
                         const EffectiveCapacity* cap) {
  out << "t,p_mag,direction,delivered,b_eff\n";
  for (std::size_t i = 0; i < offer.size(); ++i) {
    out << t[i] << ',' << detail::num(offer.magnitude[i]) << ',' << detail::num(offer.direction[i]) << ',';
    if (cap != nullptr) out << detail::num(cap->delivered[i]) << ',' << detail::num(cap->per_period[i]);
    else out << ',';
    out << '\n';
  }
}

inline void write_deviations(std::ostream& out, const DeviationStats& d, const std::vector<int>& t) {
  out << "t";
  for (CoreUnit u : kCoreUnits) out << ',' << to_string(u);
  out << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << t[i];
    for (CoreUnit u : kCoreUnits) out << ',' << detail::num(d.delta[static_cast<std::size_t>(u)][i]);
    out << '\n';
  }
}

inline json cost_json(const EconomicCost& c) {
  return json{{"grid", c.grid}, {"op", c.op}, {"revenue", c.revenue}, {"peak", c.peak}, {"total", c.total()}};
}

inline json nri_json(const PerCore<double>& v) {
  json j;
  for (CoreUnit u : kCoreUnits) j[to_string(u)] = v[static_cast<std::size_t>(u)];
  return j;
}

inline json deviation_json(const DeviationStats& d) {
  json j;
  j["deviation_rate"] = d.rate;
  j["max_abs"] = d.max_abs;
  for (CoreUnit u : kCoreUnits) {
    j["max_abs_unit"][to_string(u)] = d.max_abs_unit[static_cast<std::size_t>(u)];
    j["distribution"][to_string(u)] = d.delta[static_cast<std::size_t>(u)];
  }
  return j;
}

inline json metrics_json(const RunOutcome& o, const PlantConfig& p) {
  json j;
  j["schema"] = kArtifactSchema;
  j["mode"] = to_string(o.mode);
  const PenaltyConfig& pen = o.options.penalty;
  auto single = [&](const DispatchSolution& s) {
    json m;
    const MatchingDegree md = matching_degree(s.plant_load(), s.res);
    m["matching_degree"] = md.value;
    m["matching_degenerate"] = md.degenerate;
    m["recovery_ramp"] = recovery_ramp(s.netload());
    PerCore<double> n{};
    for (CoreUnit u : kCoreUnits) n[static_cast<std::size_t>(u)] = nri(s.core(u), pen.psi_max[static_cast<std::size_t>(u)]);
    m["nri"] = nri_json(n);
    m["cost_breakdown"] = cost_json(economic_cost(s, p));
    return m;
  };
  if (o.dr) {
    const MetricsReport& m = o.dr->metrics;
    const RealizedCosts& c = o.dr->costs;
    j["avg_effective_capacity"] = m.capacity.average;
    j["offered_periods"] = m.capacity.offered_periods;
    j["empty_offer"] = m.capacity.empty_offer;
    j["recovery_ramp"] = m.recovery_ramp_di;
    j["matching_degree"] = m.matching_di.value;
    j["matching_degenerate"] = m.matching_di.degenerate;
    j["nri"] = nri_json(m.nri_di);
    j["deviation_rate"] = m.deviation.rate;
    j["deviation"] = deviation_json(m.deviation);
    j["deviation_dd"] = deviation_json(m.deviation_dd);
    j["cost_breakdown"] = {{"economic_di", cost_json(c.di)},
                           {"shortfall_penalty", pen.lambda_s * c.shortfall_global},
                           {"process_penalty", pen.lambda_p * c.penalty_global},
                           {"h2_backfill", c.h2_backfill},
                           {"f_global_di", c.f_global_di}};
    j["baseline"] = {{"matching_degree", m.matching_bi.value},
                     {"recovery_ramp", m.recovery_ramp_bi},
                     {"nri", nri_json(m.nri_bi)},
                     {"cost_breakdown", cost_json(c.bi)}};
    return j;
  }
  if (o.dd) {
    j["dd"] = single(*o.dd->solution);
    PerCore<std::vector<double>> tr{}, base{};
    for (CoreUnit u : kCoreUnits) {
      tr[static_cast<std::size_t>(u)] = o.dd->solution->core(u);
      base[static_cast<std::size_t>(u)] = o.baseline->bd.solution->core(u);
    }
    const DeviationStats d = deviation_stats(tr, base, pen.psi_max);
    j["deviation_rate"] = d.rate;
    j["deviation"] = deviation_json(d);
  }
  if (o.baseline) {
    j["bd"] = single(*o.baseline->bd.solution);
    if (o.mode == RunMode::bi) j["bi"] = single(o.baseline->bi_realized);
  }
  return j;
}

inline json ledger_json(const RunOutcome& o, const PlantConfig& p) {
  json j;
  j["schema"] = kArtifactSchema;
  auto phase = [&](const DispatchSolution& s) {
    json ph;
    ph["cost"] = cost_json(economic_cost(s, p));
    double sdri = 0.0, seaf = 0.0, sell = 0.0, res = 0.0, curt = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      sdri += s.m_dri[i] * p.dt;
      seaf += s.m_eaf[i] * p.dt;
      sell += s.p_sell[i] * p.dt;
      res += s.res[i] * p.dt;
      curt += s.p_curt[i] * p.dt;
      peak = std::max(peak, s.p_buy[i]);
    }
    ph["production"] = {{"SF", sdri}, {"EAF", seaf}};
    ph["sell_cum_mwh"] = sell;
    ph["res_cum_mwh"] = res;
    ph["curtailed_mwh"] = curt;
    ph["peak_buy_mw"] = peak;
    if (p.has_storage(StorageId::ht)) ph["ht_end"] = s.storage_level_end(StorageId::ht, 0.0);
    return ph;
  };
  j["orders"] = {{"SF", p.order(OrderUnit::sf)}, {"EAF", p.order(OrderUnit::eaf)}};
  j["sell_quota_fraction"] = p.psi_sell;
  if (o.baseline) {
    j["phases"]["bd"] = phase(*o.baseline->bd.solution);
    if (o.mode != RunMode::bd && o.mode != RunMode::dd) j["phases"]["bi"] = phase(o.baseline->bi_realized);
  }
  if (o.dd) j["phases"]["dd"] = phase(*o.dd->solution);
  if (o.dr) {
    j["phases"]["dd"] = phase(*o.dr->dd.solution);
    j["phases"]["di"] = phase(o.dr->di_realized);
    const RealizedCosts& c = o.dr->costs;
    j["global"] = {{"economic_bi", c.bi.total()},      {"economic_di", c.di.total()},
                   {"shortfall_global", c.shortfall_global}, {"penalty_global", c.penalty_global},
                   {"h2_backfill", c.h2_backfill},      {"f_global_di", c.f_global_di},
                   {"cost_reduction", c.bi.total() != 0.0 ? 1.0 - c.f_global_di / c.bi.total() : 0.0}};
  }
  return j;
}

inline json window_json(const WindowRecord& w) {
  json j{{"stage", w.stage},
         {"k", w.k},
         {"length", w.length},
         {"status", to_string(w.status)},
         {"objective", w.objective},
         {"mip_gap", w.mip_gap},
         {"vars", w.stats.vars},
         {"rows", w.stats.rows},
         {"binaries", w.stats.binaries},
         {"audit_max", w.audit_max}};
  if (w.stage == "di")
    for (OrderUnit v : kOrderUnits)
      j["pacing"][to_string(v)] = {w.pacing[static_cast<std::size_t>(v)].lower,
                                   w.pacing[static_cast<std::size_t>(v)].upper};
  if (w.degenerate_kernel) j["degenerate_kernel"] = true;
  return j;
}

inline json manifest_json(const RunRequest& rq, const RunInputs& in, const RunOutcome& o, const std::string& solver) {
  json j;
  j["schema"] = kArtifactSchema;
  j["steelflex_version"] = kVersion;
  j["solver"] = solver;
  j["mode"] = to_string(rq.mode);
  j["pacing"] = to_string(rq.pacing);
  j["inputs"] = {{"config", rq.config.generic_string()},
                 {"scenario", rq.scenario.generic_string()},
                 {"scenario_digest", in.scenario_digest}};
  if (rq.history) {
    j["inputs"]["history"] = rq.history->generic_string();
    j["inputs"]["history_digest"] = in.history_digest;
  }
  j["effective_config"] = in.config_doc;
  j["seeds"] = {{"forecast", o.options.seed},
                {"day_ahead_stream", mix_seed(o.options.seed, kDayAheadStream)},
                {"solver_random_seed", 0}};
  j["forecast"] = {{"da_error_frac", o.options.da_error_frac},
                   {"id_error_frac", o.options.id_error_frac},
                   {"lookahead", o.options.lookahead}};
  json windows = json::array();
  auto add = [&](const std::vector<WindowRecord>& ws) {
    for (const auto& w : ws) windows.push_back(window_json(w));
  };
  if (o.baseline) add(o.baseline->windows);
  if (o.dd) {
    WindowRecord w = detail::make_record("dd", 0, *o.dd);
    windows.push_back(window_json(w));
  }
  if (o.dr) add(o.dr->windows);
  j["windows"] = windows;
  return j;
}

/// Writes every artifact of a run into dir.
inline void write_artifacts(const std::filesystem::path& dir, const RunRequest& rq, const RunInputs& in,
                            const RunOutcome& o, const std::string& solver) {
  std::filesystem::create_directories(dir);
  const PlantConfig& p = in.plant;
  std::vector<std::pair<std::string, const DispatchSolution*>> phases;
  if (o.baseline) {
    phases.emplace_back("bd", &*o.baseline->bd.solution);
    if (o.mode != RunMode::bd && o.mode != RunMode::dd) phases.emplace_back("bi", &o.baseline->bi_realized);
  }
  if (o.dd) phases.emplace_back("dd", &*o.dd->solution);
  if (o.dr) {
    phases.emplace_back("dd", &*o.dr->dd.solution);
    phases.emplace_back("di", &o.dr->di_realized);
  }
  {
    auto out = detail::open_out(dir / "trajectories.csv");
    write_trajectories(out, p, phases);
  }
  if (o.dr) {
    auto out = detail::open_out(dir / "offers.csv");
    write_offers(out, o.dr->offer, o.dr->di_realized.t, &o.dr->metrics.capacity);
    auto dev = detail::open_out(dir / "deviations.csv");
    write_deviations(dev, o.dr->metrics.deviation, o.dr->di_realized.t);
  } else if (o.dd) {
    const DrOffer offer = DrOffer::from_netloads(o.baseline->bd.solution->netload(), o.dd->solution->netload());
    auto out = detail::open_out(dir / "offers.csv");
    write_offers(out, offer, o.dd->solution->t, nullptr);
  }
  detail::open_out(dir / "metrics.json") << metrics_json(o, p).dump(2) << '\n';
  detail::open_out(dir / "ledger.json") << ledger_json(o, p).dump(2) << '\n';
  detail::open_out(dir / "run_manifest.json") << manifest_json(rq, in, o, solver).dump(2) << '\n';
  if (!o.lp_dumps->empty()) {
    std::filesystem::create_directories(dir / "lp");
    for (const auto& [name, text] : *o.lp_dumps) detail::open_out(dir / "lp" / name) << text;
  }
}

// --- input validation -------------------------------------------------------------

struct ValidationFinding {
  std::string category;  // schema | io | grid | capacity | history
  std::string message;
};

using ValidationReport = std::vector<ValidationFinding>;

inline json to_json(const ValidationReport& r) {
  json j = json::array();
  for (const auto& f : r) j.push_back({{"category", f.category}, {"message", f.message}});
  return j;
}

/// Full schema and cross-consistency check. Never throws on bad inputs.
inline ValidationReport validate_inputs(const std::filesystem::path& config, const std::filesystem::path& scenario,
                                        const std::optional<std::filesystem::path>& history) {
  ValidationReport r;
  auto category = [](ErrorKind k) {
    if (k == ErrorKind::io) return std::string("io");
    if (k == ErrorKind::length_mismatch) return std::string("grid");
    return std::string("schema");
  };
  std::optional<PlantConfig> plant;
  std::optional<ExogenousScenario> exo;
  std::optional<HistoryLibrary> lib;
  try {
    plant = load_plant_config(config);
  } catch (const Error& e) {
    r.push_back({category(e.kind()), e.what()});
  } catch (const std::exception& e) {
    r.push_back({"schema", std::string(config.string()) + ": " + e.what()});
  }
  try {
    exo = load_scenario(scenario);
  } catch (const Error& e) {
    r.push_back({category(e.kind()), e.what()});
  } catch (const std::exception& e) {
    r.push_back({"schema", std::string(scenario.string()) + ": " + e.what()});
  }
  if (history) {
    try {
      lib = load_history(*history);
    } catch (const Error& e) {
      r.push_back({e.kind() == ErrorKind::io ? "io" : "history", e.what()});
    } catch (const std::exception& e) {
      r.push_back({"history", e.what()});
    }
  }
  if (plant) {
    const PlantConfig& p = *plant;
    if (p.lookahead > p.periods)
      r.push_back({"grid", fmt::format("lookahead {} exceeds horizon {}", p.lookahead, p.periods)});
    for (OrderUnit v : kOrderUnits) {
      const double cap = p.periods * p.max_step_output(v) * p.dt;
      if (p.order(v) > cap * (1.0 + 1e-12))
        r.push_back({"capacity", fmt::format("{} order {} t exceeds full-horizon capacity {} t", to_string(v),
                                             p.order(v), cap)});
    }
  }
  if (plant && exo && static_cast<int>(exo->size()) != plant->periods)
    r.push_back({"grid", fmt::format("scenario has {} periods, config expects {}", exo->size(), plant->periods)});
  if (lib && plant) {
    if (static_cast<int>(lib->periods()) < plant->periods)
      r.push_back({"grid", fmt::format("history covers {} periods, horizon is {}", lib->periods(), plant->periods)});
    for (StorageId id : lib->tracked)
      if (!plant->has_storage(id))
        r.push_back({"history", fmt::format("tracked storage {} is not configured", to_string(id))});
  }
  if (lib && exo && lib->periods() == exo->size())
    for (const auto& sc : lib->scenarios)
      if (sc.features.t != exo->t) {
        r.push_back({"grid", fmt::format("history scenario {} uses a different time index", sc.name)});
        break;
      }
  return r;
}

}  // namespace steelflex
