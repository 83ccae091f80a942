// steelflex: command-line front end for DR potential runs.
//
//   steelflex run      --config C --scenario S [--history H] --out DIR ...
//   steelflex sweep    --config C --scenario S --lambda-p 0,50,200 --jobs 2 --out DIR
//   steelflex compare  DIR_A DIR_B
//   steelflex validate --config C --scenario S [--history H]
//   steelflex history  --config C --scenario S --out DIR [--count N --spread F --seed N]
//
// Exit codes: 0 ok, 2 usage, 3 schema, 4 io, 5 solver, 6 order/infeasible.
// Failures print one JSON object on stderr.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "steelflex/highs_backend.hpp"
#include "steelflex/report.hpp"

namespace fs = std::filesystem;
using namespace steelflex;

namespace {

struct CommonFlags {
  std::string config;
  std::string scenario;
  std::string history;
  std::string penalty;
  std::string pacing = "arm";
  std::optional<double> lambda_p;
  std::optional<int> cuts;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_inputs(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "plant configuration JSON")->required();
  cmd->add_option("--scenario", f.scenario, "scenario CSV")->required();
  cmd->add_option("--history", f.history, "history library directory");
}

void add_run_flags(CLI::App* cmd, CommonFlags& f) {
  add_inputs(cmd, f);
  cmd->add_option("--penalty", f.penalty, "penalty mechanism")->check(CLI::IsMember({"m1", "m2", "m3"}));
  cmd->add_option("--pacing", f.pacing, "order pacing rule")->check(CLI::IsMember({"arm", "fcfb"}));
  cmd->add_option("--cuts", f.cuts, "tangent cuts for m3")->check(CLI::Range(2, 4096));
  cmd->add_option("--seed", f.seed, "forecast seed");
  cmd->add_option("--out", f.out, "output directory")->required();
}

RunRequest make_request(const CommonFlags& f, RunMode mode) {
  RunRequest rq;
  rq.config = f.config;
  rq.scenario = f.scenario;
  if (!f.history.empty()) rq.history = fs::path(f.history);
  rq.mode = mode;
  if (!f.penalty.empty()) rq.penalty = f.penalty;
  rq.pacing = pacing_from_string(f.pacing);
  rq.lambda_p = f.lambda_p;
  rq.cuts = f.cuts;
  rq.seed = f.seed;
  return rq;
}

json run_summary(const RunOutcome& o) {
  json j;
  j["mode"] = to_string(o.mode);
  if (o.baseline) j["bd_objective"] = o.baseline->bd.objective;
  if (o.dr) {
    const RealizedCosts& c = o.dr->costs;
    j["economic_bi"] = c.bi.total();
    j["f_global_di"] = c.f_global_di;
    j["curtailed_bi_mwh"] = c.curtailed_bi;
    j["curtailed_di_mwh"] = c.curtailed_di;
    j["matching_bi"] = o.dr->metrics.matching_bi.value;
    j["matching_di"] = o.dr->metrics.matching_di.value;
    j["deviation_rate"] = o.dr->metrics.deviation.rate;
    j["max_abs_deviation"] = o.dr->metrics.deviation.max_abs;
    j["avg_effective_capacity"] = o.dr->metrics.capacity.average;
  }
  return j;
}

int cmd_run(const CommonFlags& f, const std::string& mode, bool dump_lp) {
  RunRequest rq = make_request(f, run_mode_from_string(mode));
  rq.dump_lp = dump_lp;
  const RunInputs in = load_inputs(rq);
  HighsBackend backend;
  const RunOutcome o = execute_run(rq, in, backend);
  write_artifacts(f.out, rq, in, o, backend.name());
  std::cout << run_summary(o).dump(2) << '\n';
  return kExitOk;
}

struct SweepPoint {
  std::string label;
  RunRequest request;
};

int cmd_sweep(const CommonFlags& f, const std::vector<double>& lambdas, const std::vector<std::string>& pacings,
              const std::vector<std::string>& penalties, int jobs) {
  std::vector<SweepPoint> points;
  const std::vector<std::string> pac = pacings.empty() ? std::vector<std::string>{f.pacing} : pacings;
  const std::vector<std::string> pen =
      penalties.empty() ? std::vector<std::string>{f.penalty.empty() ? "" : f.penalty} : penalties;
  std::vector<std::optional<double>> lam;
  for (double l : lambdas) lam.emplace_back(l);
  if (lam.empty()) lam.emplace_back(std::nullopt);
  for (const auto& l : lam)
    for (const auto& pc : pac)
      for (const auto& pn : pen) {
        CommonFlags g = f;
        g.lambda_p = l;
        g.pacing = pc;
        g.penalty = pn;
        SweepPoint sp;
        sp.request = make_request(g, RunMode::full);
        sp.label = fmt::format("lambda_p={}_pacing={}_penalty={}", l ? fmt::format("{}", *l) : "config", pc,
                               pn.empty() ? "config" : pn);
        points.push_back(std::move(sp));
      }
  // Inputs are validated once up front so a bad flag fails before any solve.
  for (const auto& p : points) (void)load_inputs(p.request);

  std::vector<json> results(points.size());
  std::vector<std::optional<Error>> errors(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    HighsBackend backend;
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        const RunInputs in = load_inputs(points[i].request);
        const RunOutcome o = execute_run(points[i].request, in, backend);
        write_artifacts(fs::path(f.out) / points[i].label, points[i].request, in, o, backend.name());
        results[i] = run_summary(o);
        results[i]["label"] = points[i].label;
      } catch (const Error& e) {
        errors[i] = e;
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) throw *e;
  json summary = json::array();
  for (const auto& r : results) summary.push_back(r);
  fs::create_directories(f.out);
  std::ofstream(fs::path(f.out) / "sweep.json") << summary.dump(2) << '\n';
  std::cout << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_compare(const std::string& a, const std::string& b) {
  const json la = read_json_file(fs::path(a) / "ledger.json");
  const json lb = read_json_file(fs::path(b) / "ledger.json");
  auto total = [](const json& l) -> double {
    if (l.contains("global")) return l["global"]["f_global_di"].get<double>();
    if (l["phases"].contains("bi")) return l["phases"]["bi"]["cost"]["total"].get<double>();
    return l["phases"]["bd"]["cost"]["total"].get<double>();
  };
  auto curtailed = [](const json& l) -> double {
    for (const char* ph : {"di", "bi", "bd"})
      if (l["phases"].contains(ph)) return l["phases"][ph]["curtailed_mwh"].get<double>();
    return 0.0;
  };
  const double ca = total(la), cb = total(lb);
  json j{{"a", a},
         {"b", b},
         {"cost_a", ca},
         {"cost_b", cb},
         {"cost_delta", cb - ca},
         {"cost_delta_rel", ca != 0.0 ? (cb - ca) / std::abs(ca) : 0.0},
         {"curtailed_a_mwh", curtailed(la)},
         {"curtailed_b_mwh", curtailed(lb)}};
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_validate(const CommonFlags& f) {
  std::optional<fs::path> h;
  if (!f.history.empty()) h = fs::path(f.history);
  const ValidationReport r = validate_inputs(f.config, f.scenario, h);
  std::cout << json{{"findings", to_json(r)}, {"ok", r.empty()}}.dump(2) << '\n';
  return r.empty() ? kExitOk : kExitSchema;
}

int cmd_history(const CommonFlags& f, int count, double spread, std::uint64_t seed) {
  const PlantConfig plant = load_plant_config(f.config);
  const ExogenousScenario truth = load_scenario(f.scenario);
  HighsBackend backend;
  const HistoryLibrary lib = build_history(plant, truth, count, spread, seed, backend);
  save_history(lib, f.out);
  std::cout << json{{"scenarios", lib.scenarios.size()}, {"out", f.out}}.dump() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"steelflex: process-aware demand-response evaluation for H2-DRI-EAF-MeOH plants"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonFlags run_f;
  std::string mode = "full";
  bool dump_lp = false;
  auto* run = app.add_subcommand("run", "solve one pipeline and write its artifacts");
  add_run_flags(run, run_f);
  run->add_option("--lambda-p", run_f.lambda_p, "process penalty weight");
  run->add_option("--mode", mode, "stage selection")->check(CLI::IsMember({"bd", "bi", "dd", "di", "full"}));
  run->add_flag("--dump-lp", dump_lp, "write every window model to OUT/lp");

  CommonFlags sweep_f;
  std::vector<double> lambdas;
  std::vector<std::string> pacings, penalties;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "run full pipelines over a parameter grid");
  add_run_flags(sweep, sweep_f);
  sweep->add_option("--lambda-p", lambdas, "comma-separated process penalty weights")->delimiter(',');
  sweep->add_option("--pacings", pacings, "comma-separated pacing rules")
      ->delimiter(',')
      ->check(CLI::IsMember({"arm", "fcfb"}));
  sweep->add_option("--penalties", penalties, "comma-separated penalty mechanisms")
      ->delimiter(',')
      ->check(CLI::IsMember({"m1", "m2", "m3"}));
  sweep->add_option("--jobs", jobs, "concurrent runs")->check(CLI::Range(1, 256));

  std::string dir_a, dir_b;
  auto* compare = app.add_subcommand("compare", "report the cost delta between two run directories");
  compare->add_option("a", dir_a, "first run directory")->required();
  compare->add_option("b", dir_b, "second run directory")->required();

  CommonFlags val_f;
  auto* validate = app.add_subcommand("validate", "schema and cross-consistency report");
  validate->add_option("--config", val_f.config, "plant configuration JSON")->required();
  validate->add_option("--scenario", val_f.scenario, "scenario CSV")->required();
  validate->add_option("--history", val_f.history, "history library directory");

  CommonFlags hist_f;
  int count = 8;
  double spread = 0.15;
  std::uint64_t hist_seed = 11;
  auto* history = app.add_subcommand("history", "generate a synthetic history library");
  add_inputs(history, hist_f);
  history->add_option("--out", hist_f.out, "output directory")->required();
  history->add_option("--count", count, "number of scenarios")->check(CLI::Range(1, 1000));
  history->add_option("--spread", spread, "multiplicative perturbation")->check(CLI::Range(0.0, 1.0));
  history->add_option("--seed", hist_seed, "perturbation seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "usage"}, {"message", e.what()}, {"exit_code", kExitUsage}}.dump() << '\n';
    return kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_f, mode, dump_lp);
    if (*sweep) return cmd_sweep(sweep_f, lambdas, pacings, penalties, jobs);
    if (*compare) return cmd_compare(dir_a, dir_b);
    if (*validate) return cmd_validate(val_f);
    if (*history) return cmd_history(hist_f, count, spread, hist_seed);
  } catch (const Error& e) {
    std::cerr << error_json(e.kind(), e.what()) << '\n';
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    std::cerr << error_json(ErrorKind::schema, e.what()) << '\n';
    return kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << error_json(ErrorKind::solver_failure, e.what()) << '\n';
    return kExitSolver;
  }
  return kExitUsage;
}
