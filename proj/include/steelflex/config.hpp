#pragma once

// Plant configuration, penalty configuration and exogenous scenarios, with
// their JSON / CSV loaders. Units: MW and MWh for electricity and heat,
// tonnes for materials, USD for money, hours for time.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "steelflex/eaf_region.hpp"
#include "steelflex/errors.hpp"
#include "steelflex/process_units.hpp"

namespace steelflex {

using json = nlohmann::json;

enum class CoreUnit : std::size_t { ae = 0, sf = 1, eaf = 2, msr = 3 };
inline constexpr std::size_t kCoreUnitCount = 4;
inline constexpr std::array<CoreUnit, kCoreUnitCount> kCoreUnits = {CoreUnit::ae, CoreUnit::sf, CoreUnit::eaf,
                                                                  CoreUnit::msr};

inline const char* to_string(CoreUnit u) {
  switch (u) {
    case CoreUnit::ae: return "AE";
    case CoreUnit::sf: return "SF";
    case CoreUnit::eaf: return "EAF";
    case CoreUnit::msr: return "MSR";
  }
  return "?";
}

inline CoreUnit core_unit_from_string(const std::string& s) {
  for (CoreUnit u : kCoreUnits)
    if (s == to_string(u)) return u;
  fail(ErrorKind::schema, "unknown core unit '" + s + "'");
}

/// Units carrying a production order.
enum class OrderUnit : std::size_t { sf = 0, eaf = 1 };
inline constexpr std::array<OrderUnit, 2> kOrderUnits = {OrderUnit::sf, OrderUnit::eaf};
inline const char* to_string(OrderUnit v) { return v == OrderUnit::sf ? "SF" : "EAF"; }

template <typename T>
using PerCore = std::array<T, kCoreUnitCount>;
template <typename T>
using PerStorage = std::array<T, kStorageCount>;

// --- penalties ---------------------------------------------------------------

enum class PenaltyMechanism { m1, m2, m3 };

inline const char* to_string(PenaltyMechanism m) {
  switch (m) {
    case PenaltyMechanism::m1: return "m1";
    case PenaltyMechanism::m2: return "m2";
    case PenaltyMechanism::m3: return "m3";
  }
  return "?";
}

inline PenaltyMechanism penalty_from_string(const std::string& s) {
  if (s == "m1" || s == "M1") return PenaltyMechanism::m1;
  if (s == "m2" || s == "M2") return PenaltyMechanism::m2;
  if (s == "m3" || s == "M3") return PenaltyMechanism::m3;
  fail(ErrorKind::invalid_argument, "unknown penalty mechanism '" + s + "'");
}

/// Where the supporting lines of the exponential penalty touch the curve.
/// graded: y_j = eps + (1 - eps) (j / (n - 1))^2, dense near the deadband edge.
/// uniform: y_j = eps + (1 - eps) j / (n - 1).
enum class CutSpacing { graded, uniform };

/// Per-side (upward, downward) parameter pair.
struct SidePair {
  double up = 0.0;
  double down = 0.0;
  double operator[](int side) const { return side == 0 ? up : down; }
};

struct PenaltyConfig {
  PenaltyMechanism mechanism = PenaltyMechanism::m3;
  double lambda_p = 50.0;
  double lambda_rf = 0.0;
  double lambda_s = 0.0;
  PerCore<double> omega{1.0, 1.0, 1.0, 1.0};
  PerCore<SidePair> alpha{};
  PerCore<SidePair> beta{};
  PerCore<SidePair> epsilon{};
  PerCore<double> psi_max{1.0, 1.0, 1.0, 1.0};
  int tangent_cut_count = 16;
  CutSpacing cut_spacing = CutSpacing::graded;

  void validate() const {
    for (double w : {lambda_p, lambda_rf, lambda_s})
      if (!(w >= 0.0)) fail(ErrorKind::schema, "penalty weights must be >= 0");
    for (std::size_t u = 0; u < kCoreUnitCount; ++u) {
      const std::string name = to_string(kCoreUnits[u]);
      if (!(omega[u] >= 0.0)) fail(ErrorKind::schema, name + ": omega must be >= 0");
      if (!(psi_max[u] > 0.0)) fail(ErrorKind::schema, name + ": psi_max must be > 0");
      if (!(epsilon[u].up >= 0.0 && epsilon[u].down >= 0.0))
        fail(ErrorKind::schema, name + ": epsilon must be >= 0");
      if (!(alpha[u].up >= 0.0 && alpha[u].down >= 0.0)) fail(ErrorKind::schema, name + ": alpha must be >= 0");
      if (mechanism == PenaltyMechanism::m3 && !(beta[u].up > 0.0 && beta[u].down > 0.0))
        fail(ErrorKind::schema, name + ": beta must be > 0 for m3");
    }
    if (mechanism == PenaltyMechanism::m3 && tangent_cut_count < 2)
      fail(ErrorKind::configuration, "m3 requires tangent_cut_count >= 2");
  }
};

// --- plant -------------------------------------------------------------------

struct PlantConfig {
  std::string label;
  int periods = 24;
  double dt = 1.0;
  int lookahead = 8;

  // EAF. The polytope is expressed per tonne of steel (b_eq[1] = 1) and scaled
  // by each period's steel output.
  EafPolytope eaf_polytope = EafPolytope::calibrated();
  std::array<EafMaterialSpec, kMaterialCount> eaf_materials{};
  CarbonBalanceCoefficients carbon;
  double eaf_steel_min = 0.0;
  double eaf_steel_max = 0.0;

  LagUnitParams sf;
  double psi_h_dri = 0.0;  // t H2 per t DRI
  LagUnitParams msr;
  MsrStoichiometry msr_stoich;
  HehCoefficients heh;

  double ae_p_min = 0.0;
  double ae_p_max = 0.0;
  double psi_h2_per_mwh = 0.0;  // electrolyzer yield, t H2 per MWh

  double psi_er_comp = 0.0;
  double psi_ec_comp = 0.0;
  double psi_e_exp = 0.0;
  double leh_efficiency = 1.0;
  double leh_p_max = 0.0;
  double psi_ccs = 0.0;

  double grid_capacity = 0.0;  // buy/sell big-M
  double psi_sell = 0.0;

  PerStorage<std::optional<StorageParams>> storages{};

  double rho_curt = 0.0;
  double rho_peak = 0.0;
  double rho_h2_bf = 0.0;
  double rho_thl = 0.0;
  double rho_hl = 0.0;

  // Operating costs: per MWh of electric unit input, per tonne of material flow.
  double cost_ae = 0.0, cost_eaf = 0.0, cost_heh = 0.0, cost_leh = 0.0, cost_ccs = 0.0, cost_comp = 0.0;
  double cost_dri = 0.0, cost_steel = 0.0, cost_methanol = 0.0, cost_scrap = 0.0, cost_carbon = 0.0,
         cost_lime = 0.0;

  std::array<double, 2> orders{};  // SF, EAF
  PerCore<double> baseline{};

  double sf_qss_initial = 0.0;
  double msr_qss_initial = 0.0;
  double pending_hot_initial = 0.0;
  double cdris_terminal_fraction = 0.5;

  PenaltyConfig penalty;
  double da_error_frac = 0.10;
  double id_error_frac = 0.05;
  std::uint64_t seed = 1;
  double mip_rel_gap = 1e-4;
  double time_limit_s = 120.0;

  bool has_storage(StorageId id) const { return storages[static_cast<std::size_t>(id)].has_value(); }
  const StorageParams& storage(StorageId id) const {
    const auto& s = storages[static_cast<std::size_t>(id)];
    if (!s) fail(ErrorKind::configuration, fmt::format("storage {} is not configured", to_string(id)));
    return *s;
  }

  double order(OrderUnit v) const { return orders[static_cast<std::size_t>(v)]; }

  /// Production capacity per step for an order unit.
  double max_step_output(OrderUnit v) const { return v == OrderUnit::sf ? sf.qss_max() : eaf_steel_max; }

  double cdris_capacity() const { return has_storage(StorageId::cdris) ? storage(StorageId::cdris).e_max : 0.0; }

  void validate() const {
    if (periods < 1) fail(ErrorKind::schema, "horizon.periods must be >= 1");
    if (!(dt > 0.0)) fail(ErrorKind::schema, "horizon.dt_hours must be > 0");
    if (lookahead < 1) fail(ErrorKind::schema, "horizon.lookahead must be >= 1");
    eaf_polytope.validate();
    for (const auto& m : eaf_materials) m.validate();
    carbon.validate();
    sf.validate("sf");
    msr.validate("msr");
    msr_stoich.validate();
    heh.validate();
    if (!(0.0 <= eaf_steel_min && eaf_steel_min <= eaf_steel_max))
      fail(ErrorKind::schema, "eaf: need 0 <= steel_min_t <= steel_max_t");
    if (!(0.0 <= ae_p_min && ae_p_min <= ae_p_max)) fail(ErrorKind::schema, "ae: need 0 <= p_min <= p_max");
    if (!(grid_capacity > 0.0)) fail(ErrorKind::schema, "grid.capacity_mw must be > 0");
    if (!(psi_sell >= 0.0)) fail(ErrorKind::schema, "grid.psi_sell must be >= 0");
    if (!(leh_efficiency > 0.0)) fail(ErrorKind::schema, "leh.efficiency must be > 0");
    for (std::size_t i = 0; i < kStorageCount; ++i)
      if (storages[i]) storages[i]->validate();
    for (double o : orders)
      if (!(o >= 0.0)) fail(ErrorKind::schema, "orders must be >= 0");
    penalty.validate();
    if (!(da_error_frac >= 0.0 && id_error_frac >= 0.0)) fail(ErrorKind::schema, "forecast errors must be >= 0");
  }
};

// --- JSON helpers ----------------------------------------------------------

namespace detail {

inline const json& at(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorKind::schema, fmt::format("missing required field '{}{}'", path, key));
  return j.at(key);
}

inline double num(const json& j, const std::string& key, const std::string& path) {
  const json& v = at(j, key, path);
  if (!v.is_number()) fail(ErrorKind::schema, fmt::format("field '{}{}' must be a number", path, key));
  return v.get<double>();
}

inline double num_or(const json& j, const std::string& key, double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j.at(key).is_number()) fail(ErrorKind::schema, fmt::format("field '{}' must be a number", key));
  return j.at(key).get<double>();
}

inline SidePair side_pair(const json& j, const std::string& key, const std::string& path) {
  const json& v = at(j, key, path);
  if (v.is_number()) return SidePair{v.get<double>(), v.get<double>()};
  return SidePair{num(v, "up", path + key + "."), num(v, "down", path + key + ".")};
}

inline LagUnitParams lag_unit(const json& j, LagUnitId id, const std::string& path) {
  LagUnitParams p;
  p.unit = id;
  p.transition_time_constant = num(j, "transition_time_constant_h", path);
  p.qss_min_frac = num(j, "qss_min_frac", path);
  p.qss_max_frac = num(j, "qss_max_frac", path);
  p.ramp_up_frac = num(j, "ramp_up_frac", path);
  p.ramp_down_frac = num(j, "ramp_down_frac", path);
  p.max_discharge = num(j, "max_discharge_t", path);
  return p;
}

}  // namespace detail

inline PenaltyConfig parse_penalty(const json& j) {
  using namespace detail;
  PenaltyConfig p;
  p.mechanism = penalty_from_string(at(j, "mechanism", "penalty.").get<std::string>());
  p.lambda_p = num(j, "lambda_p", "penalty.");
  p.lambda_rf = num(j, "lambda_rf", "penalty.");
  p.lambda_s = num(j, "lambda_s", "penalty.");
  p.tangent_cut_count = static_cast<int>(num_or(j, "tangent_cut_count", 16));
  if (j.contains("cut_spacing")) {
    const auto s = j.at("cut_spacing").get<std::string>();
    if (s == "graded") p.cut_spacing = CutSpacing::graded;
    else if (s == "uniform") p.cut_spacing = CutSpacing::uniform;
    else fail(ErrorKind::schema, "penalty.cut_spacing must be 'graded' or 'uniform'");
  }
  const json& units = at(j, "units", "penalty.");
  for (std::size_t u = 0; u < kCoreUnitCount; ++u) {
    const std::string name = to_string(kCoreUnits[u]);
    const std::string path = "penalty.units." + name + ".";
    const json& ju = at(units, name, "penalty.units.");
    p.omega[u] = num(ju, "omega", path);
    p.alpha[u] = side_pair(ju, "alpha", path);
    p.beta[u] = side_pair(ju, "beta", path);
    p.epsilon[u] = side_pair(ju, "epsilon", path);
    p.psi_max[u] = num(ju, "psi_max", path);
  }
  p.validate();
  return p;
}

/// Reads a plant configuration document. A relative "polytope_file" is
/// resolved against base_dir.
inline PlantConfig parse_plant_config(const json& j, const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  PlantConfig c;
  c.label = j.value("label", std::string{});
  const json& hz = at(j, "horizon", "");
  c.periods = static_cast<int>(num(hz, "periods", "horizon."));
  c.dt = num(hz, "dt_hours", "horizon.");
  c.lookahead = static_cast<int>(num(hz, "lookahead", "horizon."));

  const json& eaf = at(j, "eaf", "");
  if (eaf.contains("polytope")) {
    c.eaf_polytope = eaf.at("polytope").get<EafPolytope>();
  } else {
    const auto file = base_dir / at(eaf, "polytope_file", "eaf.").get<std::string>();
    std::ifstream in(file);
    if (!in) fail(ErrorKind::io, "cannot open EAF polytope file " + file.string());
    json pj;
    try {
      in >> pj;
    } catch (const json::exception& e) {
      fail(ErrorKind::schema, file.string() + ": " + e.what());
    }
    c.eaf_polytope = pj.get<EafPolytope>();
  }
  const json& mats = at(eaf, "materials", "eaf.");
  if (!mats.is_array() || mats.size() != kMaterialCount)
    fail(ErrorKind::schema, "eaf.materials must list HDRI, CDRI and SCRAP");
  for (const json& m : mats) {
    EafMaterialSpec spec;
    spec.material = material_from_string(at(m, "material", "eaf.materials[].").get<std::string>());
    spec.specific_heat = num(m, "specific_heat", "eaf.materials[].");
    spec.delta_temperature = num(m, "delta_temperature", "eaf.materials[].");
    c.eaf_materials[static_cast<std::size_t>(spec.material)] = spec;
  }
  c.eaf_steel_min = num(eaf, "steel_min_t", "eaf.");
  c.eaf_steel_max = num(eaf, "steel_max_t", "eaf.");
  const json& cb = at(eaf, "carbon", "eaf.");
  c.carbon.psi_c_carbon = num(cb, "psi_c_carbon", "eaf.carbon.");
  c.carbon.psi_c_lime = num(cb, "psi_c_lime", "eaf.carbon.");
  c.carbon.psi_c_scrap = num(cb, "psi_c_scrap", "eaf.carbon.");
  c.carbon.psi_carbon_per_steel = num(cb, "psi_c_dri", "eaf.carbon.");
  c.carbon.psi_lime_per_steel = num(cb, "psi_lime", "eaf.carbon.");

  const json& sf = at(j, "sf", "");
  c.sf = lag_unit(sf, LagUnitId::sf, "sf.");
  c.psi_h_dri = num(sf, "psi_h_dri", "sf.");
  const json& msr = at(j, "msr", "");
  c.msr = lag_unit(msr, LagUnitId::msr, "msr.");
  c.msr_stoich.psi_h_metha = num(msr, "psi_h_metha", "msr.");
  c.msr_stoich.psi_c_metha = num(msr, "psi_c_metha", "msr.");

  const json& heh = at(j, "heh", "");
  c.heh.psi_tth = num(heh, "psi_tth", "heh.");
  c.heh.psi_th_re = num(heh, "psi_th_re", "heh.");
  c.heh.psi_eh = num(heh, "psi_eh", "heh.");
  c.heh.psi_ftg = num(heh, "psi_ftg", "heh.");
  c.heh.psi_whb = num(heh, "psi_whb", "heh.");

  const json& ae = at(j, "ae", "");
  c.ae_p_min = num(ae, "p_min_mw", "ae.");
  c.ae_p_max = num(ae, "p_max_mw", "ae.");
  c.psi_h2_per_mwh = num(ae, "psi_h2_per_mwh", "ae.");

  const json& aux = at(j, "auxiliaries", "");
  c.psi_er_comp = num(aux, "psi_er_comp", "auxiliaries.");
  c.psi_ec_comp = num(aux, "psi_ec_comp", "auxiliaries.");
  c.psi_e_exp = num(aux, "psi_e_exp", "auxiliaries.");
  c.leh_efficiency = num(aux, "leh_efficiency", "auxiliaries.");
  c.leh_p_max = num(aux, "leh_p_max_mw", "auxiliaries.");
  c.psi_ccs = num(aux, "psi_ccs", "auxiliaries.");

  const json& grid = at(j, "grid", "");
  c.grid_capacity = num(grid, "capacity_mw", "grid.");
  c.psi_sell = num(grid, "psi_sell", "grid.");

  for (const json& s : at(j, "storages", "")) {
    StorageParams sp;
    sp.id = storage_from_string(at(s, "id", "storages[].").get<std::string>());
    const std::string path = std::string("storages.") + to_string(sp.id) + ".";
    sp.e_min = num(s, "e_min", path);
    sp.e_max = num(s, "e_max", path);
    sp.p_ch_max = num(s, "p_ch_max", path);
    sp.p_dis_max = num(s, "p_dis_max", path);
    sp.eta_ch = num(s, "eta_ch", path);
    sp.eta_dis = num(s, "eta_dis", path);
    sp.e_initial = num(s, "e_initial", path);
    c.storages[static_cast<std::size_t>(sp.id)] = sp;
  }

  const json& pr = at(j, "prices", "");
  c.rho_curt = num(pr, "rho_curt", "prices.");
  c.rho_peak = num(pr, "rho_peak", "prices.");
  c.rho_h2_bf = num(pr, "rho_h2_bf", "prices.");
  c.rho_thl = num(pr, "rho_thl", "prices.");
  c.rho_hl = num(pr, "rho_hl", "prices.");

  const json& oc = at(j, "op_costs", "");
  const json& el = at(oc, "electric", "op_costs.");
  c.cost_ae = num(el, "AE", "op_costs.electric.");
  c.cost_eaf = num(el, "EAF", "op_costs.electric.");
  c.cost_heh = num(el, "HEH", "op_costs.electric.");
  c.cost_leh = num(el, "LEH", "op_costs.electric.");
  c.cost_ccs = num(el, "CCS", "op_costs.electric.");
  c.cost_comp = num(el, "COMP", "op_costs.electric.");
  const json& ma = at(oc, "material", "op_costs.");
  c.cost_dri = num(ma, "DRI", "op_costs.material.");
  c.cost_steel = num(ma, "STEEL", "op_costs.material.");
  c.cost_methanol = num(ma, "METHANOL", "op_costs.material.");
  c.cost_scrap = num(ma, "SCRAP", "op_costs.material.");
  c.cost_carbon = num(ma, "CARBON", "op_costs.material.");
  c.cost_lime = num(ma, "LIME", "op_costs.material.");

  const json& ord = at(j, "orders", "");
  c.orders = {num(ord, "SF", "orders."), num(ord, "EAF", "orders.")};
  const json& base = at(j, "baseline", "");
  for (std::size_t u = 0; u < kCoreUnitCount; ++u) c.baseline[u] = num(base, to_string(kCoreUnits[u]), "baseline.");

  const json& init = at(j, "initial", "");
  c.sf_qss_initial = num(init, "sf_qss_prev_t", "initial.");
  c.msr_qss_initial = num(init, "msr_qss_prev_t", "initial.");
  c.pending_hot_initial = num(init, "pending_hot_dri_t", "initial.");
  c.cdris_terminal_fraction = num_or(j.value("terminal", json::object()), "cdris_fraction", 0.5);

  c.penalty = parse_penalty(at(j, "penalty", ""));
  const json fc = j.value("forecast", json::object());
  c.da_error_frac = num_or(fc, "da_error_frac", 0.10);
  c.id_error_frac = num_or(fc, "id_error_frac", 0.05);
  c.seed = static_cast<std::uint64_t>(num_or(fc, "seed", 1));
  const json sv = j.value("solver", json::object());
  c.mip_rel_gap = num_or(sv, "mip_rel_gap", 1e-4);
  c.time_limit_s = num_or(sv, "time_limit_s", 120.0);
  c.validate();
  return c;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    fail(ErrorKind::schema, path.string() + ": " + e.what());
  }
}

inline PlantConfig load_plant_config(const std::filesystem::path& path) {
  return parse_plant_config(read_json_file(path), path.parent_path());
}

// --- exogenous series --------------------------------------------------------

enum class Feature : std::size_t { wind = 0, solar = 1, price_buy = 2, price_sell = 3, h2_load = 4, thermal_load = 5 };
inline constexpr std::size_t kFeatureCount = 6;
inline constexpr std::array<Feature, kFeatureCount> kFeatures = {
    Feature::wind, Feature::solar, Feature::price_buy, Feature::price_sell, Feature::h2_load, Feature::thermal_load};

inline const char* to_string(Feature f) {
  switch (f) {
    case Feature::wind: return "wind_mw";
    case Feature::solar: return "solar_mw";
    case Feature::price_buy: return "price_buy";
    case Feature::price_sell: return "price_sell";
    case Feature::h2_load: return "h2_demand_t";
    case Feature::thermal_load: return "heat_demand_mwh";
  }
  return "?";
}

/// Time series of RES availability, prices and sale caps. Hydrogen and heat
/// demand columns cap the hydrogen and thermal sales per period.
struct ExogenousScenario {
  std::vector<int> t;
  std::array<std::vector<double>, kFeatureCount> series{};

  std::size_t size() const { return t.size(); }
  std::vector<double>& operator[](Feature f) { return series[static_cast<std::size_t>(f)]; }
  const std::vector<double>& operator[](Feature f) const { return series[static_cast<std::size_t>(f)]; }
  double at(Feature f, std::size_t i) const { return series[static_cast<std::size_t>(f)].at(i); }
  double res(std::size_t i) const { return at(Feature::wind, i) + at(Feature::solar, i); }

  ExogenousScenario slice(std::size_t first, std::size_t count) const {
    ExogenousScenario out;
    out.t.assign(t.begin() + first, t.begin() + first + count);
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      out.series[f].assign(series[f].begin() + first, series[f].begin() + first + count);
    return out;
  }

  void validate() const {
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      if (series[f].size() != t.size())
        fail(ErrorKind::schema, fmt::format("scenario column {} has {} rows, expected {}",
                                            to_string(kFeatures[f]), series[f].size(), t.size()));
    for (std::size_t i = 1; i < t.size(); ++i)
      if (t[i] <= t[i - 1]) fail(ErrorKind::schema, "scenario column t must be strictly increasing");
    for (Feature f : {Feature::wind, Feature::solar, Feature::h2_load, Feature::thermal_load})
      for (double v : (*this)[f])
        if (v < 0.0) fail(ErrorKind::schema, fmt::format("scenario column {} must be nonnegative", to_string(f)));
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::schema, fmt::format("{}: '{}' is not a number", where, s));
  }
}

}  // namespace detail

/// Parsed CSV table: header plus numeric columns keyed by name.
struct CsvTable {
  std::vector<std::string> header;
  std::map<std::string, std::vector<double>> columns;

  bool has(const std::string& name) const { return columns.count(name) != 0; }
  const std::vector<double>& column(const std::string& name) const {
    auto it = columns.find(name);
    if (it == columns.end()) fail(ErrorKind::schema, "missing CSV column '" + name + "'");
    return it->second;
  }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::schema, path.string() + ": empty CSV");
  table.header = detail::split_csv_line(line);
  for (const auto& h : table.header) table.columns[h];
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != table.header.size())
      fail(ErrorKind::schema, fmt::format("{}:{}: expected {} cells, got {}", path.string(), row,
                                          table.header.size(), cells.size()));
    for (std::size_t c = 0; c < cells.size(); ++c)
      table.columns[table.header[c]].push_back(
          detail::parse_double(cells[c], fmt::format("{}:{}", path.string(), row)));
  }
  return table;
}

inline ExogenousScenario scenario_from_table(const CsvTable& table) {
  ExogenousScenario s;
  for (double v : table.column("t")) s.t.push_back(static_cast<int>(std::lround(v)));
  for (Feature f : kFeatures) s[f] = table.column(to_string(f));
  s.validate();
  return s;
}

inline ExogenousScenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_table(read_csv(path));
}

}  // namespace steelflex
