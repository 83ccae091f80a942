#pragma once

// Quasi-steady-state and first-order-lag unit models: shaft furnace (SF),
// methanol reactor (MSR), high-temperature electric heater (HEH), DRI
// hot/cold routing through the silo, and the generalized storage family.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include <fmt/format.h>

#include "steelflex/errors.hpp"

namespace steelflex {

enum class LagUnitId { sf, msr };

/// First-order lag unit driven by a quasi-steady-state (QSS) setpoint.
struct LagUnitParams {
  LagUnitId unit = LagUnitId::sf;
  double transition_time_constant = 1.0;  // hours
  double qss_min_frac = 0.0;
  double qss_max_frac = 1.0;
  double ramp_up_frac = 1.0;
  double ramp_down_frac = -1.0;
  double max_discharge = 0.0;  // tonnes per step

  double lag_alpha(double dt) const { return std::exp(-dt / transition_time_constant); }
  double qss_min() const { return qss_min_frac * max_discharge; }
  double qss_max() const { return qss_max_frac * max_discharge; }
  double ramp_up() const { return ramp_up_frac * max_discharge; }
  double ramp_down() const { return ramp_down_frac * max_discharge; }

  void validate(const std::string& name) const {
    if (!(0.0 <= qss_min_frac && qss_min_frac <= qss_max_frac && qss_max_frac <= 1.0))
      fail(ErrorKind::schema, name + ": need 0 <= qss_min_frac <= qss_max_frac <= 1");
    if (!(ramp_down_frac <= ramp_up_frac))
      fail(ErrorKind::schema, name + ": need ramp_down_frac <= ramp_up_frac");
    if (!(transition_time_constant > 0.0))
      fail(ErrorKind::schema, name + ": transition_time_constant must be > 0");
    if (!(max_discharge >= 0.0)) fail(ErrorKind::schema, name + ": max_discharge must be >= 0");
  }
};

/// Output after one step when the QSS setpoint moves from qss_prev to qss_next.
inline double lag_output(const LagUnitParams& params, double qss_prev, double qss_next, double dt) {
  const double alpha = params.lag_alpha(dt);
  return alpha * qss_prev + (1.0 - alpha) * qss_next;
}

struct HehCoefficients {
  double psi_tth = 0.0;
  double psi_th_re = 0.0;
  double psi_eh = 1.0;
  double psi_ftg = 0.0;
  double psi_whb = 0.0;

  void validate() const {
    if (!(psi_th_re >= 0.0 && psi_th_re <= 1.0)) fail(ErrorKind::schema, "psi_th_re must be in [0, 1]");
    if (!(psi_eh > 0.0)) fail(ErrorKind::configuration, "psi_eh must be > 0");
    for (double v : {psi_tth, psi_ftg, psi_whb})
      if (!(v >= 0.0)) fail(ErrorKind::schema, "HEH coefficients must be >= 0");
  }

  /// True when recovered heat can never exceed the heating demand, so the
  /// zero floor on HEH power is inactive for every admissible routing.
  bool floor_never_binds() const { return psi_tth * psi_eh >= psi_th_re * (psi_ftg + psi_whb); }
};

struct HehPower {
  double power = 0.0;
  /// Electric-equivalent heat recovered beyond the demand; credited to the
  /// low-temperature thermal account as surplus * psi_eh.
  double surplus = 0.0;
  bool surplus_heat_event = false;
};

inline HehPower heh_power(const HehCoefficients& c, double dri_produced, double dri_to_silo) {
  if (!(c.psi_eh > 0.0)) fail(ErrorKind::configuration, "heh_power: psi_eh must be > 0");
  if (dri_to_silo < 0.0 || dri_to_silo > dri_produced)
    fail(ErrorKind::invalid_argument, "heh_power: need 0 <= dri_to_silo <= dri_produced");
  const double raw =
      c.psi_tth * dri_produced - c.psi_th_re * (c.psi_ftg * dri_produced + c.psi_whb * dri_to_silo) / c.psi_eh;
  if (raw >= 0.0) return HehPower{raw, 0.0, false};
  return HehPower{0.0, -raw, true};
}

struct DriRoutingState {
  double silo_level = 0.0;
  double silo_capacity = 0.0;
  double pending_hot = 0.0;
};

struct DriRoutingStep {
  DriRoutingState next;
  double silo_inflow = 0.0;
  double eaf_hot_charge = 0.0;
};

inline DriRoutingStep step_dri_routing(const DriRoutingState& state, double dri_produced, double hot_out,
                                       double cold_to_eaf, double tol = 1e-9) {
  if (hot_out < -tol || hot_out > dri_produced + tol)
    fail(ErrorKind::invalid_argument, "step_dri_routing: need 0 <= hot_out <= dri_produced");
  if (cold_to_eaf < -tol) fail(ErrorKind::invalid_argument, "step_dri_routing: cold_to_eaf must be >= 0");
  DriRoutingStep step;
  step.silo_inflow = dri_produced - hot_out;
  step.eaf_hot_charge = state.pending_hot;
  step.next = state;
  step.next.silo_level = state.silo_level + step.silo_inflow - cold_to_eaf;
  step.next.pending_hot = hot_out;
  if (step.next.silo_level < -tol)
    fail(ErrorKind::silo_underflow,
         fmt::format("silo underflow: level {} below 0", step.next.silo_level));
  if (step.next.silo_level > state.silo_capacity + tol)
    fail(ErrorKind::silo_overflow, fmt::format("silo overflow: level {} above capacity {}",
                                               step.next.silo_level, state.silo_capacity));
  return step;
}

struct MsrStoichiometry {
  double psi_h_metha = 0.0;
  double psi_c_metha = 0.0;

  void validate() const {
    if (!(psi_h_metha > 0.0 && psi_c_metha > 0.0))
      fail(ErrorKind::schema, "MSR stoichiometric coefficients must be > 0");
  }
};

struct MsrDemands {
  double h2 = 0.0;
  double co2 = 0.0;
};

inline MsrDemands msr_demands(const MsrStoichiometry& s, double methanol_out) {
  if (methanol_out < 0.0) fail(ErrorKind::invalid_argument, "msr_demands: methanol_out must be >= 0");
  return MsrDemands{s.psi_h_metha * methanol_out, s.psi_c_metha * methanol_out};
}

enum class StorageId : std::size_t { bess = 0, lts = 1, ht = 2, cdris = 3, scs = 4, cst = 5 };
inline constexpr std::size_t kStorageCount = 6;
inline constexpr std::array<StorageId, kStorageCount> kAllStorages = {
    StorageId::bess, StorageId::lts, StorageId::ht, StorageId::cdris, StorageId::scs, StorageId::cst};

inline const char* to_string(StorageId id) {
  switch (id) {
    case StorageId::bess: return "BESS";
    case StorageId::lts: return "LTS";
    case StorageId::ht: return "HT";
    case StorageId::cdris: return "CDRIS";
    case StorageId::scs: return "ScS";
    case StorageId::cst: return "CST";
  }
  return "?";
}

inline StorageId storage_from_string(const std::string& s) {
  for (StorageId id : kAllStorages)
    if (s == to_string(id)) return id;
  fail(ErrorKind::schema, "unknown storage '" + s + "'");
}

struct StorageParams {
  StorageId id = StorageId::bess;
  double e_min = 0.0;
  double e_max = 0.0;
  double p_ch_max = 0.0;
  double p_dis_max = 0.0;
  double eta_ch = 1.0;
  double eta_dis = 1.0;
  double e_initial = 0.0;

  void validate() const {
    const std::string name = to_string(id);
    if (!(e_min <= e_initial && e_initial <= e_max))
      fail(ErrorKind::schema, name + ": need e_min <= e_initial <= e_max");
    if (!(p_ch_max >= 0.0 && p_dis_max >= 0.0)) fail(ErrorKind::schema, name + ": rates must be >= 0");
    if (!(eta_ch > 0.0 && eta_ch <= 1.0 && eta_dis > 0.0 && eta_dis <= 1.0))
      fail(ErrorKind::schema, name + ": efficiencies must lie in (0, 1]");
  }

  /// Level change over one step for the given flows.
  double delta(double p_ch, double p_dis, double dt) const { return (eta_ch * p_ch - p_dis / eta_dis) * dt; }
};

inline double step_storage(const StorageParams& params, double e, double p_ch, double p_dis, double dt,
                           double tol = 1e-9) {
  const std::string name = to_string(params.id);
  if (p_ch > tol && p_dis > tol)
    fail(ErrorKind::simultaneous_charge_discharge,
         fmt::format("{}: simultaneous charge {} and discharge {}", name, p_ch, p_dis));
  if (p_ch < -tol || p_ch > params.p_ch_max + tol)
    fail(ErrorKind::storage_bounds, fmt::format("{}: charge rate {} outside [0, {}]", name, p_ch, params.p_ch_max));
  if (p_dis < -tol || p_dis > params.p_dis_max + tol)
    fail(ErrorKind::storage_bounds,
         fmt::format("{}: discharge rate {} outside [0, {}]", name, p_dis, params.p_dis_max));
  const double next = e + params.delta(p_ch, p_dis, dt);
  if (next < params.e_min - tol || next > params.e_max + tol)
    fail(ErrorKind::storage_bounds,
         fmt::format("{}: level {} outside [{}, {}]", name, next, params.e_min, params.e_max));
  return next;
}

}  // namespace steelflex
