#pragma once

// Constraint replay for decoded schedules. Each period is re-evaluated with
// the unit step functions (storage, routing, lag, HEH, carbon) and the
// carrier balances; residuals are normalized by the largest term involved.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "steelflex/config.hpp"
#include "steelflex/dispatch.hpp"
#include "steelflex/eaf_region.hpp"
#include "steelflex/process_units.hpp"

namespace steelflex {

struct AuditFinding {
  std::string check;
  int period = 0;
  double residual = 0.0;
};

struct AuditReport {
  double max_residual = 0.0;
  std::string worst_check;
  std::size_t checks = 0;
  std::vector<AuditFinding> findings;  // residuals above the tolerance

  bool ok() const { return findings.empty(); }
};

class Auditor {
 public:
  explicit Auditor(const PlantConfig& plant, double tol = 1e-6) : p_(plant), tol_(tol) {}
  Auditor(PlantConfig&&, double = 1e-6) = delete;  // holds a reference

  AuditReport audit(const DispatchSolution& s) const {
    AuditReport r;
    const std::size_t n = s.size();
    UnitState st = s.start;
    DriRoutingState route{st.level[idx(StorageId::cdris)], p_.cdris_capacity(), st.pending_hot};
    for (std::size_t i = 0; i < n; ++i) {
      const int t = s.t[i];

      // storage dynamics
      for (StorageId id : kAllStorages) {
        if (!p_.has_storage(id)) continue;
        const StorageParams& sp = p_.storage(id);
        const auto& tr = s.storage[idx(id)];
        const std::string name = to_string(id);
        const double prev = i == 0 ? st.level[idx(id)] : tr.level[i - 1];
        const double scale = std::max({1.0, sp.e_max, sp.p_ch_max, sp.p_dis_max});
        try {
          const double next = step_storage(sp, prev, tr.ch[i], tr.dis[i], p_.dt, tol_ * scale);
          record(r, "storage_dynamics_" + name, t, (tr.level[i] - next) / scale);
        } catch (const Error& e) {
          record(r, fmt::format("storage_{}_{}", to_string(e.kind()), name), t, 1.0);
        }
        const double rate = std::max({1.0, sp.p_ch_max, sp.p_dis_max});
        record(r, "exclusion_" + name, t, std::min(tr.ch[i], tr.dis[i]) / rate);
      }
      record(r, "exclusion_grid", t, std::min(s.p_buy[i], s.p_sell[i]) / p_.grid_capacity);
      bounds(r, "grid_bounds", t, {s.p_buy[i], s.p_sell[i]}, 0.0, p_.grid_capacity, p_.grid_capacity);
      bounds(r, "curtailment", t, {s.p_curt[i]}, 0.0, s.res[i], std::max(1.0, s.res[i]));

      // electric balance
      const double supply = s.res[i] + s.p_buy[i] + s.p_exp[i] + bess(s.storage, i, false);
      const double demand = s.p_sell[i] + s.p_eaf[i] + bess(s.storage, i, true) + s.p_ae[i] + s.p_comp[i] +
                            s.p_heh[i] + s.p_leh[i] + s.p_ccs[i] + s.p_curt[i];
      balance(r, "power_balance", t,
              {s.res[i], s.p_buy[i], s.p_exp[i], s.p_sell[i], s.p_eaf[i], s.p_ae[i], s.p_comp[i], s.p_heh[i]},
              supply - demand);

      // shaft furnace and routing
      const double sf_prev = i == 0 ? st.sf_qss_prev : s.sf_qss[i - 1];
      balance(r, "sf_lag", t, {s.m_dri[i], s.sf_qss[i]}, s.m_dri[i] - lag_output(p_.sf, sf_prev, s.sf_qss[i], p_.dt));
      bounds(r, "sf_qss_bounds", t, {s.sf_qss[i]}, p_.sf.qss_min(), p_.sf.qss_max(), p_.sf.max_discharge);
      bounds(r, "sf_ramp", t, {s.sf_qss[i] - sf_prev}, p_.sf.ramp_down(), p_.sf.ramp_up(), p_.sf.max_discharge);
      try {
        const double cold = s.m_cdri[i];
        const DriRoutingStep step = step_dri_routing(route, s.m_dri[i], s.hot_out[i], cold, tol_ * scale_dri());
        balance(r, "dri_hot_delay", t, {s.m_hdri[i], step.eaf_hot_charge}, s.m_hdri[i] - step.eaf_hot_charge);
        balance(r, "dri_split", t, {s.m_dri[i]}, s.silo_in[i] - step.silo_inflow);
        if (p_.has_storage(StorageId::cdris))
          balance(r, "dri_silo_level", t, {step.next.silo_level, p_.cdris_capacity()},
                  s.storage[idx(StorageId::cdris)].level[i] - step.next.silo_level);
        else
          balance(r, "dri_no_silo", t, {s.m_dri[i]}, s.silo_in[i] + cold);
        route = step.next;
      } catch (const Error& e) {
        record(r, fmt::format("dri_{}", to_string(e.kind())), t, 1.0);
      }

      // EAF operating region, scaled by the period's steel output
      bounds(r, "eaf_steel_bounds", t, {s.m_eaf[i]}, p_.eaf_steel_min, p_.eaf_steel_max, p_.eaf_steel_max);
      const std::array<double, kMaterialCount> charged = {s.m_hdri[i], s.m_cdri[i], s.m_scrap[i]};
      const std::array<double, kMaterialCount> state = {s.x_hdri[i], s.x_cdri[i], s.x_scrap[i]};
      for (std::size_t k = 0; k < kMaterialCount; ++k)
        balance(r, std::string("eaf_charge_") + to_string(static_cast<Material>(k)), t, {state[k]},
                state[k] - p_.eaf_materials[k].state_per_tonne() * charged[k]);
      const double lambda = s.m_eaf[i] / p_.eaf_polytope.steel_target();
      if (lambda > 0.0) {
        const EafState z{{s.x_hdri[i], s.x_cdri[i], s.x_scrap[i]}, s.p_eaf[i]};
        const MembershipResult m = p_.eaf_polytope.scaled(lambda).membership(z);
        record(r, "eaf_energy_balance", t, std::abs(m.residual[0]));
        record(r, "eaf_mass_balance", t, std::abs(m.residual[1]));
        record(r, "eaf_box", t, std::max(0.0, -m.min_bound_slack) / std::max(1.0, lambda));
      }

      // carbon, CCS, HEH, auxiliaries
      const CarbonFlows cf = carbon_flows(p_.carbon, std::max(0.0, s.m_eaf[i]), std::max(0.0, s.m_scrap[i]));
      balance(r, "carbon_powder", t, {cf.carbon_powder}, s.m_carbon[i] - cf.carbon_powder);
      balance(r, "lime", t, {cf.lime}, s.m_lime[i] - cf.lime);
      balance(r, "co2", t, {cf.co2}, s.m_co2[i] - cf.co2);
      balance(r, "ccs", t, {s.p_ccs[i]}, s.p_ccs[i] - p_.psi_ccs * s.m_co2[i]);
      if (s.silo_in[i] >= -tol_ && s.silo_in[i] <= s.m_dri[i] + tol_) {
        const HehPower h = heh_power(p_.heh, s.m_dri[i], std::clamp(s.silo_in[i], 0.0, s.m_dri[i]));
        balance(r, "heh_power", t, {h.power, s.m_dri[i] * p_.heh.psi_tth}, s.p_heh[i] - h.power);
        balance(r, "heh_surplus", t, {h.surplus, s.m_dri[i] * p_.heh.psi_tth}, s.heh_surplus[i] - h.surplus);
      }
      balance(r, "compressor", t, {s.p_comp[i], s.p_ae[i]},
              s.p_comp[i] - p_.psi_er_comp * s.p_ae[i] - p_.psi_ec_comp * s.m_dri[i]);
      balance(r, "expander", t, {s.p_exp[i]}, s.p_exp[i] - p_.psi_e_exp * (p_.psi_h_dri * s.m_dri[i] + s.hl_sell[i]));
      bounds(r, "ae_bounds", t, {s.p_ae[i]}, p_.ae_p_min, p_.ae_p_max, p_.ae_p_max);

      // methanol
      const double msr_prev = i == 0 ? st.msr_qss_prev : s.msr_qss[i - 1];
      balance(r, "msr_lag", t, {s.m_metha[i], s.msr_qss[i]},
              s.m_metha[i] - lag_output(p_.msr, msr_prev, s.msr_qss[i], p_.dt));
      bounds(r, "msr_qss_bounds", t, {s.msr_qss[i]}, p_.msr.qss_min(), p_.msr.qss_max(), p_.msr.max_discharge);
      bounds(r, "msr_ramp", t, {s.msr_qss[i] - msr_prev}, p_.msr.ramp_down(), p_.msr.ramp_up(), p_.msr.max_discharge);
      const MsrDemands md = msr_demands(p_.msr_stoich, std::max(0.0, s.m_metha[i]));

      // carrier balances
      const double h2_in = p_.psi_h2_per_mwh * s.p_ae[i] + flow(s, StorageId::ht, i, false);
      const double h2_out = p_.psi_h_dri * s.m_dri[i] + md.h2 + s.hl_sell[i] + flow(s, StorageId::ht, i, true);
      balance(r, "h2_balance", t, {h2_in, h2_out}, h2_in - h2_out);
      const double co2_in = s.m_co2[i] + flow(s, StorageId::cst, i, false);
      const double co2_out = md.co2 + flow(s, StorageId::cst, i, true);
      balance(r, "co2_balance", t, {co2_in, co2_out}, co2_in - co2_out);
      const double heat_in = p_.leh_efficiency * s.p_leh[i] + flow(s, StorageId::lts, i, false) +
                             p_.heh.psi_eh * s.heh_surplus[i];
      const double heat_out = s.thl_sell[i] + flow(s, StorageId::lts, i, true) + s.heat_vent[i];
      balance(r, "heat_balance", t, {heat_in, heat_out}, heat_in - heat_out);
      bounds(r, "h2_sales", t, {s.hl_sell[i]}, 0.0, s.h2_cap[i], std::max(1.0, s.h2_cap[i]));
      bounds(r, "heat_sales", t, {s.thl_sell[i]}, 0.0, s.heat_cap[i], std::max(1.0, s.heat_cap[i]));
      bounds(r, "heat_vent", t, {s.heat_vent[i]}, 0.0, p_.heh.psi_eh * s.heh_surplus[i], 1.0);
    }
    return r;
  }

 private:
  static std::size_t idx(StorageId id) { return static_cast<std::size_t>(id); }

  double scale_dri() const { return std::max({1.0, p_.sf.max_discharge, p_.cdris_capacity()}); }

  static double bess(const PerStorage<StorageTrace>& st, std::size_t i, bool charge) {
    const auto& b = st[idx(StorageId::bess)];
    if (b.ch.empty()) return 0.0;
    return charge ? b.ch[i] : b.dis[i];
  }

  static double flow(const DispatchSolution& s, StorageId id, std::size_t i, bool charge) {
    const auto& tr = s.storage[idx(id)];
    if (tr.ch.empty()) return 0.0;
    return charge ? tr.ch[i] : tr.dis[i];
  }

  void record(AuditReport& r, const std::string& check, int t, double residual) const {
    const double a = std::abs(residual);
    ++r.checks;
    if (a > r.max_residual) {
      r.max_residual = a;
      r.worst_check = check;
    }
    if (a > tol_) r.findings.push_back({check, t, a});
  }

  /// Residual of an equation normalized by the largest involved magnitude.
  void balance(AuditReport& r, const std::string& check, int t, std::initializer_list<double> terms,
               double residual) const {
    double scale = 1.0;
    for (double v : terms) scale = std::max(scale, std::abs(v));
    record(r, check, t, residual / scale);
  }

  void bounds(AuditReport& r, const std::string& check, int t, std::initializer_list<double> values, double lo,
              double hi, double scale) const {
    const double s = std::max(1.0, std::abs(scale));
    for (double v : values) record(r, check, t, std::max({0.0, lo - v, v - hi}) / s);
  }

  const PlantConfig& p_;
  double tol_;
};

}  // namespace steelflex
