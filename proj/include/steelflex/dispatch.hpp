#pragma once

// Decoded per-period dispatch of the integrated plant and its economic cost.

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "steelflex/config.hpp"

namespace steelflex {

/// Realized or planned starting state of a window.
struct UnitState {
  double sf_qss_prev = 0.0;
  double msr_qss_prev = 0.0;
  double pending_hot = 0.0;
  PerStorage<double> level{};

  static UnitState initial(const PlantConfig& plant) {
    UnitState s;
    s.sf_qss_prev = plant.sf_qss_initial;
    s.msr_qss_prev = plant.msr_qss_initial;
    s.pending_hot = plant.pending_hot_initial;
    for (StorageId id : kAllStorages)
      if (plant.has_storage(id)) s.level[static_cast<std::size_t>(id)] = plant.storage(id).e_initial;
    return s;
  }
};

struct StorageTrace {
  std::vector<double> ch, dis, level;  // level at the end of each period
};

struct DispatchSolution {
  std::vector<int> t;
  // exogenous inputs seen by the solve
  std::vector<double> res, price_buy, price_sell, h2_cap, heat_cap;
  // grid
  std::vector<double> p_buy, p_sell, b_grid, p_curt;
  // electrolyzer and auxiliaries
  std::vector<double> p_ae, p_comp, p_exp, p_heh, heh_surplus, p_leh, heat_vent, p_ccs;
  // shaft furnace and routing
  std::vector<double> sf_qss, m_dri, hot_out, silo_in;
  // EAF
  std::vector<double> m_eaf, p_eaf, m_hdri, m_cdri, m_scrap, x_hdri, x_cdri, x_scrap;
  std::vector<double> m_carbon, m_lime, m_co2;
  // methanol
  std::vector<double> msr_qss, m_metha;
  // sales
  std::vector<double> hl_sell, thl_sell;
  PerStorage<StorageTrace> storage{};
  double peak_buy = 0.0;
  UnitState start;

  std::size_t size() const { return t.size(); }

  double netload(std::size_t i) const { return p_buy[i] - p_sell[i]; }
  std::vector<double> netload() const {
    std::vector<double> v(size());
    for (std::size_t i = 0; i < size(); ++i) v[i] = netload(i);
    return v;
  }

  /// Operating variable of a core unit.
  const std::vector<double>& core(CoreUnit u) const {
    switch (u) {
      case CoreUnit::ae: return p_ae;
      case CoreUnit::sf: return sf_qss;
      case CoreUnit::eaf: return m_eaf;
      case CoreUnit::msr: return msr_qss;
    }
    return p_ae;
  }

  /// Order-counted production per period.
  const std::vector<double>& production(OrderUnit v) const { return v == OrderUnit::sf ? m_dri : m_eaf; }

  /// Internal electric load used by the RES-load matching metric.
  double plant_load(std::size_t i) const {
    double load = p_eaf[i] + p_ae[i] + p_comp[i] + p_heh[i] + p_leh[i] + p_ccs[i];
    const auto& b = storage[static_cast<std::size_t>(StorageId::bess)];
    if (!b.ch.empty()) load += b.ch[i];
    return load;
  }
  std::vector<double> plant_load() const {
    std::vector<double> v(size());
    for (std::size_t i = 0; i < size(); ++i) v[i] = plant_load(i);
    return v;
  }

  using Column = std::vector<double> DispatchSolution::*;
  static const std::vector<std::pair<const char*, Column>>& columns() {
    static const std::vector<std::pair<const char*, Column>> cols = {
        {"res_mw", &DispatchSolution::res},         {"price_buy", &DispatchSolution::price_buy},
        {"price_sell", &DispatchSolution::price_sell}, {"p_buy", &DispatchSolution::p_buy},
        {"p_sell", &DispatchSolution::p_sell},      {"b_grid", &DispatchSolution::b_grid},
        {"p_curt", &DispatchSolution::p_curt},      {"p_ae", &DispatchSolution::p_ae},
        {"p_comp", &DispatchSolution::p_comp},      {"p_exp", &DispatchSolution::p_exp},
        {"p_heh", &DispatchSolution::p_heh},        {"heh_surplus", &DispatchSolution::heh_surplus},
        {"p_leh", &DispatchSolution::p_leh},        {"heat_vent", &DispatchSolution::heat_vent},
        {"p_ccs", &DispatchSolution::p_ccs},        {"sf_qss", &DispatchSolution::sf_qss},
        {"m_dri", &DispatchSolution::m_dri},        {"hot_out", &DispatchSolution::hot_out},
        {"silo_in", &DispatchSolution::silo_in},    {"m_eaf", &DispatchSolution::m_eaf},
        {"p_eaf", &DispatchSolution::p_eaf},        {"m_hdri", &DispatchSolution::m_hdri},
        {"m_cdri", &DispatchSolution::m_cdri},      {"m_scrap", &DispatchSolution::m_scrap},
        {"x_hdri", &DispatchSolution::x_hdri},      {"x_cdri", &DispatchSolution::x_cdri},
        {"x_scrap", &DispatchSolution::x_scrap},    {"m_carbon", &DispatchSolution::m_carbon},
        {"m_lime", &DispatchSolution::m_lime},      {"m_co2", &DispatchSolution::m_co2},
        {"msr_qss", &DispatchSolution::msr_qss},    {"m_metha", &DispatchSolution::m_metha},
        {"hl_sell", &DispatchSolution::hl_sell},    {"thl_sell", &DispatchSolution::thl_sell},
        {"h2_cap", &DispatchSolution::h2_cap},      {"heat_cap", &DispatchSolution::heat_cap},
    };
    return cols;
  }

  void resize(std::size_t n) {
    t.resize(n);
    for (const auto& [name, col] : columns()) (this->*col).resize(n);
  }

  /// Appends period i of src (used to assemble realized trajectories).
  void append_period(const DispatchSolution& src, std::size_t i) {
    if (size() == 0) start = src.start;
    t.push_back(src.t.at(i));
    for (const auto& [name, col] : columns()) (this->*col).push_back((src.*col).at(i));
    for (std::size_t s = 0; s < kStorageCount; ++s) {
      if (src.storage[s].ch.empty()) continue;
      storage[s].ch.push_back(src.storage[s].ch[i]);
      storage[s].dis.push_back(src.storage[s].dis[i]);
      storage[s].level.push_back(src.storage[s].level[i]);
    }
    peak_buy = std::max(peak_buy, src.p_buy[i]);
  }

  /// State at the end of period i, the start state of the next window.
  UnitState state_after(std::size_t i) const {
    UnitState s;
    s.sf_qss_prev = sf_qss.at(i);
    s.msr_qss_prev = msr_qss.at(i);
    s.pending_hot = hot_out.at(i);
    for (std::size_t k = 0; k < kStorageCount; ++k)
      s.level[k] = storage[k].level.empty() ? 0.0 : storage[k].level.at(i);
    return s;
  }

  double storage_level_end(StorageId id, double fallback) const {
    const auto& tr = storage[static_cast<std::size_t>(id)];
    return tr.level.empty() ? fallback : tr.level.back();
  }
};

struct EconomicCost {
  double grid = 0.0;     // purchases and curtailment
  double op = 0.0;       // unit operating and material costs
  double revenue = 0.0;  // grid, hydrogen and heat sales
  double peak = 0.0;     // capacity charge on peak purchase
  double total() const { return grid + op - revenue + peak; }
};

/// Economic cost of a dispatch, recomputed from decoded values.
inline EconomicCost economic_cost(const DispatchSolution& s, const PlantConfig& p) {
  EconomicCost c;
  double peak = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    c.grid += (s.price_buy[i] * s.p_buy[i] + p.rho_curt * s.p_curt[i]) * p.dt;
    c.op += (p.cost_ae * s.p_ae[i] + p.cost_eaf * s.p_eaf[i] + p.cost_heh * s.p_heh[i] + p.cost_leh * s.p_leh[i] +
             p.cost_ccs * s.p_ccs[i] + p.cost_comp * s.p_comp[i] + p.cost_dri * s.m_dri[i] +
             p.cost_steel * s.m_eaf[i] + p.cost_methanol * s.m_metha[i] + p.cost_scrap * s.m_scrap[i] +
             p.cost_carbon * s.m_carbon[i] + p.cost_lime * s.m_lime[i]) *
            p.dt;
    c.revenue += (s.price_sell[i] * s.p_sell[i] + p.rho_hl * s.hl_sell[i] + p.rho_thl * s.thl_sell[i]) * p.dt;
    peak = std::max(peak, s.p_buy[i]);
  }
  c.peak = p.rho_peak * std::max(peak, s.peak_buy);
  return c;
}

}  // namespace steelflex
