#pragma once

// MILP compilation of the four scheduling problems:
//
//   bd  baseline day-ahead: full horizon, core units locked, exact orders
//   bi  baseline intra-day: rolling window, core units locked, SoC tracking
//   dd  DR day-ahead: core units free, process penalty against bd, exact orders
//   di  DR intra-day: rolling window, offer shortfall, pacing on residual orders
//
// One builder covers all four; the mode switches constraint and objective
// blocks on or off.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "steelflex/config.hpp"
#include "steelflex/dispatch.hpp"
#include "steelflex/milp.hpp"
#include "steelflex/penalty.hpp"

namespace steelflex {

enum class ProblemMode { bd, bi, dd, di };

inline const char* to_string(ProblemMode m) {
  switch (m) {
    case ProblemMode::bd: return "bd";
    case ProblemMode::bi: return "bi";
    case ProblemMode::dd: return "dd";
    case ProblemMode::di: return "di";
  }
  return "?";
}

inline bool is_rolling(ProblemMode m) { return m == ProblemMode::bi || m == ProblemMode::di; }
inline bool is_locked(ProblemMode m) { return m == ProblemMode::bd || m == ProblemMode::bi; }

/// Window production bounds for an order unit, in tonnes.
struct PacingBounds {
  double lower = 0.0;
  double upper = kInf;
};

struct ProblemSpec {
  ProblemMode mode = ProblemMode::bd;
  const PlantConfig* plant = nullptr;
  PenaltyConfig penalty;
  int first_period = 0;
  ExogenousScenario exo;  // rows of the window
  UnitState start;
  bool enforce_terminal = true;

  // Rolling ledger quantities (bi, di).
  double realized_peak = 0.0;
  double sell_quota = kInf;  // MWh of sales allowed within the window

  // SoC tracking (bi, di). References are fractions of e_max.
  std::vector<StorageId> tracked;
  PerStorage<std::vector<double>> soc_reference{};

  // Process-penalty references (dd, di).
  PerCore<std::vector<double>> core_reference{};

  // Offers (di).
  std::vector<double> netload_reference, offer_magnitude, offer_direction;
  std::array<PacingBounds, 2> pacing{};

  int length() const { return static_cast<int>(exo.size()); }

  void validate() const {
    if (plant == nullptr) fail(ErrorKind::invalid_argument, "ProblemSpec: plant is not set");
    const auto n = exo.size();
    if (n == 0) fail(ErrorKind::invalid_argument, "ProblemSpec: empty window");
    exo.validate();
    penalty.validate();
    if (mode == ProblemMode::dd || mode == ProblemMode::di)
      for (CoreUnit u : kCoreUnits)
        if (core_reference[static_cast<std::size_t>(u)].size() != n)
          fail(ErrorKind::length_mismatch,
               fmt::format("{} reference for {} has {} periods, window has {}", to_string(mode), to_string(u),
                           core_reference[static_cast<std::size_t>(u)].size(), n));
    if (is_rolling(mode))
      for (StorageId id : tracked) {
        if (!plant->has_storage(id))
          fail(ErrorKind::missing_unit, fmt::format("tracked storage {} is not configured", to_string(id)));
        if (soc_reference[static_cast<std::size_t>(id)].size() != n)
          fail(ErrorKind::length_mismatch, fmt::format("SoC reference for {} has wrong length", to_string(id)));
      }
    if (mode == ProblemMode::di)
      for (const auto* v : {&netload_reference, &offer_magnitude, &offer_direction})
        if (v->size() != n) fail(ErrorKind::length_mismatch, "di offer or netload reference has wrong length");
  }
};

/// Column handles of one period.
struct PeriodVars {
  VarId p_buy, p_sell, b_grid, p_curt;
  VarId p_ae, p_comp, p_exp, p_heh, heh_surplus, heh_on, p_leh, heat_vent, p_ccs;
  VarId sf_qss, m_dri, hot_out;
  VarId m_eaf, p_eaf, m_hdri, x_hdri, x_cdri, x_scrap, m_carbon, m_lime, m_co2;
  VarId msr_qss, m_metha, hl_sell, thl_sell;
  PerStorage<VarId> ch{}, dis{}, level{}, mode{};
  VarId shortfall;
};

struct BuiltProblem {
  MilpModel model;
  std::vector<PeriodVars> periods;
  VarId peak;
  /// Encoded penalty per period and unit (already weighted by omega and alpha).
  std::vector<PerCore<LinExpr>> penalty_terms;
};

namespace detail {

inline double value_of(const std::vector<double>& x, VarId v) {
  return v.valid() ? x[static_cast<std::size_t>(v.index)] : 0.0;
}

inline void check_orders(const ProblemSpec& spec) {
  const PlantConfig& p = *spec.plant;
  const double n = static_cast<double>(spec.length());
  const double sf_min = std::min({p.sf.qss_min(), spec.start.sf_qss_prev});
  const std::array<std::pair<double, double>, 2> range = {
      std::pair{n * sf_min * p.dt, n * p.max_step_output(OrderUnit::sf) * p.dt},
      std::pair{n * p.eaf_steel_min * p.dt, n * p.eaf_steel_max * p.dt}};
  for (OrderUnit v : kOrderUnits) {
    const auto [lo, hi] = range[static_cast<std::size_t>(v)];
    const double o = p.order(v);
    if (o > hi * (1.0 + 1e-9) + 1e-9 || o < lo * (1.0 - 1e-9) - 1e-9)
      fail(ErrorKind::infeasible_order, fmt::format("order {} t for {} lies outside the achievable range [{}, {}]",
                                                    o, to_string(v), lo, hi));
  }
}

}  // namespace detail

inline BuiltProblem build_problem(const ProblemSpec& spec) {
  spec.validate();
  const PlantConfig& p = *spec.plant;
  const ProblemMode mode = spec.mode;
  const int n = spec.length();
  const double dt = p.dt;
  if (!is_rolling(mode)) detail::check_orders(spec);

  BuiltProblem bp{MilpModel(fmt::format("{}_k{}", to_string(mode), spec.first_period)), {}, {}, {}};
  MilpModel& m = bp.model;
  bp.periods.resize(static_cast<std::size_t>(n));
  bp.penalty_terms.resize(static_cast<std::size_t>(n));

  const double sf_alpha = p.sf.lag_alpha(dt);
  const double msr_alpha = p.msr.lag_alpha(dt);
  const EafPolytope& poly = p.eaf_polytope;
  const double steel_per_target = 1.0 / poly.steel_target();
  const bool heh_exact = p.heh.floor_never_binds();
  const double sf_top = std::max({p.sf.qss_max(), spec.start.sf_qss_prev, spec.start.pending_hot});
  const double heh_big_m =
      (p.heh.psi_tth + p.heh.psi_th_re * (p.heh.psi_ftg + p.heh.psi_whb) / p.heh.psi_eh) * sf_top + 1.0;

  LinExpr grid, op, sales, tracking, process, shortfall;
  bp.peak = m.add_var("p_buy_peak", std::max(0.0, spec.realized_peak), kInf);

  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const int a = spec.first_period + i;
    PeriodVars& v = bp.periods[ui];
    auto nm = [a](const char* base) { return fmt::format("{}_{}", base, a); };
    const double res = spec.exo.res(ui);
    const double buy_price = spec.exo.at(Feature::price_buy, ui);
    const double sell_price = spec.exo.at(Feature::price_sell, ui);

    // grid
    v.p_buy = m.add_var(nm("p_buy"), 0.0, p.grid_capacity);
    v.p_sell = m.add_var(nm("p_sell"), 0.0, p.grid_capacity);
    v.b_grid = m.add_binary(nm("b_grid"));
    v.p_curt = m.add_var(nm("p_curt"), 0.0, res);
    m.add_le(nm("grid_sell"), LinExpr(v.p_sell) - p.grid_capacity * LinExpr(v.b_grid), 0.0);
    m.add_le(nm("grid_buy"), LinExpr(v.p_buy) + p.grid_capacity * LinExpr(v.b_grid), p.grid_capacity);
    m.add_ge(nm("peak"), LinExpr(bp.peak) - LinExpr(v.p_buy), 0.0);

    // storages
    for (StorageId id : kAllStorages) {
      if (!p.has_storage(id)) continue;
      const auto s = static_cast<std::size_t>(id);
      const StorageParams& sp = p.storage(id);
      const std::string sn = to_string(id);
      v.ch[s] = m.add_var(fmt::format("ch_{}_{}", sn, a), 0.0, sp.p_ch_max);
      v.dis[s] = m.add_var(fmt::format("dis_{}_{}", sn, a), 0.0, sp.p_dis_max);
      v.level[s] = m.add_var(fmt::format("e_{}_{}", sn, a), sp.e_min, sp.e_max);
      LinExpr prev = i == 0 ? LinExpr(spec.start.level[s]) : LinExpr(bp.periods[ui - 1].level[s]);
      m.add_eq(fmt::format("soc_{}_{}", sn, a),
               LinExpr(v.level[s]) - prev - (sp.eta_ch * dt) * LinExpr(v.ch[s]) + (dt / sp.eta_dis) * LinExpr(v.dis[s]),
               0.0);
      if (sp.p_ch_max > 0.0 && sp.p_dis_max > 0.0) {
        v.mode[s] = m.add_binary(fmt::format("u_{}_{}", sn, a));
        m.add_le(fmt::format("excl_ch_{}_{}", sn, a), LinExpr(v.ch[s]) - sp.p_ch_max * LinExpr(v.mode[s]), 0.0);
        m.add_le(fmt::format("excl_dis_{}_{}", sn, a), LinExpr(v.dis[s]) + sp.p_dis_max * LinExpr(v.mode[s]),
                 sp.p_dis_max);
      }
    }
    auto flow = [&](const PerStorage<VarId>& f, StorageId id) {
      const VarId x = f[static_cast<std::size_t>(id)];
      return x.valid() ? LinExpr(x) : LinExpr();
    };

    // electrolyzer
    v.p_ae = m.add_var(nm("p_ae"), p.ae_p_min, p.ae_p_max);

    // shaft furnace: first-order lag and ramp limits on the QSS setpoint
    v.sf_qss = m.add_var(nm("sf_qss"), p.sf.qss_min(), p.sf.qss_max());
    v.m_dri = m.add_var(nm("m_dri"), 0.0, kInf);
    const LinExpr sf_prev = i == 0 ? LinExpr(spec.start.sf_qss_prev) : LinExpr(bp.periods[ui - 1].sf_qss);
    m.add_eq(nm("sf_lag"), LinExpr(v.m_dri) - (1.0 - sf_alpha) * LinExpr(v.sf_qss) - sf_alpha * sf_prev, 0.0);
    m.add_range(nm("sf_ramp"), LinExpr(v.sf_qss) - sf_prev, p.sf.ramp_down(), p.sf.ramp_up());

    // hot/cold routing: hot DRI reaches the EAF one period later
    v.hot_out = m.add_var(nm("hot_out"), 0.0, kInf);
    m.add_eq(nm("dri_split"), LinExpr(v.m_dri) - LinExpr(v.hot_out) - flow(v.ch, StorageId::cdris), 0.0);
    v.m_hdri = m.add_var(nm("m_hdri"), 0.0, kInf);
    const LinExpr hot_prev = i == 0 ? LinExpr(spec.start.pending_hot) : LinExpr(bp.periods[ui - 1].hot_out);
    m.add_eq(nm("hot_delay"), LinExpr(v.m_hdri) - hot_prev, 0.0);

    // EAF: state z = k_i * M_i, polytope scaled by steel output
    v.m_eaf = m.add_var(nm("m_eaf"), p.eaf_steel_min, p.eaf_steel_max);
    v.p_eaf = m.add_var(nm("p_eaf"), 0.0, kInf);
    v.x_hdri = m.add_var(nm("x_hdri"), 0.0, kInf);
    v.x_cdri = m.add_var(nm("x_cdri"), 0.0, kInf);
    v.x_scrap = m.add_var(nm("x_scrap"), 0.0, kInf);
    const std::array<LinExpr, kMaterialCount> charge = {LinExpr(v.m_hdri), flow(v.dis, StorageId::cdris),
                                                        flow(v.dis, StorageId::scs)};
    const std::array<VarId, kEafStateDim> z = {v.x_hdri, v.x_cdri, v.x_scrap, v.p_eaf};
    for (std::size_t k = 0; k < kMaterialCount; ++k)
      m.add_eq(fmt::format("eaf_state_{}_{}", to_string(static_cast<Material>(k)), a),
               LinExpr(z[k]) - p.eaf_materials[k].state_per_tonne() * charge[k], 0.0);
    for (std::size_t r = 0; r < 2; ++r) {
      LinExpr row;
      for (std::size_t k = 0; k < kEafStateDim; ++k) row.add(z[k], poly.a_eq()[r][k]);
      row.add(v.m_eaf, -poly.b_eq()[r] * steel_per_target);
      m.add_eq(fmt::format("eaf_eq{}_{}", r, a), row, 0.0);
    }
    for (std::size_t k = 0; k < kEafStateDim; ++k) {
      m.add_ge(fmt::format("eaf_lo{}_{}", k, a), LinExpr(z[k]) - poly.z_min()[k] * steel_per_target * LinExpr(v.m_eaf),
               0.0);
      m.add_le(fmt::format("eaf_hi{}_{}", k, a), LinExpr(z[k]) - poly.z_max()[k] * steel_per_target * LinExpr(v.m_eaf),
               0.0);
    }

    // carbon, lime and process CO2
    v.m_carbon = m.add_var(nm("m_carbon"), 0.0, kInf);
    v.m_lime = m.add_var(nm("m_lime"), 0.0, kInf);
    v.m_co2 = m.add_var(nm("m_co2"), 0.0, kInf);
    m.add_eq(nm("carbon"), LinExpr(v.m_carbon) - p.carbon.psi_carbon_per_steel * LinExpr(v.m_eaf), 0.0);
    m.add_eq(nm("lime"), LinExpr(v.m_lime) - p.carbon.psi_lime_per_steel * LinExpr(v.m_eaf), 0.0);
    m.add_eq(nm("co2"),
             LinExpr(v.m_co2) - p.carbon.psi_c_carbon * LinExpr(v.m_carbon) - p.carbon.psi_c_lime * LinExpr(v.m_lime) -
                 p.carbon.psi_c_scrap * flow(v.dis, StorageId::scs),
             0.0);
    v.p_ccs = m.add_var(nm("p_ccs"), 0.0, kInf);
    m.add_eq(nm("ccs"), LinExpr(v.p_ccs) - p.psi_ccs * LinExpr(v.m_co2), 0.0);

    // heating of hot DRI with recovered heat credited; clamped at zero
    v.p_heh = m.add_var(nm("p_heh"), 0.0, kInf);
    const LinExpr heh_raw = p.heh.psi_tth * LinExpr(v.m_dri) -
                            (p.heh.psi_th_re / p.heh.psi_eh) *
                                (p.heh.psi_ftg * LinExpr(v.m_dri) + p.heh.psi_whb * flow(v.ch, StorageId::cdris));
    if (heh_exact) {
      m.add_eq(nm("heh"), LinExpr(v.p_heh) - heh_raw, 0.0);
    } else {
      v.heh_surplus = m.add_var(nm("heh_surplus"), 0.0, kInf);
      v.heh_on = m.add_binary(nm("heh_on"));
      m.add_eq(nm("heh"), LinExpr(v.p_heh) - LinExpr(v.heh_surplus) - heh_raw, 0.0);
      m.add_le(nm("heh_pos"), LinExpr(v.p_heh) - heh_big_m * LinExpr(v.heh_on), 0.0);
      m.add_le(nm("heh_neg"), LinExpr(v.heh_surplus) + heh_big_m * LinExpr(v.heh_on), heh_big_m);
    }

    // hydrogen compression and expansion
    v.hl_sell = m.add_var(nm("hl_sell"), 0.0, spec.exo.at(Feature::h2_load, ui));
    v.p_comp = m.add_var(nm("p_comp"), 0.0, kInf);
    m.add_eq(nm("comp"), LinExpr(v.p_comp) - p.psi_er_comp * LinExpr(v.p_ae) - p.psi_ec_comp * LinExpr(v.m_dri), 0.0);
    v.p_exp = m.add_var(nm("p_exp"), 0.0, kInf);
    m.add_eq(nm("exp"),
             LinExpr(v.p_exp) - p.psi_e_exp * (p.psi_h_dri * LinExpr(v.m_dri) + LinExpr(v.hl_sell)), 0.0);

    // methanol synthesis
    v.msr_qss = m.add_var(nm("msr_qss"), p.msr.qss_min(), p.msr.qss_max());
    v.m_metha = m.add_var(nm("m_metha"), 0.0, kInf);
    const LinExpr msr_prev = i == 0 ? LinExpr(spec.start.msr_qss_prev) : LinExpr(bp.periods[ui - 1].msr_qss);
    m.add_eq(nm("msr_lag"), LinExpr(v.m_metha) - (1.0 - msr_alpha) * LinExpr(v.msr_qss) - msr_alpha * msr_prev, 0.0);
    m.add_range(nm("msr_ramp"), LinExpr(v.msr_qss) - msr_prev, p.msr.ramp_down(), p.msr.ramp_up());

    // carrier balances
    m.add_eq(nm("h2_balance"),
             p.psi_h2_per_mwh * LinExpr(v.p_ae) + flow(v.dis, StorageId::ht) - flow(v.ch, StorageId::ht) -
                 p.psi_h_dri * LinExpr(v.m_dri) - p.msr_stoich.psi_h_metha * LinExpr(v.m_metha) - LinExpr(v.hl_sell),
             0.0);
    m.add_eq(nm("co2_balance"),
             LinExpr(v.m_co2) + flow(v.dis, StorageId::cst) - flow(v.ch, StorageId::cst) -
                 p.msr_stoich.psi_c_metha * LinExpr(v.m_metha),
             0.0);
    v.p_leh = m.add_var(nm("p_leh"), 0.0, p.leh_p_max);
    v.thl_sell = m.add_var(nm("thl_sell"), 0.0, spec.exo.at(Feature::thermal_load, ui));
    LinExpr heat = p.leh_efficiency * LinExpr(v.p_leh) + flow(v.dis, StorageId::lts) - flow(v.ch, StorageId::lts) -
                   LinExpr(v.thl_sell);
    if (v.heh_surplus.valid()) {
      v.heat_vent = m.add_var(nm("heat_vent"), 0.0, kInf);
      heat += p.heh.psi_eh * LinExpr(v.heh_surplus) - LinExpr(v.heat_vent);
      m.add_le(nm("heat_vent_cap"), LinExpr(v.heat_vent) - p.heh.psi_eh * LinExpr(v.heh_surplus), 0.0);
    }
    m.add_eq(nm("heat_balance"), heat, 0.0);

    m.add_eq(nm("power_balance"),
             LinExpr(v.p_buy) + LinExpr(v.p_exp) + flow(v.dis, StorageId::bess) - LinExpr(v.p_sell) -
                 LinExpr(v.p_eaf) - flow(v.ch, StorageId::bess) - LinExpr(v.p_ae) - LinExpr(v.p_comp) -
                 LinExpr(v.p_heh) - LinExpr(v.p_leh) - LinExpr(v.p_ccs) - LinExpr(v.p_curt),
             -res);

    // core-unit lock
    const PerCore<VarId> core = {v.p_ae, v.sf_qss, v.m_eaf, v.msr_qss};
    if (is_locked(mode))
      for (CoreUnit u : kCoreUnits)
        m.add_eq(fmt::format("lock_{}_{}", to_string(u), a), LinExpr(core[static_cast<std::size_t>(u)]),
                 p.baseline[static_cast<std::size_t>(u)]);

    // process penalty
    if (mode == ProblemMode::dd || mode == ProblemMode::di) {
      for (CoreUnit u : kCoreUnits) {
        const auto uc = static_cast<std::size_t>(u);
        const double scale = 1.0 / spec.penalty.psi_max[uc];
        const LinExpr delta = scale * LinExpr(core[uc]) - LinExpr(scale * spec.core_reference[uc][ui]);
        const LinExpr term = encode_penalty(m, spec.penalty, u, delta, std::to_string(a));
        bp.penalty_terms[ui][uc] = term;
        process += term;
      }
    }

    // SoC tracking against the kernel-weighted reference
    if (is_rolling(mode)) {
      for (StorageId id : spec.tracked) {
        const auto s = static_cast<std::size_t>(id);
        const std::string sn = to_string(id);
        const VarId up = m.add_var(fmt::format("trk_up_{}_{}", sn, a), 0.0, kInf);
        const VarId dn = m.add_var(fmt::format("trk_dn_{}_{}", sn, a), 0.0, kInf);
        m.add_eq(fmt::format("trk_{}_{}", sn, a),
                 (1.0 / p.storage(id).e_max) * LinExpr(v.level[s]) - LinExpr(up) + LinExpr(dn),
                 spec.soc_reference[s][ui]);
        tracking.add(up).add(dn);
      }
    }

    // offer shortfall against the bi netload plan
    if (mode == ProblemMode::di) {
      v.shortfall = m.add_var(nm("shortfall"), 0.0, kInf);
      const double d = spec.offer_direction[ui];
      m.add_ge(nm("offer"), LinExpr(v.shortfall) - d * LinExpr(v.p_buy) + d * LinExpr(v.p_sell),
               spec.offer_magnitude[ui] - d * spec.netload_reference[ui]);
      shortfall.add(v.shortfall);
    }

    grid.add(v.p_buy, buy_price * dt).add(v.p_curt, p.rho_curt * dt);
    op.add(v.p_ae, p.cost_ae * dt)
        .add(v.p_eaf, p.cost_eaf * dt)
        .add(v.p_heh, p.cost_heh * dt)
        .add(v.p_leh, p.cost_leh * dt)
        .add(v.p_ccs, p.cost_ccs * dt)
        .add(v.p_comp, p.cost_comp * dt)
        .add(v.m_dri, p.cost_dri * dt)
        .add(v.m_eaf, p.cost_steel * dt)
        .add(v.m_metha, p.cost_methanol * dt)
        .add(v.m_carbon, p.cost_carbon * dt)
        .add(v.m_lime, p.cost_lime * dt)
        .add(flow(v.dis, StorageId::scs), p.cost_scrap * dt);
    sales.add(v.p_sell, -sell_price * dt).add(v.hl_sell, -p.rho_hl * dt).add(v.thl_sell, -p.rho_thl * dt);
  }

  // sales quota on RES-normalized grid exports
  LinExpr sold;
  for (const auto& v : bp.periods) sold.add(v.p_sell, dt);
  double quota = spec.sell_quota;
  if (!is_rolling(mode)) {
    double res_total = 0.0;
    for (std::size_t i = 0; i < spec.exo.size(); ++i) res_total += spec.exo.res(i) * dt;
    quota = p.psi_sell * res_total;
  }
  if (std::isfinite(quota)) m.add_le("sell_quota", sold, std::max(0.0, quota));

  // production orders or pacing bounds
  for (OrderUnit ov : kOrderUnits) {
    LinExpr produced;
    for (const auto& v : bp.periods) produced.add(ov == OrderUnit::sf ? v.m_dri : v.m_eaf, dt);
    const std::string name = fmt::format("order_{}", to_string(ov));
    if (mode == ProblemMode::bd || mode == ProblemMode::dd) {
      m.add_eq(name, produced, p.order(ov));
    } else if (mode == ProblemMode::di) {
      const PacingBounds& pb = spec.pacing[static_cast<std::size_t>(ov)];
      m.add_range("pacing_" + std::string(to_string(ov)), produced, pb.lower, pb.upper);
    }
  }

  if (spec.enforce_terminal && p.has_storage(StorageId::cdris)) {
    const auto s = static_cast<std::size_t>(StorageId::cdris);
    m.add_eq("cdris_terminal", LinExpr(bp.periods.back().level[s]), p.cdris_terminal_fraction * p.cdris_capacity());
  }

  m.add_objective("grid", grid);
  m.add_objective("op", op);
  m.add_objective("sales", sales);
  m.add_objective("peak", LinExpr(bp.peak, p.rho_peak));
  if (is_rolling(mode)) m.add_objective("tracking", spec.penalty.lambda_rf * tracking);
  if (mode == ProblemMode::dd || mode == ProblemMode::di) m.add_objective("process", spec.penalty.lambda_p * process);
  if (mode == ProblemMode::di) m.add_objective("shortfall", spec.penalty.lambda_s * shortfall);
  return bp;
}

// --- decode ------------------------------------------------------------------

inline DispatchSolution decode(const BuiltProblem& bp, const ProblemSpec& spec, const std::vector<double>& x) {
  using detail::value_of;
  const PlantConfig& p = *spec.plant;
  DispatchSolution s;
  const std::size_t n = bp.periods.size();
  s.resize(n);
  s.start = spec.start;
  for (std::size_t s_id = 0; s_id < kStorageCount; ++s_id)
    if (p.storages[s_id]) {
      s.storage[s_id].ch.resize(n);
      s.storage[s_id].dis.resize(n);
      s.storage[s_id].level.resize(n);
    }
  for (std::size_t i = 0; i < n; ++i) {
    const PeriodVars& v = bp.periods[i];
    auto val = [&](VarId id) { return value_of(x, id); };
    s.t[i] = spec.first_period + static_cast<int>(i);
    s.res[i] = spec.exo.res(i);
    s.price_buy[i] = spec.exo.at(Feature::price_buy, i);
    s.price_sell[i] = spec.exo.at(Feature::price_sell, i);
    s.h2_cap[i] = spec.exo.at(Feature::h2_load, i);
    s.heat_cap[i] = spec.exo.at(Feature::thermal_load, i);
    s.p_buy[i] = val(v.p_buy);
    s.p_sell[i] = val(v.p_sell);
    s.b_grid[i] = val(v.b_grid);
    s.p_curt[i] = val(v.p_curt);
    s.p_ae[i] = val(v.p_ae);
    s.p_comp[i] = val(v.p_comp);
    s.p_exp[i] = val(v.p_exp);
    s.p_heh[i] = val(v.p_heh);
    s.heh_surplus[i] = val(v.heh_surplus);
    s.p_leh[i] = val(v.p_leh);
    s.heat_vent[i] = val(v.heat_vent);
    s.p_ccs[i] = val(v.p_ccs);
    s.sf_qss[i] = val(v.sf_qss);
    s.m_dri[i] = val(v.m_dri);
    s.hot_out[i] = val(v.hot_out);
    s.silo_in[i] = val(v.ch[static_cast<std::size_t>(StorageId::cdris)]);
    s.m_eaf[i] = val(v.m_eaf);
    s.p_eaf[i] = val(v.p_eaf);
    s.m_hdri[i] = val(v.m_hdri);
    s.m_cdri[i] = val(v.dis[static_cast<std::size_t>(StorageId::cdris)]);
    s.m_scrap[i] = val(v.dis[static_cast<std::size_t>(StorageId::scs)]);
    s.x_hdri[i] = val(v.x_hdri);
    s.x_cdri[i] = val(v.x_cdri);
    s.x_scrap[i] = val(v.x_scrap);
    s.m_carbon[i] = val(v.m_carbon);
    s.m_lime[i] = val(v.m_lime);
    s.m_co2[i] = val(v.m_co2);
    s.msr_qss[i] = val(v.msr_qss);
    s.m_metha[i] = val(v.m_metha);
    s.hl_sell[i] = val(v.hl_sell);
    s.thl_sell[i] = val(v.thl_sell);
    for (std::size_t k = 0; k < kStorageCount; ++k) {
      if (!p.storages[k]) continue;
      s.storage[k].ch[i] = val(v.ch[k]);
      s.storage[k].dis[i] = val(v.dis[k]);
      s.storage[k].level[i] = val(v.level[k]);
    }
  }
  s.peak_buy = value_of(x, bp.peak);
  return s;
}

// --- solve -------------------------------------------------------------------

struct ModelStats {
  std::size_t vars = 0, rows = 0, binaries = 0;
};

struct SolvedProblem {
  SolveStatus status = SolveStatus::error;
  std::string status_text;
  double objective = 0.0;
  double mip_gap = 0.0;
  std::map<std::string, double> groups;
  std::optional<DispatchSolution> solution;
  /// Process penalty D_p evaluated exactly on the decoded trajectory, and as
  /// represented by the encoding.
  double penalty_exact = 0.0;
  double penalty_encoded = 0.0;
  double shortfall = 0.0;
  ModelStats stats;

  double economic() const {
    double v = 0.0;
    for (const char* g : {"grid", "op", "sales", "peak"}) {
      auto it = groups.find(g);
      if (it != groups.end()) v += it->second;
    }
    return v;
  }
  double group(const std::string& name) const {
    auto it = groups.find(name);
    return it == groups.end() ? 0.0 : it->second;
  }
};

inline SolveOptions solve_options(const PlantConfig& p) {
  SolveOptions o;
  o.mip_rel_gap = p.mip_rel_gap;
  o.time_limit_s = p.time_limit_s;
  o.random_seed = static_cast<int>(p.seed % 2147483647ULL);
  return o;
}

/// Builds, solves and decodes one problem. Decoded values are checked against
/// the solver objective and against an independent cost recomputation.
inline SolvedProblem solve_problem(const ProblemSpec& spec, SolverBackend& backend, std::ostream* lp_dump = nullptr) {
  const BuiltProblem bp = build_problem(spec);
  if (lp_dump != nullptr) write_lp(*lp_dump, bp.model);
  const SolveResult r = backend.solve(bp.model, solve_options(*spec.plant));
  SolvedProblem out;
  out.status = r.status;
  out.status_text = r.status_text;
  out.stats = {bp.model.num_vars(), bp.model.num_rows(), bp.model.num_binaries()};
  if (!r.has_solution()) return out;
  out.objective = r.objective;
  out.mip_gap = r.mip_gap;
  out.groups = bp.model.evaluate_groups(r.values);

  const double recomputed = bp.model.evaluate_objective(r.values);
  if (std::abs(recomputed - r.objective) > 1e-6 * std::max(1.0, std::abs(r.objective)))
    fail(ErrorKind::decode_mismatch,
         fmt::format("{}: objective {} from decoded values differs from solver objective {}", bp.model.label(),
                     recomputed, r.objective));

  DispatchSolution sol = decode(bp, spec, r.values);
  const double econ = economic_cost(sol, *spec.plant).total();
  if (std::abs(econ - out.economic()) > 1e-6 * std::max(1.0, std::abs(econ)))
    fail(ErrorKind::decode_mismatch, fmt::format("{}: economic cost {} recomputed from the dispatch differs from {}",
                                                 bp.model.label(), econ, out.economic()));

  if (spec.mode == ProblemMode::dd || spec.mode == ProblemMode::di) {
    for (std::size_t i = 0; i < sol.size(); ++i)
      for (CoreUnit u : kCoreUnits) {
        const auto uc = static_cast<std::size_t>(u);
        const double delta = (sol.core(u)[i] - spec.core_reference[uc][i]) / spec.penalty.psi_max[uc];
        out.penalty_exact += exact_penalty(spec.penalty, u, delta);
        out.penalty_encoded += bp.penalty_terms[i][uc].evaluate(r.values);
      }
  }
  for (const auto& v : bp.periods) out.shortfall += detail::value_of(r.values, v.shortfall);
  out.solution = std::move(sol);
  return out;
}

// --- problem constructors ----------------------------------------------------

inline ProblemSpec make_bd_spec(const PlantConfig& plant, const ExogenousScenario& forecast) {
  ProblemSpec s;
  s.mode = ProblemMode::bd;
  s.plant = &plant;
  s.penalty = plant.penalty;
  s.exo = forecast;
  s.start = UnitState::initial(plant);
  return s;
}

inline ProblemSpec make_dd_spec(const PlantConfig& plant, const ExogenousScenario& forecast,
                                const DispatchSolution& bd, const PenaltyConfig& penalty) {
  ProblemSpec s = make_bd_spec(plant, forecast);
  s.mode = ProblemMode::dd;
  s.penalty = penalty;
  for (CoreUnit u : kCoreUnits) s.core_reference[static_cast<std::size_t>(u)] = bd.core(u);
  return s;
}

}  // namespace steelflex
