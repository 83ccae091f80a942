#pragma once

// Process-deviation penalties on normalized core-unit deviations
// delta = (psi - psi_ref) / psi_max.
//
//   m1: |delta|                                   (symmetric, no deadband)
//   m2: sum_s (sigma_s delta - eps_s)_+           (asymmetric deadband)
//   m3: sum_s exp(beta_s (sigma_s delta - eps_s)_+) - 1
//
// with sigma_up = +1, sigma_down = -1. A unit's contribution to D_p is
// omega_u * sum_s alpha_s * Phi_s (m1: omega_u * |delta|). In the MILP the
// convex m3 term is an epigraph variable bounded below by tangent lines.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "steelflex/config.hpp"
#include "steelflex/milp.hpp"

namespace steelflex {

inline constexpr std::array<double, 2> kSideSign = {1.0, -1.0};
inline constexpr std::array<const char*, 2> kSideName = {"up", "down"};

/// Tangent points in [eps, 1].
inline std::vector<double> cut_points(double eps, int count, CutSpacing spacing) {
  if (count < 2) fail(ErrorKind::configuration, "tangent_cut_count must be >= 2");
  std::vector<double> pts(static_cast<std::size_t>(count));
  const double span = std::max(0.0, 1.0 - eps);
  for (int j = 0; j < count; ++j) {
    const double s = static_cast<double>(j) / static_cast<double>(count - 1);
    pts[static_cast<std::size_t>(j)] = eps + span * (spacing == CutSpacing::graded ? s * s : s);
  }
  return pts;
}

/// Exact one-sided exponential penalty at signed excursion y = sigma_s delta.
inline double exp_side(double beta, double eps, double y) { return std::exp(beta * std::max(0.0, y - eps)) - 1.0; }

struct TangentCut {
  double slope = 0.0;
  double intercept = 0.0;
  double at(double y) const { return intercept + slope * y; }
};

inline std::vector<TangentCut> exp_tangent_cuts(double beta, double eps, int count, CutSpacing spacing) {
  std::vector<TangentCut> cuts;
  for (double p : cut_points(eps, count, spacing)) {
    const double g = std::exp(beta * (p - eps));
    cuts.push_back(TangentCut{beta * g, (g - 1.0) - beta * g * p});
  }
  return cuts;
}

/// Value taken by the epigraph variable at optimum: max(0, max_j cut_j(y)).
inline double exp_side_epigraph(const std::vector<TangentCut>& cuts, double y) {
  double v = 0.0;
  for (const auto& c : cuts) v = std::max(v, c.at(y));
  return v;
}

/// Unweighted per-side penalty values Phi_s for a deviation.
inline std::array<double, 2> exact_phi(const PenaltyConfig& cfg, CoreUnit unit, double delta) {
  const auto u = static_cast<std::size_t>(unit);
  std::array<double, 2> phi{};
  switch (cfg.mechanism) {
    case PenaltyMechanism::m1:
      phi[delta >= 0.0 ? 0 : 1] = std::abs(delta);
      break;
    case PenaltyMechanism::m2:
      for (int s = 0; s < 2; ++s) phi[s] = std::max(0.0, kSideSign[s] * delta - cfg.epsilon[u][s]);
      break;
    case PenaltyMechanism::m3:
      for (int s = 0; s < 2; ++s) phi[s] = exp_side(cfg.beta[u][s], cfg.epsilon[u][s], kSideSign[s] * delta);
      break;
  }
  return phi;
}

/// Weighted contribution of one unit-period to D_p, evaluated exactly.
inline double exact_penalty(const PenaltyConfig& cfg, CoreUnit unit, double delta) {
  const auto u = static_cast<std::size_t>(unit);
  const auto phi = exact_phi(cfg, unit, delta);
  if (cfg.mechanism == PenaltyMechanism::m1) return cfg.omega[u] * (phi[0] + phi[1]);
  return cfg.omega[u] * (cfg.alpha[u].up * phi[0] + cfg.alpha[u].down * phi[1]);
}

/// Weighted contribution as represented by the MILP encoding.
inline double encoded_penalty(const PenaltyConfig& cfg, CoreUnit unit, double delta) {
  if (cfg.mechanism != PenaltyMechanism::m3) return exact_penalty(cfg, unit, delta);
  const auto u = static_cast<std::size_t>(unit);
  double v = 0.0;
  for (int s = 0; s < 2; ++s) {
    const auto cuts = exp_tangent_cuts(cfg.beta[u][s], cfg.epsilon[u][s], cfg.tangent_cut_count, cfg.cut_spacing);
    v += cfg.alpha[u][s] * exp_side_epigraph(cuts, kSideSign[s] * delta);
  }
  return cfg.omega[u] * v;
}

/// Largest under-approximation of the m3 encoding for one unit-side, scanned
/// on a fine grid of y in [eps, 1].
inline double max_cut_gap(double beta, double eps, int count, CutSpacing spacing, int samples = 2001) {
  const auto cuts = exp_tangent_cuts(beta, eps, count, spacing);
  double gap = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double y = eps + (1.0 - eps) * static_cast<double>(i) / (samples - 1);
    gap = std::max(gap, exp_side(beta, eps, y) - exp_side_epigraph(cuts, y));
  }
  return gap;
}

/// Adds the epigraph variables and rows for one unit-period deviation and
/// returns the weighted penalty expression (omega * sum_s alpha_s phi_s).
inline LinExpr encode_penalty(MilpModel& model, const PenaltyConfig& cfg, CoreUnit unit, const LinExpr& delta,
                              const std::string& tag) {
  const auto u = static_cast<std::size_t>(unit);
  const std::string name = to_string(unit);
  LinExpr out;
  if (cfg.mechanism == PenaltyMechanism::m1) {
    const VarId phi = model.add_var(fmt::format("phi_{}_{}", name, tag), 0.0, kInf);
    model.add_ge(fmt::format("pen_{}_pos_{}", name, tag), LinExpr(phi) - delta, 0.0);
    model.add_ge(fmt::format("pen_{}_neg_{}", name, tag), LinExpr(phi) + delta, 0.0);
    out.add(phi, cfg.omega[u]);
    return out;
  }
  if (cfg.mechanism == PenaltyMechanism::m3 && cfg.tangent_cut_count < 2)
    fail(ErrorKind::configuration, "m3 requires tangent_cut_count >= 2");
  for (int s = 0; s < 2; ++s) {
    const double weight = cfg.omega[u] * cfg.alpha[u][s];
    const VarId phi = model.add_var(fmt::format("phi_{}_{}_{}", name, kSideName[s], tag), 0.0, kInf);
    const LinExpr y = kSideSign[s] * LinExpr(delta);
    if (cfg.mechanism == PenaltyMechanism::m2) {
      model.add_ge(fmt::format("pen_{}_{}_{}", name, kSideName[s], tag), LinExpr(phi) - y,
                   -cfg.epsilon[u][s]);
    } else {
      const auto cuts = exp_tangent_cuts(cfg.beta[u][s], cfg.epsilon[u][s], cfg.tangent_cut_count, cfg.cut_spacing);
      for (std::size_t j = 0; j < cuts.size(); ++j)
        model.add_ge(fmt::format("pen_{}_{}_{}_c{}", name, kSideName[s], tag, j),
                     LinExpr(phi) - cuts[j].slope * y, cuts[j].intercept);
    }
    out.add(phi, weight);
  }
  return out;
}

}  // namespace steelflex
