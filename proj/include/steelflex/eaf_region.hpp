#pragma once

// Convex operating region of the electric arc furnace.
//
// State z = [x_HDRI, x_CDRI, x_scrap, P_EAF]. Two affine balances tie the
// charge to the electricity drawn and to the steel produced:
//
//   psi_MT . x - P_EAF = 0        (energy balance)
//   psi_MI . x         = M_steel  (metallic mass balance)
//
// plus a box z_min <= z <= z_max. Everything here is pure and immutable.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "steelflex/errors.hpp"

namespace steelflex {

enum class Material : std::size_t { hdri = 0, cdri = 1, scrap = 2 };

inline constexpr std::size_t kMaterialCount = 3;
inline constexpr std::size_t kEafStateDim = 4;
inline constexpr std::size_t kPowerIndex = 3;

inline const char* to_string(Material m) {
  switch (m) {
    case Material::hdri: return "HDRI";
    case Material::cdri: return "CDRI";
    case Material::scrap: return "SCRAP";
  }
  return "?";
}

inline Material material_from_string(const std::string& s) {
  if (s == "HDRI") return Material::hdri;
  if (s == "CDRI") return Material::cdri;
  if (s == "SCRAP") return Material::scrap;
  fail(ErrorKind::schema, "unknown EAF material '" + s + "'");
}

/// Charged material with its sensible-heat conversion. The product
/// specific_heat * delta_temperature converts charged tonnes into the state
/// units of the polytope.
struct EafMaterialSpec {
  Material material = Material::cdri;
  double specific_heat = 1.0;
  double delta_temperature = 1.0;

  double state_per_tonne() const { return specific_heat * delta_temperature; }
  double sensible_heat(double mass) const { return specific_heat * mass * delta_temperature; }

  void validate() const {
    if (!(specific_heat > 0.0))
      fail(ErrorKind::schema, fmt::format("{}: specific_heat must be > 0", to_string(material)));
    if (!(delta_temperature >= 0.0))
      fail(ErrorKind::schema, fmt::format("{}: delta_temperature must be >= 0", to_string(material)));
  }
};

struct EafState {
  std::array<double, kMaterialCount> x{};
  double p_eaf = 0.0;

  std::array<double, kEafStateDim> z() const { return {x[0], x[1], x[2], p_eaf}; }

  static EafState from_z(const std::array<double, kEafStateDim>& z) {
    return EafState{{z[0], z[1], z[2]}, z[3]};
  }
};

struct MembershipResult {
  bool member = false;
  /// Row-normalized equality residuals (energy, mass).
  std::array<double, 2> residual{};
  /// Most negative box slack, min over components of min(z - z_min, z_max - z).
  double min_bound_slack = 0.0;
};

struct PowerRange {
  double p_min = 0.0;
  double p_max = 0.0;
  EafState argmin;
  EafState argmax;
};

class EafPolytope {
 public:
  using Row = std::array<double, kEafStateDim>;

  static constexpr double kEqualityTolerance = 1e-6;
  static constexpr double kBoundTolerance = 1e-9;

  EafPolytope() = default;

  /// The published calibration of the coefficient matrix, with a steel target
  /// of one tonne and bounds loose enough to admit every single-material heat.
  static EafPolytope calibrated() {
    EafPolytope p;
    p.a_eq_ = {{{3.24e-4, 3.11e-3, 2.35e-3, -1.0}, {9.79e-4, 5.50e-3, 5.26e-3, 0.0}}};
    p.b_eq_ = {0.0, 1.0};
    p.z_min_ = {0.0, 0.0, 0.0, 0.0};
    p.z_max_ = {1100.0, 200.0, 200.0, 1.0};
    p.validate();
    return p;
  }

  EafPolytope(std::array<Row, 2> a_eq, std::array<double, 2> b_eq, Row z_min, Row z_max)
      : a_eq_(a_eq), b_eq_(b_eq), z_min_(z_min), z_max_(z_max) {
    validate();
  }

  const std::array<Row, 2>& a_eq() const { return a_eq_; }
  const std::array<double, 2>& b_eq() const { return b_eq_; }
  const Row& z_min() const { return z_min_; }
  const Row& z_max() const { return z_max_; }

  double psi_mt(Material m) const { return a_eq_[0][static_cast<std::size_t>(m)]; }
  double psi_mi(Material m) const { return a_eq_[1][static_cast<std::size_t>(m)]; }
  double steel_target() const { return b_eq_[1]; }

  EafPolytope with_steel_target(double steel) const {
    EafPolytope copy = *this;
    copy.b_eq_[1] = steel;
    return copy;
  }

  /// Scales the right-hand side and the box by lambda (per-heat homogeneity).
  EafPolytope scaled(double lambda) const {
    EafPolytope copy = *this;
    copy.b_eq_[1] *= lambda;
    for (std::size_t i = 0; i < kEafStateDim; ++i) {
      copy.z_min_[i] *= lambda;
      copy.z_max_[i] *= lambda;
    }
    return copy;
  }

  void validate() const {
    if (a_eq_[0][kPowerIndex] != -1.0)
      fail(ErrorKind::schema, "a_eq row 1 must carry -1 in the P_EAF column");
    if (a_eq_[1][kPowerIndex] != 0.0)
      fail(ErrorKind::schema, "a_eq row 2 must carry 0 in the P_EAF column");
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t i = 0; i < kMaterialCount; ++i)
        if (!(a_eq_[r][i] > 0.0))
          fail(ErrorKind::schema, fmt::format("a_eq[{}][{}] must be > 0", r, i));
    if (b_eq_[0] != 0.0) fail(ErrorKind::schema, "b_eq[0] must be 0");
    for (std::size_t i = 0; i < kEafStateDim; ++i)
      if (!(z_min_[i] <= z_max_[i]))
        fail(ErrorKind::schema, fmt::format("z_min[{}] exceeds z_max[{}]", i, i));
  }

  MembershipResult membership(const EafState& state) const {
    const auto z = state.z();
    MembershipResult out;
    for (std::size_t r = 0; r < 2; ++r) {
      double lhs = 0.0;
      double scale = 0.0;
      for (std::size_t i = 0; i < kEafStateDim; ++i) {
        lhs += a_eq_[r][i] * z[i];
        scale = std::max(scale, std::abs(a_eq_[r][i]));
      }
      out.residual[r] = std::abs(lhs - b_eq_[r]) / scale;
    }
    out.min_bound_slack = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < kEafStateDim; ++i)
      out.min_bound_slack = std::min({out.min_bound_slack, z[i] - z_min_[i], z_max_[i] - z[i]});
    out.member = out.residual[0] <= kEqualityTolerance && out.residual[1] <= kEqualityTolerance &&
                 out.min_bound_slack >= -kBoundTolerance;
    return out;
  }

  EafState solve_single_material(Material material, double steel_target) const {
    if (!(steel_target > 0.0))
      fail(ErrorKind::invalid_argument, "steel_target must be > 0");
    const auto m = static_cast<std::size_t>(material);
    const double mi = a_eq_[1][m];
    if (mi == 0.0)
      fail(ErrorKind::singular_coefficient,
           fmt::format("psi_MI for {} is zero", to_string(material)));
    EafState s;
    s.x[m] = steel_target / mi;
    s.p_eaf = a_eq_[0][m] * s.x[m];
    const auto z = s.z();
    for (std::size_t i = 0; i < kEafStateDim; ++i) {
      if (z[i] < z_min_[i] - kBoundTolerance || z[i] > z_max_[i] + kBoundTolerance)
        fail(ErrorKind::infeasible_bounds,
             fmt::format("{}-only heat for {} t violates bound on component {} ({} not in [{}, {}])",
                         to_string(material), steel_target, i, z[i], z_min_[i], z_max_[i]));
    }
    return s;
  }

  /// Minimum and maximum P_EAF over the region for the given steel target,
  /// with witness vertices. Vertices of {A z = b, box} are found by picking two
  /// basic components and pinning the other two at a bound.
  PowerRange min_max_power(double steel_target) const {
    const EafPolytope target = with_steel_target(steel_target);
    std::optional<EafState> lo;
    std::optional<EafState> hi;
    for (std::size_t i = 0; i < kEafStateDim; ++i) {
      for (std::size_t j = i + 1; j < kEafStateDim; ++j) {
        std::array<std::size_t, 2> nonbasic{};
        std::size_t n = 0;
        for (std::size_t c = 0; c < kEafStateDim; ++c)
          if (c != i && c != j) nonbasic[n++] = c;
        for (int pattern = 0; pattern < 4; ++pattern) {
          std::array<double, kEafStateDim> z{};
          z[nonbasic[0]] = (pattern & 1) ? z_max_[nonbasic[0]] : z_min_[nonbasic[0]];
          z[nonbasic[1]] = (pattern & 2) ? z_max_[nonbasic[1]] : z_min_[nonbasic[1]];
          const auto& a = target.a_eq_;
          std::array<double, 2> rhs{};
          for (std::size_t r = 0; r < 2; ++r)
            rhs[r] = target.b_eq_[r] - a[r][nonbasic[0]] * z[nonbasic[0]] -
                     a[r][nonbasic[1]] * z[nonbasic[1]];
          const double det = a[0][i] * a[1][j] - a[0][j] * a[1][i];
          if (std::abs(det) < 1e-14) continue;
          z[i] = (rhs[0] * a[1][j] - a[0][j] * rhs[1]) / det;
          z[j] = (a[0][i] * rhs[1] - rhs[0] * a[1][i]) / det;
          const EafState candidate = EafState::from_z(z);
          if (!target.membership(candidate).member) continue;
          if (!lo || candidate.p_eaf < lo->p_eaf) lo = candidate;
          if (!hi || candidate.p_eaf > hi->p_eaf) hi = candidate;
        }
      }
    }
    if (!lo)
      fail(ErrorKind::empty_region,
           fmt::format("EAF region is empty for steel target {}", steel_target));
    return PowerRange{lo->p_eaf, hi->p_eaf, *lo, *hi};
  }

 private:
  std::array<Row, 2> a_eq_{};
  std::array<double, 2> b_eq_{};
  Row z_min_{};
  Row z_max_{};
};

inline void from_json(const nlohmann::json& j, EafPolytope& p) {
  try {
    const auto a = j.at("a_eq").get<std::array<std::array<double, 4>, 2>>();
    const auto b = j.at("b_eq").get<std::array<double, 2>>();
    const auto lo = j.at("z_min").get<std::array<double, 4>>();
    const auto hi = j.at("z_max").get<std::array<double, 4>>();
    p = EafPolytope(a, b, lo, hi);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string("EAF polytope: ") + e.what());
  }
}

inline void to_json(nlohmann::json& j, const EafPolytope& p) {
  j = nlohmann::json{{"a_eq", p.a_eq()}, {"b_eq", p.b_eq()}, {"z_min", p.z_min()}, {"z_max", p.z_max()}};
}

struct CarbonBalanceCoefficients {
  double psi_c_carbon = 0.0;
  double psi_c_lime = 0.0;
  double psi_c_scrap = 0.0;
  double psi_carbon_per_steel = 0.0;
  double psi_lime_per_steel = 0.0;

  void validate() const {
    for (double v : {psi_c_carbon, psi_c_lime, psi_c_scrap, psi_carbon_per_steel, psi_lime_per_steel})
      if (!(v >= 0.0)) fail(ErrorKind::schema, "carbon balance coefficients must be >= 0");
  }
};

struct CarbonFlows {
  double carbon_powder = 0.0;
  double lime = 0.0;
  double co2 = 0.0;
};

inline CarbonFlows carbon_flows(const CarbonBalanceCoefficients& c, double steel_out, double scrap_in) {
  if (steel_out < 0.0 || scrap_in < 0.0)
    fail(ErrorKind::invalid_argument, "carbon_flows: masses must be >= 0");
  CarbonFlows f;
  f.carbon_powder = c.psi_carbon_per_steel * steel_out;
  f.lime = c.psi_lime_per_steel * steel_out;
  f.co2 = c.psi_c_carbon * f.carbon_powder + c.psi_c_lime * f.lime + c.psi_c_scrap * scrap_in;
  return f;
}

}  // namespace steelflex
