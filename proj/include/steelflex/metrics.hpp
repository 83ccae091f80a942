#pragma once

// Dual-side DR evaluation metrics: delivered capacity, recovery ramp,
// RES-load matching, regulation intensity and process-deviation statistics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "steelflex/config.hpp"
#include "steelflex/errors.hpp"

namespace steelflex {

/// Day-ahead DR offer per period. direction is sign(B) with sign(0) = 0.
struct DrOffer {
  std::vector<double> magnitude;
  std::vector<double> direction;

  std::size_t size() const { return magnitude.size(); }
  double signed_value(std::size_t i) const { return direction[i] * magnitude[i]; }

  static DrOffer from_netloads(const std::vector<double>& netload_baseline, const std::vector<double>& netload_dr) {
    if (netload_baseline.size() != netload_dr.size())
      fail(ErrorKind::length_mismatch, "offer: baseline and DR net loads differ in length");
    DrOffer o;
    for (std::size_t i = 0; i < netload_baseline.size(); ++i) {
      const double b = netload_baseline[i] - netload_dr[i];
      o.magnitude.push_back(std::abs(b));
      o.direction.push_back(b > 0.0 ? 1.0 : (b < 0.0 ? -1.0 : 0.0));
    }
    return o;
  }

  DrOffer slice(std::size_t first, std::size_t count) const {
    DrOffer o;
    o.magnitude.assign(magnitude.begin() + first, magnitude.begin() + first + count);
    o.direction.assign(direction.begin() + first, direction.begin() + first + count);
    return o;
  }
};

struct EffectiveCapacity {
  std::vector<double> per_period;  // B_eff^t; 0 outside the offered set
  std::vector<double> delivered;   // B^t = netload_bi - netload_di
  double average = 0.0;
  std::size_t offered_periods = 0;
  bool empty_offer = false;
};

inline EffectiveCapacity effective_capacity(const DrOffer& offer, const std::vector<double>& netload_bi,
                                            const std::vector<double>& netload_di) {
  const std::size_t n = offer.size();
  if (offer.direction.size() != n || netload_bi.size() != n || netload_di.size() != n)
    fail(ErrorKind::length_mismatch,
         fmt::format("effective_capacity: lengths offer={} bi={} di={}", n, netload_bi.size(), netload_di.size()));
  EffectiveCapacity r;
  r.per_period.assign(n, 0.0);
  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    r.delivered.push_back(netload_bi[t] - netload_di[t]);
    if (!(offer.magnitude[t] > 0.0)) continue;
    r.per_period[t] = std::min(offer.magnitude[t], std::max(0.0, offer.direction[t] * r.delivered[t]));
    sum += r.per_period[t];
    ++r.offered_periods;
  }
  r.empty_offer = r.offered_periods == 0;
  r.average = r.empty_offer ? 0.0 : sum / static_cast<double>(r.offered_periods);
  return r;
}

/// Largest step-to-step rise of a net-load series, optionally restricted to
/// steps t -> t+1 with mask[t] set.
inline double recovery_ramp(const std::vector<double>& netload, const std::vector<bool>* mask = nullptr) {
  if (netload.size() < 2) fail(ErrorKind::invalid_argument, "recovery_ramp: need at least 2 periods");
  if (mask != nullptr && mask->size() + 1 < netload.size())
    fail(ErrorKind::length_mismatch, "recovery_ramp: mask shorter than the step count");
  std::optional<double> best;
  for (std::size_t t = 0; t + 1 < netload.size(); ++t) {
    if (mask != nullptr && !(*mask)[t]) continue;
    const double step = netload[t + 1] - netload[t];
    best = best ? std::max(*best, step) : step;
  }
  return best.value_or(0.0);
}

struct MatchingDegree {
  double value = 1.0;
  bool degenerate = false;
};

inline MatchingDegree matching_degree(const std::vector<double>& load, const std::vector<double>& res) {
  if (load.size() != res.size()) fail(ErrorKind::length_mismatch, "matching_degree: series differ in length");
  if (load.size() < 2) fail(ErrorKind::invalid_argument, "matching_degree: need at least 2 periods");
  double mismatch = 0.0, sum_load = 0.0, sum_res = 0.0;
  for (std::size_t t = 1; t < load.size(); ++t) {
    const double dl = load[t] - load[t - 1];
    const double dr = res[t] - res[t - 1];
    mismatch += std::abs(dl - dr);
    sum_load += std::abs(dl);
    sum_res += std::abs(dr);
  }
  const double denom = sum_load + sum_res;
  if (denom == 0.0) return MatchingDegree{1.0, true};
  return MatchingDegree{std::clamp(1.0 - mismatch / denom, 0.0, 1.0), false};
}

inline double nri(const std::vector<double>& series, double capacity) {
  if (!(capacity > 0.0)) fail(ErrorKind::invalid_argument, "nri: capacity must be > 0");
  if (series.size() < 2) fail(ErrorKind::invalid_argument, "nri: need at least 2 periods");
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < series.size(); ++t) total += std::abs(series[t + 1] - series[t]);
  return total / capacity;
}

struct DeviationStats {
  PerCore<std::vector<double>> delta{};  // normalized deviations per unit and period
  double rate = 0.0;                      // sum of |delta|
  double max_abs = 0.0;
  PerCore<double> max_abs_unit{};
};

inline DeviationStats deviation_stats(const PerCore<std::vector<double>>& trajectory,
                                      const PerCore<std::vector<double>>& baseline, const PerCore<double>& psi_max) {
  DeviationStats s;
  for (CoreUnit u : kCoreUnits) {
    const auto k = static_cast<std::size_t>(u);
    if (trajectory[k].empty() || baseline[k].empty())
      fail(ErrorKind::missing_unit, fmt::format("deviation_stats: no series for {}", to_string(u)));
    if (trajectory[k].size() != baseline[k].size())
      fail(ErrorKind::length_mismatch, fmt::format("deviation_stats: {} series differ in length", to_string(u)));
    if (!(psi_max[k] > 0.0)) fail(ErrorKind::invalid_argument, "deviation_stats: psi_max must be > 0");
    for (std::size_t t = 0; t < trajectory[k].size(); ++t) {
      const double d = (trajectory[k][t] - baseline[k][t]) / psi_max[k];
      s.delta[k].push_back(d);
      s.rate += std::abs(d);
      s.max_abs_unit[k] = std::max(s.max_abs_unit[k], std::abs(d));
    }
    s.max_abs = std::max(s.max_abs, s.max_abs_unit[k]);
  }
  return s;
}

}  // namespace steelflex
