#pragma once

// Shared fixtures: bundled inputs, small derived plants and a seeded RNG for
// the hand-rolled property generators.

#include <cstdint>
#include <initializer_list>
#include <filesystem>
#include <random>
#include <string>

#include "steelflex/config.hpp"

namespace steelflex::testing {

inline std::filesystem::path data_dir() { return STEELFLEX_DATA_DIR; }

inline PlantConfig bundled_plant() { return load_plant_config(data_dir() / "plant_config.json"); }
inline ExogenousScenario bundled_scenario() { return load_scenario(data_dir() / "scenario_synthetic.csv"); }

/// The bundled plant cut down to a T-period horizon with the given storages
/// (BESS and CST by default). Without a DRI silo every tonne of DRI is
/// hot-charged one period later, so the EAF baseline and order follow from
/// the HDRI steel yield. Without a hydrogen tank the locked AE cannot absorb
/// H2 forecast noise, so noisy runs need "HT" kept.
inline json toy_config_json(int periods, std::initializer_list<const char*> storages = {"BESS", "CST"}) {
  json j = read_json_file(data_dir() / "plant_config.json");
  j["eaf"].erase("polytope_file");
  j["eaf"]["polytope"] = read_json_file(data_dir() / "eaf_calibration.json");
  j["horizon"]["periods"] = periods;
  j["horizon"]["lookahead"] = periods;
  json kept = json::array();
  for (const auto& s : j["storages"])
    for (const char* id : storages)
      if (s["id"] == id) kept.push_back(s);
  j["storages"] = kept;
  const PlantConfig probe = parse_plant_config(j);
  const double yield =
      probe.eaf_polytope.psi_mi(Material::hdri) * probe.eaf_materials[0].state_per_tonne() / probe.eaf_polytope.steel_target();
  const double sf = probe.baseline[static_cast<std::size_t>(CoreUnit::sf)];
  j["baseline"]["EAF"] = yield * sf;
  j["orders"]["SF"] = sf * periods;
  j["orders"]["EAF"] = yield * sf * periods;
  return j;
}

inline PlantConfig toy_plant(int periods) { return parse_plant_config(toy_config_json(periods)); }

/// Scenario rows [first, first + periods) of the bundled day.
inline ExogenousScenario toy_truth(int periods, int first = 6) {
  return bundled_scenario().slice(static_cast<std::size_t>(first), static_cast<std::size_t>(periods));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  bool coin() { return integer(0, 1) == 1; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace steelflex::testing
