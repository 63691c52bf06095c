#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evsched/types.hpp"

namespace evsched::data {

/// Electricity prices at slot resolution, CNY/kWh.
struct PriceSeries {
  std::vector<double> per_slot;
  std::string source;

  size_t size() const { return per_slot.size(); }
  double max_price() const;
};

/// Vehicle arrival counts per slot. When typed counts are present they are
/// indexed [slot][user type] and their per-slot sums equal `counts`.
struct ArrivalSeries {
  std::vector<int> counts;
  std::vector<std::vector<int>> typed;  // empty when the source had no types
  std::string source;

  size_t size() const { return counts.size(); }
  bool has_types() const { return !typed.empty(); }
};

/// Everything needed to reproduce one experiment scenario.
struct ScenarioBundle {
  ScenarioConfig config;
  PriceSeries prices;
  ArrivalSeries arrivals;
  std::uint64_t seed = 0;
};

/// Reads "timestamp,price_cny_per_kwh" rows and expands each row to
/// 60/slot_minutes slots. Rows must be non-negative finite prices; errors
/// carry the offending line number.
PriceSeries load_price_csv(const std::string& path, int slot_minutes = 5);

void write_price_csv(const std::string& path, const PriceSeries& series,
                     int slot_minutes = 5);

/// Reads per-slot arrival counts: columns "slot,arrivals" plus an optional
/// "type" column (index into user_types). Rows sharing a slot accumulate.
ArrivalSeries load_arrivals_csv(const std::string& path, int n_types = 0);

struct SynthParams {
  // hourly price curve: base + amplitude * sin(2*pi*(hour - phase_hours)/24) + noise
  double price_base = 0.70;
  double price_amplitude = 0.35;
  double price_phase_hours = 9.0;   // valley in the early morning
  double price_noise = 0.04;        // stddev of hourly Gaussian noise
  // arrival intensity: per-slot Poisson with morning/evening Gaussian bumps
  double arrival_base = 0.08;       // vehicles per slot off peak
  double morning_peak_hour = 8.5;
  double evening_peak_hour = 18.0;
  double peak_width_hours = 1.8;
  double morning_peak_rate = 1.0;   // extra vehicles per slot at the bump top
  double evening_peak_rate = 1.2;
};

/// Deterministic synthetic scenario: sinusoidal daily prices with seeded
/// noise (clipped at zero) and a time-inhomogeneous Poisson arrival stream.
ScenarioBundle synthesize(const ScenarioConfig& config, std::uint64_t seed,
                          const SynthParams& params = {});

PriceSeries scale_prices(PriceSeries series, double factor);

nlohmann::json bundle_to_json(const ScenarioBundle& bundle);
ScenarioBundle bundle_from_json(const nlohmann::json& j);
void save_bundle(const std::string& path, const ScenarioBundle& bundle);
ScenarioBundle load_bundle(const std::string& path);

void to_json(nlohmann::json& j, const SynthParams& p);
void from_json(const nlohmann::json& j, SynthParams& p);

}  // namespace evsched::data
