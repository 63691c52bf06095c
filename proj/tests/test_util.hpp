#pragma once

#include <vector>

#include "evsched/data.hpp"
#include "evsched/types.hpp"

namespace testutil {

inline evsched::ScenarioConfig small_scenario(int n_ports, int horizon) {
  evsched::ScenarioConfig cfg;
  cfg.n_ports = n_ports;
  cfg.horizon_slots = horizon;
  cfg.x_max = 7.0;
  cfg.capacity = 5.6 * n_ports;
  cfg.history_len = 5;
  cfg.user_types = evsched::table1_user_types();
  cfg.lambda_up = 1.0610;
  cfg.lambda_down = -0.2979;
  cfg.price_norm = 1.0;
  cfg.r_max = 2.0;
  return cfg;
}

inline evsched::data::PriceSeries constant_prices(int n, double value) {
  evsched::data::PriceSeries s;
  s.per_slot.assign(n, value);
  s.source = "test";
  return s;
}

inline evsched::data::ArrivalSeries arrivals_from(std::vector<int> counts) {
  evsched::data::ArrivalSeries s;
  s.counts = std::move(counts);
  s.source = "test";
  return s;
}

inline evsched::data::ArrivalSeries no_arrivals(int n) {
  return arrivals_from(std::vector<int>(n, 0));
}

}  // namespace testutil
