#include "evsched/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "evsched/csv.hpp"

namespace evsched::data {

double PriceSeries::max_price() const {
  double m = 0.0;
  for (double p : per_slot) m = std::max(m, p);
  return m;
}

PriceSeries load_price_csv(const std::string& path, int slot_minutes) {
  if (slot_minutes <= 0 || 60 % slot_minutes != 0)
    throw std::invalid_argument("load_price_csv: slot_minutes must divide 60");
  const int expand = 60 / slot_minutes;

  csv::Table t = csv::read_file(path);
  int price_col = t.column_index("price_cny_per_kwh");
  if (price_col < 0)
    throw std::runtime_error(path + ": missing required column 'price_cny_per_kwh'");
  if (t.column_index("timestamp") < 0)
    throw std::runtime_error(path + ": missing required column 'timestamp'");

  PriceSeries series;
  series.source = path;
  series.per_slot.reserve(t.rows.size() * expand);
  for (size_t r = 0; r < t.rows.size(); ++r) {
    std::ostringstream ctx;
    ctx << path << " line " << (r + 2);
    double price = csv::parse_double(t.rows[r][price_col], ctx.str());
    if (price < 0.0)
      throw std::runtime_error(ctx.str() + ": negative price " + t.rows[r][price_col]);
    for (int k = 0; k < expand; ++k) series.per_slot.push_back(price);
  }
  return series;
}

void write_price_csv(const std::string& path, const PriceSeries& series,
                     int slot_minutes) {
  if (slot_minutes <= 0 || 60 % slot_minutes != 0)
    throw std::invalid_argument("write_price_csv: slot_minutes must divide 60");
  const int expand = 60 / slot_minutes;
  if (series.per_slot.size() % expand != 0)
    throw std::invalid_argument("write_price_csv: series length not a whole number of hours");
  csv::Writer w(path);
  w.header({"timestamp", "price_cny_per_kwh"});
  for (size_t h = 0; h * expand < series.per_slot.size(); ++h) {
    w.row({std::to_string(h), csv::format_double(series.per_slot[h * expand])});
  }
}

ArrivalSeries load_arrivals_csv(const std::string& path, int n_types) {
  csv::Table t = csv::read_file(path);
  int slot_col = t.column_index("slot");
  int count_col = t.column_index("arrivals");
  int type_col = t.column_index("type");
  if (slot_col < 0) throw std::runtime_error(path + ": missing required column 'slot'");
  if (count_col < 0)
    throw std::runtime_error(path + ": missing required column 'arrivals'");
  if (type_col >= 0 && n_types <= 0)
    throw std::runtime_error(path + ": typed arrivals need a positive n_types");

  ArrivalSeries series;
  series.source = path;
  long max_slot = -1;
  struct Row { long slot; long count; int type; };
  std::vector<Row> rows;
  rows.reserve(t.rows.size());
  for (size_t r = 0; r < t.rows.size(); ++r) {
    std::ostringstream ctx;
    ctx << path << " line " << (r + 2);
    long slot = csv::parse_long(t.rows[r][slot_col], ctx.str());
    long count = csv::parse_long(t.rows[r][count_col], ctx.str());
    if (slot < 0) throw std::runtime_error(ctx.str() + ": negative slot index");
    if (count < 0) throw std::runtime_error(ctx.str() + ": negative arrival count");
    int type = -1;
    if (type_col >= 0) {
      type = static_cast<int>(csv::parse_long(t.rows[r][type_col], ctx.str()));
      if (type < 0 || type >= n_types)
        throw std::runtime_error(ctx.str() + ": type index out of range");
    }
    rows.push_back({slot, count, type});
    max_slot = std::max(max_slot, slot);
  }

  series.counts.assign(static_cast<size_t>(max_slot + 1), 0);
  if (type_col >= 0)
    series.typed.assign(static_cast<size_t>(max_slot + 1),
                        std::vector<int>(n_types, 0));
  for (const auto& row : rows) {
    series.counts[row.slot] += static_cast<int>(row.count);
    if (row.type >= 0) series.typed[row.slot][row.type] += static_cast<int>(row.count);
  }
  return series;
}

ScenarioBundle synthesize(const ScenarioConfig& config, std::uint64_t seed,
                          const SynthParams& params) {
  config.validate();
  const int T = config.horizon_slots;
  const int slots_per_hour = 60 / config.slot_minutes;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  ScenarioBundle bundle;
  bundle.config = config;
  bundle.seed = seed;

  // Hourly price values repeated across the slots of each hour.
  const int hours = (T + slots_per_hour - 1) / slots_per_hour;
  bundle.prices.source = "synthetic";
  bundle.prices.per_slot.reserve(static_cast<size_t>(hours) * slots_per_hour);
  for (int h = 0; h < hours; ++h) {
    double hour = static_cast<double>(h % 24);
    double price = params.price_base +
                   params.price_amplitude *
                       std::sin(2.0 * M_PI * (hour - params.price_phase_hours) / 24.0) +
                   params.price_noise * gauss(rng);
    price = std::max(0.0, price);
    for (int k = 0; k < slots_per_hour; ++k) bundle.prices.per_slot.push_back(price);
  }
  bundle.prices.per_slot.resize(T);

  bundle.arrivals.source = "synthetic";
  bundle.arrivals.counts.reserve(T);
  auto bump = [&](double hod, double center) {
    double d = hod - center;
    return std::exp(-d * d / (2.0 * params.peak_width_hours * params.peak_width_hours));
  };
  for (int t = 0; t < T; ++t) {
    double hod = std::fmod(static_cast<double>(t) / slots_per_hour, 24.0);
    double rate = params.arrival_base +
                  params.morning_peak_rate * bump(hod, params.morning_peak_hour) +
                  params.evening_peak_rate * bump(hod, params.evening_peak_hour);
    std::poisson_distribution<int> pois(rate);
    bundle.arrivals.counts.push_back(pois(rng));
  }

  bundle.config.price_norm = std::max(1e-9, bundle.prices.max_price());
  return bundle;
}

PriceSeries scale_prices(PriceSeries series, double factor) {
  if (factor <= 0.0) throw std::invalid_argument("scale_prices: factor must be > 0");
  for (double& p : series.per_slot) p *= factor;
  return series;
}

nlohmann::json bundle_to_json(const ScenarioBundle& bundle) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["config"] = bundle.config;
  j["seed"] = bundle.seed;
  j["prices"] = {{"per_slot", bundle.prices.per_slot}, {"source", bundle.prices.source}};
  j["arrivals"] = {{"counts", bundle.arrivals.counts},
                   {"source", bundle.arrivals.source}};
  if (bundle.arrivals.has_types()) j["arrivals"]["typed"] = bundle.arrivals.typed;
  return j;
}

ScenarioBundle bundle_from_json(const nlohmann::json& j) {
  if (j.value("format_version", 0) != 1)
    throw std::runtime_error("scenario bundle: unsupported format_version");
  ScenarioBundle b;
  b.config = j.at("config").get<ScenarioConfig>();
  b.seed = j.at("seed").get<std::uint64_t>();
  b.prices.per_slot = j.at("prices").at("per_slot").get<std::vector<double>>();
  b.prices.source = j.at("prices").value("source", "");
  b.arrivals.counts = j.at("arrivals").at("counts").get<std::vector<int>>();
  b.arrivals.source = j.at("arrivals").value("source", "");
  if (j.at("arrivals").contains("typed"))
    b.arrivals.typed = j.at("arrivals").at("typed").get<std::vector<std::vector<int>>>();
  return b;
}

void save_bundle(const std::string& path, const ScenarioBundle& bundle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write scenario bundle: " + path);
  out << bundle_to_json(bundle).dump(2) << '\n';
}

ScenarioBundle load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read scenario bundle: " + path);
  nlohmann::json j;
  in >> j;
  return bundle_from_json(j);
}

void to_json(nlohmann::json& j, const SynthParams& p) {
  j = nlohmann::json{{"price_base", p.price_base},
                     {"price_amplitude", p.price_amplitude},
                     {"price_phase_hours", p.price_phase_hours},
                     {"price_noise", p.price_noise},
                     {"arrival_base", p.arrival_base},
                     {"morning_peak_hour", p.morning_peak_hour},
                     {"evening_peak_hour", p.evening_peak_hour},
                     {"peak_width_hours", p.peak_width_hours},
                     {"morning_peak_rate", p.morning_peak_rate},
                     {"evening_peak_rate", p.evening_peak_rate}};
}

void from_json(const nlohmann::json& j, SynthParams& p) {
  SynthParams d;
  p.price_base = j.value("price_base", d.price_base);
  p.price_amplitude = j.value("price_amplitude", d.price_amplitude);
  p.price_phase_hours = j.value("price_phase_hours", d.price_phase_hours);
  p.price_noise = j.value("price_noise", d.price_noise);
  p.arrival_base = j.value("arrival_base", d.arrival_base);
  p.morning_peak_hour = j.value("morning_peak_hour", d.morning_peak_hour);
  p.evening_peak_hour = j.value("evening_peak_hour", d.evening_peak_hour);
  p.peak_width_hours = j.value("peak_width_hours", d.peak_width_hours);
  p.morning_peak_rate = j.value("morning_peak_rate", d.morning_peak_rate);
  p.evening_peak_rate = j.value("evening_peak_rate", d.evening_peak_rate);
}

}  // namespace evsched::data
