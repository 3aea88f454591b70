#include "orpr/datagen/datagen.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "orpr/core/csv.hpp"
#include "orpr/core/errors.hpp"

namespace orpr::datagen {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string class_label(char base, std::size_t index) {
  std::string label(1, static_cast<char>(base + index % 26));
  if (index >= 26) label += std::to_string(index / 26);
  return label;
}

// Negative-binomial draw with the requested mean and coefficient of
// variation, realized as a Gamma-Poisson mixture. When the requested CoV is
// below the Poisson floor 1/sqrt(mean) the draw degenerates to Poisson.
Units draw_demand(double mean, double cov, std::mt19937_64& rng) {
  if (mean <= 0.0) return 0;
  const double cov2 = cov * cov;
  const double poisson_floor = 1.0 / mean;
  double lambda = mean;
  if (cov2 > poisson_floor + 1e-12) {
    const double shape = 1.0 / (cov2 - poisson_floor);
    std::gamma_distribution<double> gamma(shape, mean / shape);
    lambda = gamma(rng);
  }
  std::poisson_distribution<std::int64_t> poisson(lambda);
  return poisson(rng);
}

}  // namespace

std::uint64_t split_seed(std::uint64_t master_seed, std::uint64_t index) {
  std::uint64_t state = master_seed ^ (0x9E3779B97F4A7C15ULL * (index + 1));
  splitmix64(state);
  return splitmix64(state);
}

void ScenarioConfig::validate() const {
  if (n_skus < 1) throw ConfigError("scenario needs at least one SKU");
  if (horizon_days < 1) throw ConfigError("scenario horizon_days must be >= 1");
  if (base_demand_min <= 0.0 || base_demand_max < base_demand_min) {
    throw ConfigError("base demand range must satisfy 0 < min <= max");
  }
  if (volatility_cov.empty()) throw ConfigError("need at least one volatility class");
  for (double cov : volatility_cov) {
    if (cov <= 0.0) throw ConfigError("volatility CoV levels must be > 0");
  }
  if (value_unit_prices.empty()) throw ConfigError("need at least one value class");
  for (Cents price : value_unit_prices) {
    if (price <= 0) throw ConfigError("value class unit prices must be > 0");
  }
  if (cost_fraction <= 0.0 || cost_fraction > 1.0) {
    throw ConfigError("cost_fraction must lie in (0, 1]");
  }
  for (const auto& promo : promo_calendar) {
    if (promo.demand_multiplier <= 0.0) {
      throw ConfigError("promo demand multipliers must be > 0");
    }
    if (promo.start_day < 0 || promo.duration_days < 1) {
      throw ConfigError("promo windows need start_day >= 0 and duration >= 1");
    }
  }
  if (seasonal_amplitude < 0.0 || seasonal_amplitude >= 1.0) {
    throw ConfigError("seasonal_amplitude must lie in [0, 1)");
  }
  if (seasonal_period_days < 1) throw ConfigError("seasonal_period_days must be >= 1");
  if (vlt_min < 0 || vlt_max < vlt_min) throw ConfigError("bad vlt range");
  if (nrt_days < 1) throw ConfigError("nrt_days must be >= 1");
}

DemandPanel generate_panel(const ScenarioConfig& config) {
  config.validate();

  // Promo multiplier per day (overlapping windows multiply).
  std::vector<double> promo_mult(static_cast<std::size_t>(config.horizon_days), 1.0);
  for (const auto& promo : config.promo_calendar) {
    for (int d = promo.start_day;
         d < promo.start_day + promo.duration_days && d < config.horizon_days; ++d) {
      if (d >= 0) promo_mult[static_cast<std::size_t>(d)] *= promo.demand_multiplier;
    }
  }

  DemandPanel panel;
  panel.horizon_days = config.horizon_days;
  panel.skus.resize(static_cast<std::size_t>(config.n_skus));
  panel.demand.resize(static_cast<std::size_t>(config.n_skus));

  const std::size_t n_value = config.value_unit_prices.size();
  const std::size_t n_vol = config.volatility_cov.size();

  for (std::size_t s = 0; s < static_cast<std::size_t>(config.n_skus); ++s) {
    std::mt19937_64 rng(split_seed(config.seed, s));

    const std::size_t value_idx = s % n_value;
    const std::size_t vol_idx = (s / n_value) % n_vol;
    const double cov = config.volatility_cov[vol_idx];

    SkuRecord& sku = panel.skus[s];
    char buf[16];
    std::snprintf(buf, sizeof(buf), "SKU%04zu", s);
    sku.sku_id = buf;
    sku.value_class = class_label('A', value_idx);
    sku.volatility_class = class_label('X', vol_idx);
    sku.category_id = sku.value_class + "-" + sku.volatility_class;
    sku.unit_price = config.value_unit_prices[value_idx];
    sku.unit_cost = static_cast<Cents>(std::llround(
        config.cost_fraction * static_cast<double>(sku.unit_price)));
    if (sku.unit_cost < 1) sku.unit_cost = 1;
    sku.nrt_days = config.nrt_days;

    std::uniform_real_distribution<double> base_dist(config.base_demand_min,
                                                     config.base_demand_max);
    const double base = base_dist(rng);
    std::uniform_int_distribution<int> vlt_dist(config.vlt_min, config.vlt_max);
    sku.vlt_days = vlt_dist(rng);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * kPi);
    const double phase = phase_dist(rng);

    auto& trace = panel.demand[s];
    trace.resize(static_cast<std::size_t>(config.horizon_days));
    for (int t = 0; t < config.horizon_days; ++t) {
      const double seasonal =
          1.0 + config.seasonal_amplitude *
                    std::sin(2.0 * kPi * t / config.seasonal_period_days + phase);
      const double mean = base * seasonal * promo_mult[static_cast<std::size_t>(t)];
      trace[static_cast<std::size_t>(t)] = draw_demand(mean, cov, rng);
    }
  }

  panel.validate();
  return panel;
}

void save_panel(const DemandPanel& panel, const std::string& dir) {
  panel.validate();
  std::filesystem::create_directories(dir);

  std::vector<std::vector<std::string>> sku_rows;
  sku_rows.reserve(panel.skus.size());
  for (const auto& sku : panel.skus) {
    sku_rows.push_back({sku.sku_id, sku.category_id, format_money(sku.unit_cost),
                        format_money(sku.unit_price), std::to_string(sku.vlt_days),
                        std::to_string(sku.nrt_days), sku.volatility_class,
                        sku.value_class});
  }
  csv::write_file(dir + "/skus.csv",
                  {"sku_id", "category_id", "unit_cost", "unit_price", "vlt_days",
                   "nrt_days", "volatility_class", "value_class"},
                  sku_rows);

  std::vector<std::vector<std::string>> demand_rows;
  demand_rows.reserve(panel.skus.size() * static_cast<std::size_t>(panel.horizon_days));
  for (std::size_t s = 0; s < panel.skus.size(); ++s) {
    for (int t = 0; t < panel.horizon_days; ++t) {
      demand_rows.push_back({panel.skus[s].sku_id, std::to_string(t),
                             std::to_string(panel.demand[s][static_cast<std::size_t>(t)])});
    }
  }
  csv::write_file(dir + "/demand.csv", {"sku_id", "day_index", "units"}, demand_rows);
}

DemandPanel load_panel(const std::string& dir) {
  const auto skus = csv::read_file(dir + "/skus.csv");
  const int c_id = skus.column("sku_id");
  const int c_cat = skus.column("category_id");
  const int c_cost = skus.column("unit_cost");
  const int c_price = skus.column("unit_price");
  const int c_vlt = skus.column("vlt_days");
  const int c_nrt = skus.column("nrt_days");
  const int c_vol = skus.column("volatility_class");
  const int c_val = skus.column("value_class");

  DemandPanel panel;
  for (std::size_t r = 0; r < skus.rows.size(); ++r) {
    const auto& row = skus.rows[r];
    const int line = static_cast<int>(r) + 2;
    SkuRecord sku;
    sku.sku_id = row[static_cast<std::size_t>(c_id)];
    sku.category_id = row[static_cast<std::size_t>(c_cat)];
    sku.unit_cost = parse_money(row[static_cast<std::size_t>(c_cost)]);
    sku.unit_price = parse_money(row[static_cast<std::size_t>(c_price)]);
    sku.vlt_days = static_cast<int>(
        csv::parse_int(row[static_cast<std::size_t>(c_vlt)], "vlt_days", line));
    sku.nrt_days = static_cast<int>(
        csv::parse_int(row[static_cast<std::size_t>(c_nrt)], "nrt_days", line));
    sku.volatility_class = row[static_cast<std::size_t>(c_vol)];
    sku.value_class = row[static_cast<std::size_t>(c_val)];
    panel.skus.push_back(std::move(sku));
  }

  const auto demand = csv::read_file(dir + "/demand.csv");
  const int d_id = demand.column("sku_id");
  const int d_day = demand.column("day_index");
  const int d_units = demand.column("units");

  int horizon = 0;
  for (std::size_t r = 0; r < demand.rows.size(); ++r) {
    const int day = static_cast<int>(csv::parse_int(
        demand.rows[r][static_cast<std::size_t>(d_day)], "day_index",
        static_cast<int>(r) + 2));
    if (day < 0) {
      throw ParseError("demand.csv line " + std::to_string(r + 2) +
                       ": negative day_index");
    }
    horizon = std::max(horizon, day + 1);
  }
  panel.horizon_days = horizon;
  panel.demand.assign(panel.skus.size(),
                      std::vector<Units>(static_cast<std::size_t>(horizon), 0));

  std::set<std::pair<std::size_t, int>> seen;
  for (std::size_t r = 0; r < demand.rows.size(); ++r) {
    const auto& row = demand.rows[r];
    const int line = static_cast<int>(r) + 2;
    const std::string& id = row[static_cast<std::size_t>(d_id)];
    std::size_t sku_idx;
    try {
      sku_idx = panel.sku_index(id);
    } catch (const DomainError&) {
      throw ParseError("demand.csv line " + std::to_string(line) +
                       ": unknown sku_id '" + id + "'");
    }
    const int day = static_cast<int>(
        csv::parse_int(row[static_cast<std::size_t>(d_day)], "day_index", line));
    const Units units =
        csv::parse_int(row[static_cast<std::size_t>(d_units)], "units", line);
    if (units < 0) {
      throw ParseError("demand.csv line " + std::to_string(line) +
                       ": negative demand " + std::to_string(units));
    }
    if (!seen.insert({sku_idx, day}).second) {
      throw ParseError("demand.csv line " + std::to_string(line) +
                       ": duplicate (sku, day) row for " + id + ", day " +
                       std::to_string(day));
    }
    panel.demand[sku_idx][static_cast<std::size_t>(day)] = units;
  }

  panel.validate();
  return panel;
}

}  // namespace orpr::datagen
