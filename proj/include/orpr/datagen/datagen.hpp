#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "orpr/core/types.hpp"

namespace orpr::datagen {

struct PromoWindow {
  int start_day = 0;
  int duration_days = 0;
  double demand_multiplier = 1.0;  // applied multiplicatively inside the window
};

// Shape knobs for synthetic panels. Classes follow the ABC-XYZ framing:
// value tiers (A highest price) cross volatility tiers (X most stable), and
// each (value, volatility) pair forms one category.
struct ScenarioConfig {
  int n_skus = 1;
  int horizon_days = 1;
  double base_demand_min = 2.0;   // units/day
  double base_demand_max = 20.0;  // units/day
  // Coefficient-of-variation level per volatility class, labelled X, Y, Z, ...
  std::vector<double> volatility_cov = {0.4, 0.8, 1.4};
  // Unit price per value class in cents, labelled A, B, C, ... (high to low).
  std::vector<Cents> value_unit_prices = {2000, 800, 300};
  double cost_fraction = 0.6;  // unit_cost = round(cost_fraction * unit_price)
  std::vector<PromoWindow> promo_calendar;
  double seasonal_amplitude = 0.15;  // sinusoid around the base level
  int seasonal_period_days = 28;
  int vlt_min = 1;
  int vlt_max = 4;
  int nrt_days = 7;
  std::uint64_t seed = 0;

  void validate() const;
};

// Deterministic given (config, seed): randomness flows through a per-SKU
// counter-based split of the master seed, so per-SKU streams are independent
// of generation order and thread count.
DemandPanel generate_panel(const ScenarioConfig& config);

// Reads <dir>/skus.csv and <dir>/demand.csv.
DemandPanel load_panel(const std::string& dir);

// Writes <dir>/skus.csv and <dir>/demand.csv (explicit zero-demand rows).
void save_panel(const DemandPanel& panel, const std::string& dir);

// Per-SKU stream seed: order-insensitive split of the master seed.
std::uint64_t split_seed(std::uint64_t master_seed, std::uint64_t index);

}  // namespace orpr::datagen
