#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orpr/core/money.hpp"

namespace orpr {

using Units = std::int64_t;

struct SkuRecord {
  std::string sku_id;
  std::string category_id;
  Cents unit_cost = 0;   // c_i, per unit
  Cents unit_price = 0;  // p_i, per unit
  int vlt_days = 0;      // vendor lead time
  int nrt_days = 1;      // review period
  std::string volatility_class;
  std::string value_class;

  void validate() const;  // unit_price >= unit_cost > 0, vlt >= 0, nrt >= 1
};

// Per-SKU daily demand traces plus attributes; the ground truth every
// component consumes.
struct DemandPanel {
  std::vector<SkuRecord> skus;
  std::vector<std::vector<Units>> demand;  // [sku][day]
  int horizon_days = 0;

  void validate() const;
  std::size_t sku_index(const std::string& sku_id) const;  // throws DomainError
};

// Integer decision grid: candidate inventory days v in [min_days, max_days].
struct CandidateGrid {
  int min_days = 1;  // L
  int max_days = 1;  // U

  int size() const { return max_days - min_days + 1; }
  bool contains(int v) const { return v >= min_days && v <= max_days; }
  int index_of(int v) const { return v - min_days; }
  int value_at(int index) const { return min_days + index; }
  void validate() const;  // 1 <= L <= U
};

struct SimConfig {
  int horizon_days = 0;
  Units initial_inventory = 0;
  // When set, the starting stock is round(initial_cover_days * mean demand
  // of the simulated trace) instead of initial_inventory, so every SKU
  // starts with proportionate cover.
  std::optional<double> initial_cover_days;
  int demand_avg_window = 7;  // trailing days used for the running demand mean
  int review_offset = 0;      // first ordering day
  // When set, the running demand mean is pinned to this value on every
  // ordering day (used by fixtures and monotonicity checks).
  std::optional<double> fixed_demand_avg;

  void validate() const;
};

struct SimOutcome {
  Cents stock_value = 0;       // sum_t c_i * I_t (post-demand inventory)
  Cents lost_sales_value = 0;  // sum_t p_i * Lost_t
  std::vector<Units> inventory_trace;  // I_t after demand, one per day
  std::vector<Units> lost_trace;       // Lost_t, one per day
  std::vector<Units> arrivals_trace;   // units received at the start of each day
  Units sold_units_total = 0;
  int instock_days = 0;  // days with Lost_t == 0
  double avg_inventory_units = 0.0;

  // Order-pipeline accounting, used by the conservation checks.
  Units ordered_units_total = 0;
  Units arrived_units_total = 0;
  Units pipeline_end_units = 0;  // ordered but not arrived within horizon
};

struct MetricSet {
  std::optional<double> turnover_days;  // empty when average demand is zero
  double instock_rate = 0.0;
  Cents holding_cost = 0;
  Cents stockout_cost = 0;
  Cents total_cost = 0;
};

// Simulated stock/loss tables feeding the selection model.
struct ParamTable {
  std::vector<std::string> category_ids;
  CandidateGrid grid;
  std::vector<std::vector<Cents>> stock;  // [category][v - L]
  std::vector<std::vector<Cents>> loss;   // [category][v - L]
  Cents sale_total = 0;                   // SALE
};

struct SelectionProblem {
  CandidateGrid grid;
  std::vector<std::vector<Cents>> stock;  // [category][v - L]
  std::vector<std::vector<Cents>> loss;   // [category][v - L]
  Cents sale_total = 0;
  double alpha_loss = 0.0;  // in [0, 1]

  int n_categories() const { return static_cast<int>(stock.size()); }
  Cents loss_budget() const;  // floor(SALE * (1 - alpha_loss))
  void validate() const;
};

struct SelectionSolution {
  std::vector<int> chosen_days;  // X_i, one v per category
  Cents objective_value = 0;     // sum of chosen stock values
  Cents total_loss = 0;          // sum of chosen loss values
  double optimality_gap = 0.0;   // certified (primal - bound) / primal
};

struct LabelRow {
  std::string category_id;
  int epoch_start_day = 0;
  int v_days = 0;
  double alpha_used = 0.0;
};

struct LabelSet {
  std::vector<LabelRow> rows;
};

}  // namespace orpr
