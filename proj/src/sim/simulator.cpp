#include "orpr/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "orpr/core/csv.hpp"
#include "orpr/core/errors.hpp"

namespace orpr::sim {

Units round_half_up(double x) {
  return static_cast<Units>(std::floor(x + 0.5));
}

double demand_average(DemandTrace trace, const SimConfig& cfg, int day) {
  if (cfg.fixed_demand_avg) return *cfg.fixed_demand_avg;
  const int begin = std::max(0, day - cfg.demand_avg_window);
  if (day <= begin) return 0.0;
  Units total = 0;
  for (int t = begin; t < day; ++t) total += trace[static_cast<std::size_t>(t)];
  return static_cast<double>(total) / static_cast<double>(day - begin);
}

int count_review_days(const SimConfig& cfg, int nrt_days) {
  if (cfg.review_offset >= cfg.horizon_days) return 0;
  return (cfg.horizon_days - 1 - cfg.review_offset) / nrt_days + 1;
}

SimOutcome run_simulation(DemandTrace trace, const SkuRecord& sku,
                          const SimConfig& cfg, const OrderPolicy& policy) {
  cfg.validate();
  if (trace.empty()) throw DomainError("zero-length demand trace");
  if (static_cast<int>(trace.size()) != cfg.horizon_days) {
    throw DomainError("trace length " + std::to_string(trace.size()) +
                      " != horizon " + std::to_string(cfg.horizon_days));
  }

  const int horizon = cfg.horizon_days;
  SimOutcome out;
  out.inventory_trace.resize(static_cast<std::size_t>(horizon));
  out.lost_trace.resize(static_cast<std::size_t>(horizon));
  out.arrivals_trace.assign(static_cast<std::size_t>(horizon), 0);

  std::vector<Units>& arrivals = out.arrivals_trace;
  Units on_hand = cfg.initial_inventory;
  if (cfg.initial_cover_days) {
    Units demand_total = 0;
    for (Units d : trace) demand_total += d;
    const double mean = static_cast<double>(demand_total) / horizon;
    on_hand = round_half_up(*cfg.initial_cover_days * mean);
  }
  Units arrived_so_far = 0;
  int review_index = 0;
  Units inventory_sum = 0;

  for (int t = 0; t < horizon; ++t) {
    on_hand += arrivals[static_cast<std::size_t>(t)];
    arrived_so_far += arrivals[static_cast<std::size_t>(t)];

    const Units demand = trace[static_cast<std::size_t>(t)];
    const Units lost = std::max<Units>(demand - on_hand, 0);
    const Units sold = demand - lost;
    on_hand = std::max<Units>(on_hand - demand, 0);

    out.lost_trace[static_cast<std::size_t>(t)] = lost;
    out.inventory_trace[static_cast<std::size_t>(t)] = on_hand;
    out.sold_units_total += sold;
    if (lost == 0) ++out.instock_days;
    inventory_sum += on_hand;
    out.stock_value += sku.unit_cost * on_hand;
    out.lost_sales_value += sku.unit_price * lost;

    const bool is_review =
        t >= cfg.review_offset && (t - cfg.review_offset) % sku.nrt_days == 0;
    if (is_review) {
      ReviewState state;
      state.day = t;
      state.review_index = review_index++;
      state.on_hand = on_hand;
      state.pipeline = out.ordered_units_total - arrived_so_far;
      state.demand_avg = demand_average(trace, cfg, t);
      const Units quantity = policy(state);
      if (quantity < 0) throw DomainError("order policy returned negative quantity");
      if (quantity > 0) {
        out.ordered_units_total += quantity;
        // VLT = 0 means next-morning availability: the review runs after the
        // day's demand, so the earliest usable arrival is t + 1.
        const int arrival_day = t + std::max(sku.vlt_days, 1);
        if (arrival_day < horizon) {
          arrivals[static_cast<std::size_t>(arrival_day)] += quantity;
        }
      }
    }
  }

  // arrived_units_total counts deliveries inside the horizon.
  out.arrived_units_total = arrived_so_far;
  out.pipeline_end_units = out.ordered_units_total - out.arrived_units_total;
  out.avg_inventory_units =
      static_cast<double>(inventory_sum) / static_cast<double>(horizon);
  return out;
}

SimOutcome evaluate_candidate(DemandTrace trace, const SkuRecord& sku,
                              const CandidateGrid& grid, int v_days,
                              const SimConfig& cfg) {
  grid.validate();
  if (!grid.contains(v_days)) {
    throw DomainError("candidate v=" + std::to_string(v_days) + " outside grid [" +
                      std::to_string(grid.min_days) + ", " +
                      std::to_string(grid.max_days) + "]");
  }
  return run_simulation(trace, sku, cfg, [v_days](const ReviewState& state) {
    return round_half_up(v_days * state.demand_avg);
  });
}

SimOutcome simulate_policy(DemandTrace trace, const SkuRecord& sku,
                           std::span<const int> decisions, const SimConfig& cfg) {
  cfg.validate();
  const int reviews = count_review_days(cfg, sku.nrt_days);
  if (static_cast<int>(decisions.size()) != reviews) {
    throw DomainError("expected " + std::to_string(reviews) +
                      " decisions (one per ordering day), got " +
                      std::to_string(decisions.size()));
  }
  return run_simulation(trace, sku, cfg, [decisions](const ReviewState& state) {
    const int v = decisions[static_cast<std::size_t>(state.review_index)];
    if (v < 0) throw DomainError("negative inventory-days decision");
    return round_half_up(v * state.demand_avg);
  });
}

MetricSet compute_metrics(const SimOutcome& outcome, DemandTrace trace) {
  if (trace.size() != outcome.inventory_trace.size()) {
    throw DomainError("trace length inconsistent with outcome");
  }
  MetricSet metrics;
  const auto horizon = static_cast<double>(trace.size());
  Units demand_total = 0;
  for (Units d : trace) demand_total += d;
  const double avg_demand = static_cast<double>(demand_total) / horizon;
  if (avg_demand > 0.0) {
    metrics.turnover_days = outcome.avg_inventory_units / avg_demand;
  }
  metrics.instock_rate = static_cast<double>(outcome.instock_days) / horizon;
  metrics.holding_cost = outcome.stock_value;
  metrics.stockout_cost = outcome.lost_sales_value;
  metrics.total_cost = metrics.holding_cost + metrics.stockout_cost;
  return metrics;
}

std::map<std::string, std::string> category_grouping(const DemandPanel& panel) {
  std::map<std::string, std::string> grouping;
  for (const auto& sku : panel.skus) grouping[sku.sku_id] = sku.category_id;
  return grouping;
}

ParamTable tabulate_parameters(const DemandPanel& panel, const CandidateGrid& grid,
                               const SimConfig& cfg,
                               const std::map<std::string, std::string>& grouping,
                               SaleBasis sale_basis, int n_threads) {
  panel.validate();
  grid.validate();
  for (const auto& sku : panel.skus) {
    if (grouping.find(sku.sku_id) == grouping.end()) {
      throw DomainError("sku " + sku.sku_id + " has no category mapping");
    }
  }

  ParamTable table;
  table.grid = grid;
  for (const auto& [sku_id, category] : grouping) {
    (void)sku_id;
    if (std::find(table.category_ids.begin(), table.category_ids.end(), category) ==
        table.category_ids.end()) {
      table.category_ids.push_back(category);
    }
  }
  std::sort(table.category_ids.begin(), table.category_ids.end());

  const std::size_t n_skus = panel.skus.size();
  const std::size_t width = static_cast<std::size_t>(grid.size());
  // Per-(sku, v) cells, reduced in fixed order below.
  std::vector<Cents> cell_stock(n_skus * width, 0);
  std::vector<Cents> cell_loss(n_skus * width, 0);

  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      const DemandTrace trace(panel.demand[s]);
      for (std::size_t k = 0; k < width; ++k) {
        const SimOutcome outcome = evaluate_candidate(
            trace, panel.skus[s], grid, grid.value_at(static_cast<int>(k)), cfg);
        cell_stock[s * width + k] = outcome.stock_value;
        cell_loss[s * width + k] = outcome.lost_sales_value;
      }
    }
  };

  int threads = n_threads > 0 ? n_threads
                              : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, static_cast<int>(n_skus));
  if (threads <= 1) {
    worker(0, n_skus);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_skus + threads - 1) / threads;
    for (int i = 0; i < threads; ++i) {
      const std::size_t begin = static_cast<std::size_t>(i) * chunk;
      const std::size_t end = std::min(begin + chunk, n_skus);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& t : pool) t.join();
  }

  const std::size_t n_categories = table.category_ids.size();
  table.stock.assign(n_categories, std::vector<Cents>(width, 0));
  table.loss.assign(n_categories, std::vector<Cents>(width, 0));
  for (std::size_t s = 0; s < n_skus; ++s) {
    const std::string& category = grouping.at(panel.skus[s].sku_id);
    const std::size_t c = static_cast<std::size_t>(
        std::lower_bound(table.category_ids.begin(), table.category_ids.end(),
                         category) -
        table.category_ids.begin());
    for (std::size_t k = 0; k < width; ++k) {
      table.stock[c][k] += cell_stock[s * width + k];
      table.loss[c][k] += cell_loss[s * width + k];
    }
  }

  table.sale_total = 0;
  if (sale_basis == SaleBasis::kDemandValue) {
    for (std::size_t s = 0; s < n_skus; ++s) {
      Units demand_total = 0;
      for (Units d : panel.demand[s]) demand_total += d;
      table.sale_total += panel.skus[s].unit_price * demand_total;
    }
  } else {
    for (std::size_t s = 0; s < n_skus; ++s) {
      const SimOutcome outcome = evaluate_candidate(
          DemandTrace(panel.demand[s]), panel.skus[s], grid, grid.max_days, cfg);
      table.sale_total += panel.skus[s].unit_price * outcome.sold_units_total;
    }
  }
  return table;
}

void save_param_table(const ParamTable& table, const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t c = 0; c < table.category_ids.size(); ++c) {
    for (int k = 0; k < table.grid.size(); ++k) {
      rows.push_back({table.category_ids[c], std::to_string(table.grid.value_at(k)),
                      format_money(table.stock[c][static_cast<std::size_t>(k)]),
                      format_money(table.loss[c][static_cast<std::size_t>(k)])});
    }
  }
  csv::write_file(path, {"category_id", "v_days", "stock_value", "loss_value"}, rows);
}

ParamTable load_param_table(const std::string& path, Cents sale_total) {
  const auto csv_table = csv::read_file(path);
  const int c_cat = csv_table.column("category_id");
  const int c_v = csv_table.column("v_days");
  const int c_stock = csv_table.column("stock_value");
  const int c_loss = csv_table.column("loss_value");

  ParamTable table;
  table.sale_total = sale_total;
  int min_v = 0, max_v = 0;
  bool first = true;
  for (std::size_t r = 0; r < csv_table.rows.size(); ++r) {
    const int v = static_cast<int>(csv::parse_int(
        csv_table.rows[r][static_cast<std::size_t>(c_v)], "v_days",
        static_cast<int>(r) + 2));
    if (first) {
      min_v = max_v = v;
      first = false;
    } else {
      min_v = std::min(min_v, v);
      max_v = std::max(max_v, v);
    }
    const std::string& category = csv_table.rows[r][static_cast<std::size_t>(c_cat)];
    if (std::find(table.category_ids.begin(), table.category_ids.end(), category) ==
        table.category_ids.end()) {
      table.category_ids.push_back(category);
    }
  }
  if (first) throw ParseError(path + ": no parameter rows");
  table.grid = CandidateGrid{min_v, max_v};
  table.grid.validate();
  const auto width = static_cast<std::size_t>(table.grid.size());
  table.stock.assign(table.category_ids.size(), std::vector<Cents>(width, -1));
  table.loss.assign(table.category_ids.size(), std::vector<Cents>(width, -1));

  for (std::size_t r = 0; r < csv_table.rows.size(); ++r) {
    const auto& row = csv_table.rows[r];
    const int line = static_cast<int>(r) + 2;
    const std::string& category = row[static_cast<std::size_t>(c_cat)];
    const std::size_t c = static_cast<std::size_t>(
        std::find(table.category_ids.begin(), table.category_ids.end(), category) -
        table.category_ids.begin());
    const int v = static_cast<int>(
        csv::parse_int(row[static_cast<std::size_t>(c_v)], "v_days", line));
    const std::size_t k = static_cast<std::size_t>(table.grid.index_of(v));
    table.stock[c][k] = parse_money(row[static_cast<std::size_t>(c_stock)]);
    table.loss[c][k] = parse_money(row[static_cast<std::size_t>(c_loss)]);
  }
  for (std::size_t c = 0; c < table.stock.size(); ++c) {
    for (std::size_t k = 0; k < width; ++k) {
      if (table.stock[c][k] < 0 || table.loss[c][k] < 0) {
        throw ParseError(path + ": missing cell for category " +
                         table.category_ids[c] + ", v=" +
                         std::to_string(table.grid.value_at(static_cast<int>(k))));
      }
    }
  }
  return table;
}

}  // namespace orpr::sim
