#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "orpr/core/types.hpp"

namespace orpr::sim {

using DemandTrace = std::span<const Units>;

// State visible to an ordering policy at a review day. The review runs after
// that day's demand has been realized, so on_hand is post-demand inventory
// and pipeline counts every ordered unit that has not yet arrived.
struct ReviewState {
  int day = 0;
  int review_index = 0;  // 0 for the first ordering day, 1 for the next, ...
  Units on_hand = 0;
  Units pipeline = 0;
  double demand_avg = 0.0;  // trailing mean, see demand_average()
};

using OrderPolicy = std::function<Units(const ReviewState&)>;

// Trailing mean of demand over the cfg.demand_avg_window days before `day`,
// with the window clipped at day 0 (an empty window yields 0). When
// cfg.fixed_demand_avg is set it wins unconditionally.
double demand_average(DemandTrace trace, const SimConfig& cfg, int day);

Units round_half_up(double x);

// 0-based ordering days: t >= review_offset and (t - review_offset) % NRT == 0.
int count_review_days(const SimConfig& cfg, int nrt_days);

// Day loop shared by every policy: arrivals, demand realization (lost sales,
// no backorders), metric accumulation, then the replenishment review. Orders
// placed on day t arrive at the start of day t + VLT; arrivals scheduled past
// the horizon stay in the pipeline and never accrue cost.
SimOutcome run_simulation(DemandTrace trace, const SkuRecord& sku,
                          const SimConfig& cfg, const OrderPolicy& policy);

// Constant inventory-days candidate v: every order is round(v * demand_avg).
SimOutcome evaluate_candidate(DemandTrace trace, const SkuRecord& sku,
                              const CandidateGrid& grid, int v_days,
                              const SimConfig& cfg);

// One inventory-days decision per review day, same mechanics otherwise.
SimOutcome simulate_policy(DemandTrace trace, const SkuRecord& sku,
                           std::span<const int> decisions, const SimConfig& cfg);

MetricSet compute_metrics(const SimOutcome& outcome, DemandTrace trace);

enum class SaleBasis {
  kDemandValue,     // SALE = sum_t p_i * d_t, independent of any policy
  kFulfilledAtMax,  // SALE = sold value when simulating the most generous v = U
};

// Simulates every (category-member SKU, candidate v) cell and sums member
// outcomes per category. Cells fan out over n_threads; the reduction order is
// fixed, and the arithmetic is integer, so results do not depend on
// scheduling.
ParamTable tabulate_parameters(const DemandPanel& panel, const CandidateGrid& grid,
                               const SimConfig& cfg,
                               const std::map<std::string, std::string>& grouping,
                               SaleBasis sale_basis = SaleBasis::kDemandValue,
                               int n_threads = 0);

// Default grouping: the category_id carried by each SKU record.
std::map<std::string, std::string> category_grouping(const DemandPanel& panel);

void save_param_table(const ParamTable& table, const std::string& path);
ParamTable load_param_table(const std::string& path, Cents sale_total);

}  // namespace orpr::sim
