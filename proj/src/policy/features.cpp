#include "orpr/policy/features.hpp"

#include <algorithm>
#include <cmath>

#include "orpr/core/errors.hpp"

namespace orpr::policy {

namespace {

// Demand on `day - back`, zero-padded before the panel start.
double padded(const std::vector<Units>& trace, int day, int back) {
  const int t = day - back;
  if (t < 0 || t >= static_cast<int>(trace.size())) return 0.0;
  return static_cast<double>(trace[static_cast<std::size_t>(t)]);
}

struct WindowStats {
  double mean = 0.0;
  double stdev = 0.0;
  double maximum = 0.0;
  double nonzero_frac = 0.0;
};

WindowStats window_stats(const std::vector<Units>& trace, int day, int window) {
  WindowStats stats;
  double sum = 0.0;
  for (int back = 1; back <= window; ++back) sum += padded(trace, day, back);
  stats.mean = sum / window;
  double sq = 0.0;
  int nonzero = 0;
  for (int back = 1; back <= window; ++back) {
    const double d = padded(trace, day, back);
    sq += (d - stats.mean) * (d - stats.mean);
    stats.maximum = std::max(stats.maximum, d);
    if (d > 0.0) ++nonzero;
  }
  stats.stdev = std::sqrt(sq / window);
  stats.nonzero_frac = static_cast<double>(nonzero) / window;
  return stats;
}

}  // namespace

FeatureVector build_features(const DemandPanel& panel, std::size_t sku_index, int day,
                             const CandidateGrid& grid, const FeatureTargets& targets) {
  if (sku_index >= panel.skus.size()) throw DomainError("sku index out of range");
  if (day < 0 || day > panel.horizon_days) throw DomainError("feature day out of range");
  (void)grid;

  const auto& trace = panel.demand[sku_index];
  const auto& sku = panel.skus[sku_index];

  const WindowStats w7 = window_stats(trace, day, 7);
  const WindowStats w14 = window_stats(trace, day, 14);
  const WindowStats w28 = window_stats(trace, day, 28);

  // Recency-weighted mean, decay 0.8 over the last 14 days.
  double ewma = 0.0, weight_sum = 0.0, weight = 1.0;
  for (int back = 1; back <= 14; ++back) {
    ewma += weight * padded(trace, day, back);
    weight_sum += weight;
    weight *= 0.8;
  }
  ewma /= weight_sum;

  // Naive weekly-seasonal forecast: mean of the same weekday over the last
  // three weeks (available lags only).
  double seasonal = 0.0;
  int seasonal_n = 0;
  for (int lag : {7, 14, 21}) {
    if (day - lag >= 0) {
      seasonal += padded(trace, day, lag);
      ++seasonal_n;
    }
  }
  seasonal = seasonal_n > 0 ? seasonal / seasonal_n : 0.0;

  FeatureVector features;
  features.sales = {w7.mean,  w7.stdev,  w14.mean,          w14.stdev,
                    w28.mean, w28.stdev, ewma,              padded(trace, day, 1),
                    seasonal, w28.maximum, w28.nonzero_frac, day >= 28 ? 0.0 : 1.0};

  const double price = static_cast<double>(sku.unit_price) / 100.0;
  const double cost = static_cast<double>(sku.unit_cost) / 100.0;
  const double cov = w28.mean > 1e-9 ? std::min(w28.stdev / w28.mean, 5.0) : 0.0;
  features.attrs = {cost,
                    price,
                    price > 0.0 ? (price - cost) / price : 0.0,
                    static_cast<double>(sku.vlt_days),
                    static_cast<double>(sku.nrt_days),
                    cov};

  // Demand-value contribution within the SKU's category over the same
  // 28-day window.
  double category_value = 0.0;
  double own_value = w28.mean * 28.0 * price;
  for (std::size_t s = 0; s < panel.skus.size(); ++s) {
    if (panel.skus[s].category_id != sku.category_id) continue;
    const WindowStats other = window_stats(panel.demand[s], day, 28);
    category_value +=
        other.mean * 28.0 * static_cast<double>(panel.skus[s].unit_price) / 100.0;
  }
  const double contribution = category_value > 1e-9 ? own_value / category_value : 0.0;

  features.objective = {contribution, targets.turnover_target,
                        cost > 0.0 ? price / cost : 0.0,
                        static_cast<double>(sku.vlt_days + sku.nrt_days)};
  return features;
}

std::span<const int> demand_scale_feature_indices() {
  static const int indices[] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  return indices;
}

}  // namespace orpr::policy
