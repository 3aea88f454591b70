#pragma once

#include <span>
#include <vector>

#include "orpr/core/types.hpp"

namespace orpr::policy {

// Three input streams feeding the per-stream encoders.
struct FeatureVector {
  std::vector<double> sales;      // windowed demand history stats + naive forecasts
  std::vector<double> attrs;      // price/cost, lead times, volatility proxy
  std::vector<double> objective;  // category contribution, turnover target
};

inline constexpr int kSalesWidth = 12;
inline constexpr int kAttrsWidth = 6;
inline constexpr int kObjectiveWidth = 4;

struct FeatureTargets {
  double turnover_target = 0.0;  // days
};

// Deterministic features at `day` from history strictly before `day`.
// Days before the panel start are zero-padded and flagged via the validity
// feature (sales index 11).
FeatureVector build_features(const DemandPanel& panel, std::size_t sku_index, int day,
                             const CandidateGrid& grid, const FeatureTargets& targets);

// Sales-stream indices that scale linearly with a demand rescaling
// (pre-standardization); used by the recomputation tests.
std::span<const int> demand_scale_feature_indices();

}  // namespace orpr::policy
