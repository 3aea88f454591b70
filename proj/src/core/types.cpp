#include "orpr/core/types.hpp"

#include <cmath>
#include <unordered_set>

#include "orpr/core/errors.hpp"

namespace orpr {

void SkuRecord::validate() const {
  if (sku_id.empty()) throw ConfigError("sku_id must be nonempty");
  if (unit_cost <= 0) throw ConfigError("sku " + sku_id + ": unit_cost must be > 0");
  if (unit_price < unit_cost) {
    throw ConfigError("sku " + sku_id + ": unit_price must be >= unit_cost");
  }
  if (vlt_days < 0) throw ConfigError("sku " + sku_id + ": vlt_days must be >= 0");
  if (nrt_days < 1) throw ConfigError("sku " + sku_id + ": nrt_days must be >= 1");
}

void DemandPanel::validate() const {
  if (horizon_days < 1) throw ConfigError("panel horizon_days must be >= 1");
  if (skus.size() != demand.size()) {
    throw ConfigError("panel has " + std::to_string(skus.size()) + " skus but " +
                      std::to_string(demand.size()) + " demand rows");
  }
  std::unordered_set<std::string> seen;
  for (const auto& sku : skus) {
    sku.validate();
    if (!seen.insert(sku.sku_id).second) {
      throw ConfigError("duplicate sku_id " + sku.sku_id);
    }
  }
  for (std::size_t i = 0; i < demand.size(); ++i) {
    if (static_cast<int>(demand[i].size()) != horizon_days) {
      throw ConfigError("sku " + skus[i].sku_id + ": demand row length " +
                        std::to_string(demand[i].size()) + " != horizon " +
                        std::to_string(horizon_days));
    }
    for (Units d : demand[i]) {
      if (d < 0) throw ConfigError("sku " + skus[i].sku_id + ": negative demand");
    }
  }
}

std::size_t DemandPanel::sku_index(const std::string& id) const {
  for (std::size_t i = 0; i < skus.size(); ++i) {
    if (skus[i].sku_id == id) return i;
  }
  throw DomainError("unknown sku_id " + id);
}

void CandidateGrid::validate() const {
  if (min_days < 1 || min_days > max_days) {
    throw ConfigError("candidate grid requires 1 <= L <= U, got [" +
                      std::to_string(min_days) + ", " + std::to_string(max_days) + "]");
  }
}

void SimConfig::validate() const {
  if (horizon_days < 1) throw ConfigError("sim horizon_days must be >= 1");
  if (demand_avg_window < 1) throw ConfigError("demand_avg_window must be >= 1");
  if (initial_inventory < 0) throw ConfigError("initial_inventory must be >= 0");
  if (initial_cover_days && *initial_cover_days < 0.0) {
    throw ConfigError("initial_cover_days must be >= 0");
  }
  if (review_offset < 0) throw ConfigError("review_offset must be >= 0");
  if (fixed_demand_avg && *fixed_demand_avg < 0.0) {
    throw ConfigError("fixed_demand_avg must be >= 0");
  }
}

Cents SelectionProblem::loss_budget() const {
  // Floor of the exact real budget, with a guard so representation noise in
  // (1 - alpha) * SALE cannot drop a whole cent.
  const double exact = (1.0 - alpha_loss) * static_cast<double>(sale_total);
  return static_cast<Cents>(std::floor(exact + 1e-9 + 1e-12 * std::fabs(exact)));
}

void SelectionProblem::validate() const {
  grid.validate();
  if (stock.empty()) throw ConfigError("selection problem has no categories");
  if (loss.size() != stock.size()) {
    throw ConfigError("stock/loss matrices have different category counts");
  }
  const std::size_t width = static_cast<std::size_t>(grid.size());
  for (std::size_t i = 0; i < stock.size(); ++i) {
    if (stock[i].size() != width || loss[i].size() != width) {
      throw ConfigError("selection matrices must be I x (U-L+1)");
    }
  }
  if (sale_total < 0) throw ConfigError("sale_total must be >= 0");
  if (alpha_loss < 0.0 || alpha_loss > 1.0) {
    throw ConfigError("alpha_loss must lie in [0, 1]");
  }
}

}  // namespace orpr
