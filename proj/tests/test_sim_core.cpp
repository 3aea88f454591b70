#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <random>

#include "orpr/core/errors.hpp"
#include "orpr/oracles/oracles.hpp"
#include "orpr/sim/simulator.hpp"
#include "test_util.hpp"

using namespace orpr;
using testutil::make_sku;

namespace {

// Conservation identities on every day of a trajectory: sold + lost = demand,
// the inventory balance recurrence, and pipeline accounting.
void check_conservation(const SimOutcome& out, std::span<const Units> trace,
                        Units initial_inventory) {
  REQUIRE(out.inventory_trace.size() == trace.size());
  Units prev = initial_inventory;
  Units sold_total = 0;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const Units lost = out.lost_trace[t];
    const Units sold = trace[t] - lost;
    sold_total += sold;
    CHECK(sold + lost == trace[t]);
    CHECK(out.inventory_trace[t] == prev + out.arrivals_trace[t] - sold);
    CHECK(out.inventory_trace[t] >= 0);
    prev = out.inventory_trace[t];
  }
  CHECK(sold_total == out.sold_units_total);
  Units arrived = 0;
  for (Units a : out.arrivals_trace) arrived += a;
  CHECK(arrived == out.arrived_units_total);
  CHECK(out.ordered_units_total == out.arrived_units_total + out.pipeline_end_units);
  CHECK(out.pipeline_end_units >= 0);
}

SimConfig fixture_cfg() {
  SimConfig cfg;
  cfg.horizon_days = 6;
  cfg.initial_inventory = 10;
  cfg.demand_avg_window = 3;
  cfg.fixed_demand_avg = 5.0;
  return cfg;
}

}  // namespace

TEST_CASE("null demand with empty start never costs anything") {
  const std::vector<Units> trace(8, 0);
  SimConfig cfg;
  cfg.horizon_days = 8;
  cfg.initial_inventory = 0;
  const auto sku = make_sku("S", 100, 200, /*vlt=*/1, /*nrt=*/2);
  const CandidateGrid grid{1, 5};
  for (int v = 1; v <= 5; ++v) {
    const auto out = sim::evaluate_candidate(trace, sku, grid, v, cfg);
    CHECK(out.lost_sales_value == 0);
    CHECK(out.stock_value == 0);
    CHECK(out.ordered_units_total == 0);  // trailing mean 0 -> no orders
    check_conservation(out, trace, 0);
  }
}

TEST_CASE("six-day fixture replays by hand: stock 45, no lost sales") {
  // Orders land every other day starting day 1, so post-demand inventory
  // alternates 5, 10.
  const std::vector<Units> trace{5, 5, 5, 5, 5, 5};
  const auto sku = make_sku("S", 100, 200, /*vlt=*/1, /*nrt=*/2);
  const auto cfg = fixture_cfg();
  const auto out = sim::evaluate_candidate(trace, sku, CandidateGrid{1, 4}, 2, cfg);
  CHECK(out.lost_sales_value == 0);
  CHECK(out.stock_value == 4500);  // 45 units held at cost 1.00
  CHECK(out.inventory_trace == std::vector<Units>{5, 10, 5, 10, 5, 10});
  CHECK(out.avg_inventory_units == doctest::Approx(7.5));
  CHECK(out.instock_days == 6);
  check_conservation(out, trace, cfg.initial_inventory);
}

TEST_CASE("orders beyond the horizon never arrive") {
  const std::vector<Units> trace{5, 5, 5};
  SimConfig cfg;
  cfg.horizon_days = 3;
  cfg.initial_inventory = 0;
  cfg.fixed_demand_avg = 5.0;
  auto sku = make_sku("S", 100, 200, /*vlt=*/10, /*nrt=*/1);
  const auto out = sim::evaluate_candidate(trace, sku, CandidateGrid{1, 4}, 2, cfg);
  CHECK(out.lost_sales_value == 3000);  // 15 units at price 2.00
  CHECK(out.stock_value == 0);
  CHECK(out.pipeline_end_units == out.ordered_units_total);
  CHECK(out.instock_days == 0);
  check_conservation(out, trace, 0);
}

TEST_CASE("candidate domain errors") {
  const std::vector<Units> trace{1, 2};
  SimConfig cfg;
  cfg.horizon_days = 2;
  const auto sku = make_sku();
  CHECK_THROWS_AS(sim::evaluate_candidate(trace, sku, CandidateGrid{2, 5}, 7, cfg),
                  DomainError);
  const std::vector<Units> empty;
  cfg.horizon_days = 1;
  CHECK_THROWS_AS(sim::evaluate_candidate(empty, sku, CandidateGrid{2, 5}, 3, cfg),
                  DomainError);
}

TEST_CASE("constant decision vector reduces to evaluate_candidate") {
  const std::vector<Units> trace{5, 5, 5, 5, 5, 5};
  const auto sku = make_sku("S", 100, 200, 1, 2);
  const auto cfg = fixture_cfg();
  const auto direct = sim::evaluate_candidate(trace, sku, CandidateGrid{1, 4}, 2, cfg);
  const std::vector<int> decisions{2, 2, 2};
  const auto stepped = sim::simulate_policy(trace, sku, decisions, cfg);
  CHECK(stepped.stock_value == direct.stock_value);
  CHECK(stepped.lost_sales_value == direct.lost_sales_value);
  CHECK(stepped.inventory_trace == direct.inventory_trace);
  CHECK(stepped.lost_trace == direct.lost_trace);
  CHECK(stepped.sold_units_total == direct.sold_units_total);
}

TEST_CASE("alternating decisions replay by hand") {
  const std::vector<Units> trace{5, 5, 5, 5, 5, 5};
  const auto sku = make_sku("S", 100, 200, 1, 2);
  const auto cfg = fixture_cfg();
  // Reviews on days 0, 2, 4 with decisions 1, 4, 1 -> orders 5, 20, 5
  // arriving on days 1, 3, 5.
  const std::vector<int> decisions{1, 4, 1};
  const auto out = sim::simulate_policy(trace, sku, decisions, cfg);
  CHECK(out.inventory_trace == std::vector<Units>{5, 5, 0, 15, 10, 10});
  CHECK(out.stock_value == 4500);
  CHECK(out.lost_sales_value == 0);
  check_conservation(out, trace, cfg.initial_inventory);

  CHECK_THROWS_AS(sim::simulate_policy(trace, sku, std::vector<int>{1, 4}, cfg),
                  DomainError);
}

TEST_CASE("inert inventory accrues holding cost only") {
  const std::vector<Units> trace{0, 0, 0};
  SimConfig cfg;
  cfg.horizon_days = 3;
  cfg.initial_inventory = 4;
  const auto sku = make_sku("S", 100, 200, 1, 1);
  const std::vector<int> decisions{1, 1, 1};
  const auto out = sim::simulate_policy(trace, sku, decisions, cfg);
  CHECK(out.stock_value == 1200);  // 4 units x 3 days x 1.00
  CHECK(out.avg_inventory_units == doctest::Approx(4.0));
  CHECK(out.lost_sales_value == 0);
}

TEST_CASE("metrics match the hand fixture") {
  const std::vector<Units> trace{5, 5, 5, 5, 5, 5};
  const auto sku = make_sku("S", 100, 200, 1, 2);
  const auto cfg = fixture_cfg();
  const auto out = sim::evaluate_candidate(trace, sku, CandidateGrid{1, 4}, 2, cfg);
  const auto metrics = sim::compute_metrics(out, trace);
  REQUIRE(metrics.turnover_days.has_value());
  CHECK(*metrics.turnover_days == doctest::Approx(1.5));
  CHECK(metrics.instock_rate == doctest::Approx(1.0));
  CHECK(metrics.holding_cost == 4500);
  CHECK(metrics.stockout_cost == 0);
  CHECK(metrics.total_cost == 4500);
}

TEST_CASE("metrics: all-lost and zero-demand cases") {
  const std::vector<Units> trace{5, 5, 5};
  SimConfig cfg;
  cfg.horizon_days = 3;
  cfg.initial_inventory = 0;
  cfg.fixed_demand_avg = 5.0;
  auto sku = make_sku("S", 100, 200, /*vlt=*/10, /*nrt=*/1);
  const auto out = sim::evaluate_candidate(trace, sku, CandidateGrid{1, 4}, 2, cfg);
  const auto metrics = sim::compute_metrics(out, trace);
  CHECK(metrics.instock_rate == doctest::Approx(0.0));
  CHECK(metrics.stockout_cost == 3000);

  const std::vector<Units> zeros{0, 0, 0};
  SimConfig zcfg;
  zcfg.horizon_days = 3;
  zcfg.initial_inventory = 2;
  const auto zout = sim::evaluate_candidate(zeros, make_sku(), CandidateGrid{1, 4}, 1, zcfg);
  const auto zmetrics = sim::compute_metrics(zout, zeros);
  CHECK_FALSE(zmetrics.turnover_days.has_value());
  CHECK(zmetrics.instock_rate == doctest::Approx(1.0));  // no lost sales
}

TEST_CASE("tabulation aggregates per-sku outcomes and is thread-invariant") {
  std::mt19937_64 rng(3);
  std::vector<std::vector<Units>> demand(3, std::vector<Units>(30));
  std::poisson_distribution<Units> poisson(6.0);
  for (auto& trace : demand) {
    for (auto& d : trace) d = poisson(rng);
  }
  std::vector<SkuRecord> skus{make_sku("A0", 100, 300, 1, 2),
                              make_sku("A1", 50, 80, 2, 3),
                              make_sku("B0", 120, 500, 1, 2)};
  skus[0].category_id = "CA";
  skus[1].category_id = "CA";
  skus[2].category_id = "CB";
  const auto panel = testutil::make_panel(demand, skus);

  SimConfig cfg;
  cfg.horizon_days = 30;
  cfg.initial_inventory = 5;
  cfg.demand_avg_window = 7;
  const CandidateGrid grid{1, 6};

  const auto grouping = sim::category_grouping(panel);
  const auto table1 = sim::tabulate_parameters(panel, grid, cfg, grouping,
                                               sim::SaleBasis::kDemandValue, 1);
  const auto table2 = sim::tabulate_parameters(panel, grid, cfg, grouping,
                                               sim::SaleBasis::kDemandValue, 2);
  CHECK(table1.stock == table2.stock);
  CHECK(table1.loss == table2.loss);
  CHECK(table1.sale_total == table2.sale_total);
  REQUIRE(table1.category_ids == std::vector<std::string>{"CA", "CB"});

  // Category CB holds a single SKU: its rows equal evaluate_candidate.
  for (int k = 0; k < grid.size(); ++k) {
    const auto out = sim::evaluate_candidate(panel.demand[2], panel.skus[2], grid,
                                             grid.value_at(k), cfg);
    CHECK(table1.stock[1][k] == out.stock_value);
    CHECK(table1.loss[1][k] == out.lost_sales_value);
  }

  // SALE under the demand basis is the demand value.
  Cents sale = 0;
  for (std::size_t s = 0; s < panel.skus.size(); ++s) {
    Units total = 0;
    for (Units d : panel.demand[s]) total += d;
    sale += panel.skus[s].unit_price * total;
  }
  CHECK(table1.sale_total == sale);

  std::map<std::string, std::string> partial = grouping;
  partial.erase("B0");
  CHECK_THROWS_AS(
      sim::tabulate_parameters(panel, grid, cfg, partial, sim::SaleBasis::kDemandValue, 1),
      DomainError);
}

TEST_CASE("stationary fixture with fixed demand mean is monotone in v") {
  // With d-bar pinned, larger v orders strictly more, so losses cannot rise
  // and stock cannot fall.
  std::mt19937_64 rng(11);
  std::vector<Units> trace(40);
  std::poisson_distribution<Units> poisson(5.0);
  for (auto& d : trace) d = poisson(rng);

  SimConfig cfg;
  cfg.horizon_days = 40;
  cfg.initial_inventory = 0;
  cfg.fixed_demand_avg = 5.0;
  const auto sku = make_sku("S", 100, 200, 2, 3);
  const CandidateGrid grid{1, 10};

  Cents prev_stock = -1, prev_loss = -1;
  for (int v = grid.min_days; v <= grid.max_days; ++v) {
    const auto out = sim::evaluate_candidate(trace, sku, grid, v, cfg);
    if (prev_stock >= 0) {
      CHECK(out.stock_value >= prev_stock);
      CHECK(out.lost_sales_value <= prev_loss);
    }
    prev_stock = out.stock_value;
    prev_loss = out.lost_sales_value;
  }
}

TEST_CASE("production simulator and replay oracle agree exactly") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<Units> demand_dist(0, 12);
  std::uniform_int_distribution<int> vlt_dist(0, 5);
  std::uniform_int_distribution<int> nrt_dist(1, 5);
  std::uniform_int_distribution<int> v_dist(1, 9);
  std::uniform_int_distribution<Units> init_dist(0, 30);
  std::uniform_int_distribution<int> offset_dist(0, 2);

  for (int trial = 0; trial < 100; ++trial) {
    CAPTURE(trial);
    const int horizon = 50;
    std::vector<Units> trace(horizon);
    for (auto& d : trace) d = demand_dist(rng);

    auto sku = make_sku("S", 100 + trial, 200 + 3 * trial, vlt_dist(rng), nrt_dist(rng));
    SimConfig cfg;
    cfg.horizon_days = horizon;
    cfg.initial_inventory = init_dist(rng);
    cfg.demand_avg_window = 1 + trial % 9;
    cfg.review_offset = offset_dist(rng);

    const int reviews = sim::count_review_days(cfg, sku.nrt_days);
    std::vector<int> decisions(static_cast<std::size_t>(reviews));
    for (auto& v : decisions) v = v_dist(rng);

    const auto main_path = sim::simulate_policy(trace, sku, decisions, cfg);
    const auto replay = oracle::replay_simulator(trace, sku, decisions, cfg);

    CHECK(main_path.stock_value == replay.stock_value);
    CHECK(main_path.lost_sales_value == replay.lost_sales_value);
    CHECK(main_path.inventory_trace == replay.inventory_trace);
    CHECK(main_path.lost_trace == replay.lost_trace);
    CHECK(main_path.sold_units_total == replay.sold_units_total);
    CHECK(main_path.instock_days == replay.instock_days);
    CHECK(main_path.ordered_units_total == replay.ordered_units_total);
    CHECK(main_path.pipeline_end_units == replay.pipeline_end_units);
    check_conservation(main_path, trace, cfg.initial_inventory);
  }
}

TEST_CASE("all-zero demand panel has zero SALE") {
  std::vector<std::vector<Units>> demand(2, std::vector<Units>(10, 0));
  std::vector<SkuRecord> skus{make_sku("Z0"), make_sku("Z1")};
  const auto panel = testutil::make_panel(demand, skus);
  SimConfig cfg;
  cfg.horizon_days = 10;
  const auto table = sim::tabulate_parameters(panel, CandidateGrid{1, 3}, cfg,
                                              sim::category_grouping(panel));
  CHECK(table.sale_total == 0);
  const auto fulfilled = sim::tabulate_parameters(panel, CandidateGrid{1, 3}, cfg,
                                                  sim::category_grouping(panel),
                                                  sim::SaleBasis::kFulfilledAtMax);
  CHECK(fulfilled.sale_total == 0);
}

TEST_CASE("replay oracle on the fixed fixtures") {
  const std::vector<Units> trace{5, 5, 5, 5, 5, 5};
  const auto sku = make_sku("S", 100, 200, 1, 2);
  const auto cfg = fixture_cfg();
  const std::vector<int> decisions{2, 2, 2};
  const auto replayed = oracle::replay_simulator(trace, sku, decisions, cfg);
  CHECK(replayed.stock_value == 4500);
  CHECK(replayed.lost_sales_value == 0);
  CHECK(replayed.inventory_trace == std::vector<Units>{5, 10, 5, 10, 5, 10});

  const std::vector<Units> zeros(6, 0);
  SimConfig zcfg;
  zcfg.horizon_days = 6;
  const std::vector<int> zdec{1, 1, 1};
  const auto main_zero = sim::simulate_policy(zeros, sku, zdec, zcfg);
  const auto replay_zero = oracle::replay_simulator(zeros, sku, zdec, zcfg);
  CHECK(main_zero.stock_value == 0);
  CHECK(replay_zero.stock_value == 0);
  CHECK(main_zero.lost_sales_value == 0);
  CHECK(replay_zero.lost_sales_value == 0);
}

TEST_CASE("param table round-trips through params.csv") {
  testutil::TempDir dir("params");
  ParamTable table;
  table.category_ids = {"CA", "CB"};
  table.grid = CandidateGrid{2, 4};
  table.stock = {{100, 250, 399}, {10, 20, 30}};
  table.loss = {{900, 500, 100}, {80, 40, 0}};
  table.sale_total = 5000;
  sim::save_param_table(table, dir.file("params.csv"));
  const auto loaded = sim::load_param_table(dir.file("params.csv"), 5000);
  CHECK(loaded.category_ids == table.category_ids);
  CHECK(loaded.stock == table.stock);
  CHECK(loaded.loss == table.loss);
  CHECK(loaded.grid.min_days == 2);
  CHECK(loaded.grid.max_days == 4);
}
