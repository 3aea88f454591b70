#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "orpr/baselines/baselines.hpp"
#include "orpr/core/errors.hpp"
#include "orpr/sim/simulator.hpp"
#include "test_util.hpp"

using namespace orpr;
using namespace orpr::baselines;

namespace {

// Independent inversion of the normal CDF by bisection on erf.
double bisect_normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Wilson-Hilferty approximation of the gamma quantile.
double wilson_hilferty(double shape, double scale, double p) {
  const double z = bisect_normal_quantile(p);
  const double c = 1.0 - 1.0 / (9.0 * shape) + z / (3.0 * std::sqrt(shape));
  return shape * scale * c * c * c;
}

}  // namespace

TEST_CASE("normal quantile: symmetry and reference values") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::fabs(normal_quantile(0.975) - 1.959964) < 1e-6);
  CHECK(std::fabs(normal_quantile(0.975) - bisect_normal_quantile(0.975)) < 1e-9);
  for (double p : {0.01, 0.1, 0.3, 0.42, 0.77, 0.9, 0.999}) {
    CHECK(normal_quantile(p) == doctest::Approx(-normal_quantile(1.0 - p)).epsilon(1e-9));
    CHECK(std::fabs(normal_quantile(p) - bisect_normal_quantile(p)) < 1e-8);
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
}

TEST_CASE("gamma quantile: closed forms and inverse identity") {
  CHECK(gamma_quantile(1.0, 1.0, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  // Median of Gamma(16, 2.5), cross-checked against Wilson-Hilferty.
  const double median = gamma_quantile(16.0, 2.5, 0.5);
  CHECK(median == doctest::Approx(39.2).epsilon(0.01));
  CHECK(median == doctest::Approx(wilson_hilferty(16.0, 2.5, 0.5)).epsilon(0.005));

  for (double shape : {0.5, 1.0, 3.0, 16.0, 80.0}) {
    for (double p : {0.05, 0.25, 0.5, 0.85, 0.99}) {
      CAPTURE(shape);
      CAPTURE(p);
      const double q = gamma_quantile(shape, 2.0, p);
      CHECK(std::fabs(gamma_cdf(shape, 2.0, q) - p) < 1e-7);
    }
  }
  CHECK_THROWS_AS(gamma_quantile(0.0, 1.0, 0.5), DomainError);
  CHECK_THROWS_AS(gamma_quantile(1.0, 1.0, 1.5), DomainError);
}

TEST_CASE("pto_normal follows the closed form") {
  PtoInputs inputs;
  inputs.mu_d = 10.0;
  inputs.sigma_d = 2.0;
  inputs.review_days = 2;
  inputs.lead_days = 2;

  SUBCASE("balanced costs drop the safety term") {
    inputs.stockout_cost = 3.0;
    inputs.holding_cost = 3.0;
    CHECK(pto_normal(inputs).base_stock_level == doctest::Approx(40.0).epsilon(1e-12));
  }
  SUBCASE("critical ratio 0.9") {
    inputs.stockout_cost = 9.0;
    inputs.holding_cost = 1.0;
    const double expected = 40.0 + normal_quantile(0.9) * 2.0 * 2.0;
    CHECK(pto_normal(inputs).base_stock_level == doctest::Approx(expected));
    CHECK(pto_normal(inputs).base_stock_level == doctest::Approx(45.126).epsilon(1e-4));
  }
  SUBCASE("zero variance reduces to the mean for any costs") {
    inputs.sigma_d = 0.0;
    inputs.stockout_cost = 100.0;
    inputs.holding_cost = 1.0;
    CHECK(pto_normal(inputs).base_stock_level == doctest::Approx(40.0));
  }
  SUBCASE("monotone in b, anti-monotone in h") {
    inputs.stockout_cost = 1.0;
    inputs.holding_cost = 1.0;
    double prev = pto_normal(inputs).base_stock_level;
    for (double b : {2.0, 4.0, 8.0}) {
      inputs.stockout_cost = b;
      const double s = pto_normal(inputs).base_stock_level;
      CHECK(s >= prev);
      prev = s;
    }
    inputs.stockout_cost = 8.0;
    for (double h : {2.0, 4.0, 8.0}) {
      inputs.holding_cost = h;
      const double s = pto_normal(inputs).base_stock_level;
      CHECK(s <= prev);
      prev = s;
    }
  }
}

TEST_CASE("pto_gamma quantiles") {
  PtoInputs inputs;
  inputs.gamma_shape = 4.0;
  inputs.gamma_scale = 2.5;
  inputs.review_days = 2;
  inputs.lead_days = 2;
  inputs.stockout_cost = 1.0;
  inputs.holding_cost = 1.0;
  // Risk-period demand is Gamma(16, 2.5); b = h targets its median.
  CHECK(pto_gamma(inputs).base_stock_level == doctest::Approx(39.2).epsilon(0.01));

  SUBCASE("right-tail quantile exceeds the mean") {
    inputs.stockout_cost = 99.0;
    const double mean = 16.0 * 2.5;
    CHECK(pto_gamma(inputs).base_stock_level > mean);
  }
  SUBCASE("non-decreasing in the critical ratio") {
    double prev = 0.0;
    for (double b : {0.5, 1.0, 2.0, 5.0, 20.0}) {
      inputs.stockout_cost = b;
      const double s = pto_gamma(inputs).base_stock_level;
      CHECK(s >= prev);
      prev = s;
    }
  }
}

TEST_CASE("empirical quantile policy") {
  const std::vector<Units> constant(9, 5);
  CHECK(quantile_policy(constant, 30.0, 4) == doctest::Approx(20.0));
  CHECK(quantile_policy(constant, 85.0, 4) == doctest::Approx(20.0));

  const std::vector<Units> pair{0, 10};
  CHECK(quantile_policy(pair, 50.0, 3) == doctest::Approx(15.0));

  // Cross-check against a direct sort-and-interpolate computation.
  const std::vector<Units> window{1, 2, 3, 4};
  const double rank = 0.85 * 3.0;  // 2.55 -> between 3 and 4
  const double expected = (3.0 + 0.55 * 1.0) * 2.0;
  CHECK(quantile_policy(window, 85.0, 2) == doctest::Approx(expected));

  CHECK_THROWS_AS(quantile_policy(std::vector<Units>{}, 50.0, 1), DomainError);
  CHECK_THROWS_AS(quantile_policy(constant, 0.0, 1), DomainError);
  (void)rank;
}

TEST_CASE("order-up-to execution") {
  CHECK(base_stock_to_order(10.0, 15) == 0);
  CHECK(base_stock_to_order(10.0, 10) == 0);
  CHECK(base_stock_to_order(10.4, 0) == 10);
  CHECK(base_stock_to_order(10.5, 0) == 11);  // round half up
  CHECK(base_stock_to_order(45.126, 20) == 25);
}

TEST_CASE("moment estimation and the degenerate fallback") {
  const std::vector<Units> window{4, 6, 4, 6};
  const auto est = estimate_moments(window);
  CHECK(est.mu == doctest::Approx(5.0));
  CHECK(est.sigma == doctest::Approx(1.0));
  REQUIRE(est.gamma_valid);
  CHECK(est.gamma_shape == doctest::Approx(25.0));
  CHECK(est.gamma_scale == doctest::Approx(0.2));

  const std::vector<Units> flat(5, 7);
  const auto degenerate = estimate_moments(flat);
  CHECK_FALSE(degenerate.gamma_valid);
  CHECK(degenerate.sigma == doctest::Approx(0.0));
}

TEST_CASE("a base-stock policy run through the simulator keeps conservation") {
  std::mt19937_64 rng(8);
  std::poisson_distribution<Units> poisson(7.0);
  std::vector<Units> trace(40);
  for (auto& d : trace) d = poisson(rng);

  SimConfig cfg;
  cfg.horizon_days = 40;
  cfg.initial_inventory = 10;
  cfg.demand_avg_window = 7;
  const auto sku = testutil::make_sku("S", 100, 250, 2, 3);

  const auto outcome =
      sim::run_simulation(trace, sku, cfg, [&](const sim::ReviewState& state) {
        // Observable history inside the run: trailing window before the day.
        const int begin = std::max(0, state.day - 14);
        if (state.day == begin) return Units{0};
        const std::span<const Units> window(trace.data() + begin,
                                            static_cast<std::size_t>(state.day - begin));
        const auto moments = estimate_moments(window);
        PtoInputs inputs;
        inputs.mu_d = moments.mu;
        inputs.sigma_d = moments.sigma;
        inputs.review_days = sku.nrt_days;
        inputs.lead_days = sku.vlt_days;
        inputs.stockout_cost = static_cast<double>(sku.unit_price);
        inputs.holding_cost = static_cast<double>(sku.unit_cost);
        const auto policy = pto_normal(inputs);
        return base_stock_to_order(policy.base_stock_level,
                                   state.on_hand + state.pipeline);
      });

  Units sold = 0, lost = 0, demand_total = 0;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    lost += outcome.lost_trace[t];
    demand_total += trace[t];
  }
  sold = outcome.sold_units_total;
  CHECK(sold + lost == demand_total);
  CHECK(outcome.ordered_units_total ==
        outcome.arrived_units_total + outcome.pipeline_end_units);
}
