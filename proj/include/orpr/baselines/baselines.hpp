#pragma once

#include <span>
#include <string>

#include "orpr/core/types.hpp"

namespace orpr::baselines {

// Inverse standard normal CDF, accurate to ~1e-9 (rational approximation
// refined by one Newton step on the erfc-based CDF). p must lie in (0, 1).
double normal_quantile(double p);

// Standard normal CDF via erfc.
double normal_cdf(double x);

// Regularized lower incomplete gamma P(shape, x), series for x < shape + 1
// and continued fraction otherwise.
double gamma_cdf(double shape, double scale, double x);

// Inverse of gamma_cdf in x by bracketed root-finding, relative accuracy
// ~1e-10. shape, scale > 0 and p in (0, 1).
double gamma_quantile(double shape, double scale, double p);

struct PtoInputs {
  double mu_d = 0.0;        // mean daily demand
  double sigma_d = 0.0;     // std of daily demand
  double gamma_shape = 1.0; // k, per-day
  double gamma_scale = 1.0; // theta
  int review_days = 1;      // R
  int lead_days = 0;        // LT
  double stockout_cost = 1.0;  // b, per unit
  double holding_cost = 1.0;   // h, per unit

  void validate() const;
  double critical_ratio() const { return stockout_cost / (stockout_cost + holding_cost); }
};

struct BaseStockPolicy {
  double base_stock_level = 0.0;  // S, units
  std::string method;
};

// S = mu_D (R + LT) + Phi^{-1}(b / (b + h)) * sigma_D * sqrt(R + LT), clamped at 0.
BaseStockPolicy pto_normal(const PtoInputs& inputs);

// Daily demand Gamma(k, theta) means risk-period demand is
// Gamma((R + LT) k, theta); S is its critical-ratio quantile. Zero-variance
// inputs fall back to the degenerate normal formula.
BaseStockPolicy pto_gamma(const PtoInputs& inputs);

// Empirical x-th percentile of the window (linear interpolation) times the
// risk period. x in (0, 100); window must be nonempty.
double quantile_policy(std::span<const Units> window, double x, int risk_days);

// Order-up-to execution: max(0, round(S - position)), round half up.
Units base_stock_to_order(double base_stock_level, Units inventory_position);

// Method-of-moments gamma fit (k = mu^2/sigma^2, theta = sigma^2/mu) from a
// demand window; degenerate windows reported via the boolean.
struct MomentEstimate {
  double mu = 0.0;
  double sigma = 0.0;
  double gamma_shape = 0.0;
  double gamma_scale = 0.0;
  bool gamma_valid = false;
};
MomentEstimate estimate_moments(std::span<const Units> window);

}  // namespace orpr::baselines
