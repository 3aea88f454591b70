#include "orpr/baselines/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "orpr/core/errors.hpp"

namespace orpr::baselines {

namespace {

// Acklam's rational approximation to the inverse normal CDF (~1e-9 before
// refinement).
double inverse_normal_estimate(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

constexpr double kInvSqrt2Pi = 0.3989422804014327;

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double n = a;
  for (int i = 0; i < 500; ++i) {
    n += 1.0;
    term *= x / n;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) = 1 - P(a, x), valid for x >= a + 1
// (modified Lentz).
double gamma_q_contfrac(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal_quantile requires p in (0, 1)");
  }
  double x = inverse_normal_estimate(p);
  // One Newton step on the CDF.
  const double err = normal_cdf(x) - p;
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  if (pdf > 0.0) x -= err / pdf;
  return x;
}

double gamma_cdf(double shape, double scale, double x) {
  if (shape <= 0.0 || scale <= 0.0) {
    throw DomainError("gamma_cdf requires shape, scale > 0");
  }
  if (x <= 0.0) return 0.0;
  return gamma_p(shape, x / scale);
}

double gamma_quantile(double shape, double scale, double p) {
  if (shape <= 0.0 || scale <= 0.0) {
    throw DomainError("gamma_quantile requires shape, scale > 0");
  }
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("gamma_quantile requires p in (0, 1)");
  }

  // Bracket the root of CDF(x) = p around the mean, then bisect.
  double lo = 0.0;
  double hi = shape * scale;
  while (gamma_p(shape, hi / scale) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw NumericError("gamma_quantile bracket overflow");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (gamma_p(shape, mid / scale) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-12 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

void PtoInputs::validate() const {
  if (sigma_d < 0.0) throw DomainError("sigma_d must be >= 0");
  if (gamma_shape <= 0.0 || gamma_scale <= 0.0) {
    throw DomainError("gamma parameters must be > 0");
  }
  if (stockout_cost <= 0.0 || holding_cost <= 0.0) {
    throw DomainError("stockout and holding costs must be > 0");
  }
  if (review_days < 1) throw DomainError("review_days must be >= 1");
  if (lead_days < 0) throw DomainError("lead_days must be >= 0");
}

BaseStockPolicy pto_normal(const PtoInputs& inputs) {
  inputs.validate();
  const double risk = static_cast<double>(inputs.review_days + inputs.lead_days);
  double level = inputs.mu_d * risk;
  if (inputs.sigma_d > 0.0) {
    level += normal_quantile(inputs.critical_ratio()) * inputs.sigma_d * std::sqrt(risk);
  }
  return {std::max(0.0, level), "PTO_normal"};
}

BaseStockPolicy pto_gamma(const PtoInputs& inputs) {
  inputs.validate();
  const double risk = static_cast<double>(inputs.review_days + inputs.lead_days);
  const double level =
      gamma_quantile(risk * inputs.gamma_shape, inputs.gamma_scale,
                     inputs.critical_ratio());
  return {std::max(0.0, level), "PTO_gamma"};
}

double quantile_policy(std::span<const Units> window, double x, int risk_days) {
  if (window.empty()) throw DomainError("quantile_policy needs a nonempty window");
  if (!(x > 0.0 && x < 100.0)) throw DomainError("percentile must lie in (0, 100)");
  if (risk_days < 1) throw DomainError("risk_days must be >= 1");

  std::vector<double> sorted(window.begin(), window.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = (x / 100.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  const double quantile = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  return quantile * static_cast<double>(risk_days);
}

Units base_stock_to_order(double base_stock_level, Units inventory_position) {
  if (base_stock_level < 0.0 || inventory_position < 0) {
    throw DomainError("base_stock_to_order requires nonnegative inputs");
  }
  const double gap = base_stock_level - static_cast<double>(inventory_position);
  if (gap <= 0.0) return 0;
  return static_cast<Units>(std::floor(gap + 0.5));
}

MomentEstimate estimate_moments(std::span<const Units> window) {
  MomentEstimate est;
  if (window.empty()) return est;
  double sum = 0.0;
  for (Units d : window) sum += static_cast<double>(d);
  est.mu = sum / static_cast<double>(window.size());
  double sq = 0.0;
  for (Units d : window) {
    const double delta = static_cast<double>(d) - est.mu;
    sq += delta * delta;
  }
  est.sigma = std::sqrt(sq / static_cast<double>(window.size()));
  if (est.mu > 0.0 && est.sigma > 0.0) {
    est.gamma_shape = est.mu * est.mu / (est.sigma * est.sigma);
    est.gamma_scale = est.sigma * est.sigma / est.mu;
    est.gamma_valid = true;
  }
  return est;
}

}  // namespace orpr::baselines
