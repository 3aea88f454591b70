#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "orpr/policy/net.hpp"

namespace orpr::policy {

enum class Stage { kS1Forecast, kS2DecisionFrozen, kS3Joint };

struct TrainSchedule {
  int s1_epochs = 30;
  int s2_epochs = 40;
  int s3_epochs = 15;
  double s1_lr = 5e-3;
  double s2_lr = 5e-3;
  double s3_lr = 1e-3;
  double vae_kl_weight = 0.1;
  int batch_size = 32;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainSample {
  FeatureVector features;
  int label_v = 0;           // reference inventory days (within the grid)
  double demand_target = 0;  // units/day, for the forecast head
};

struct EpochLog {
  Stage stage = Stage::kS1Forecast;
  int epoch = 0;
  double forecast_loss = 0.0;
  double decision_loss = 0.0;  // cross-entropy part
  double kl_term = 0.0;
};

// Momentum-free adaptive step: per-parameter squared-gradient accumulator
// with fixed decay 0.99 and cold-start bias correction, step
// lr * g / (sqrt(acc / (1 - decay^t)) + 1e-8).
class AdaptiveSgd {
 public:
  explicit AdaptiveSgd(std::size_t n_params) : accum_(n_params, 0.0) {}
  void step(std::span<double> params, std::span<const double> grads, double lr);

 private:
  std::vector<double> accum_;
  long steps_ = 0;
};

// Three-stage schedule: S1 fits encoder + forecast head to demand targets,
// S2 freezes them and fits the decision head on labels by maximizing the
// ELBO (cross-entropy + vae_kl_weight * gaussian KL), S3 unfreezes all
// parameters and optimizes the decision loss alone while the forecast loss
// is only logged. Throws DataError-style DomainError on labels outside the
// grid and NumericError on divergence.
std::vector<EpochLog> pretrain(PolicyNet& net, std::span<const TrainSample> dataset,
                               const TrainSchedule& schedule,
                               const std::string& log_path = "");

// Central finite differences over every parameter group against the analytic
// gradient of the combined pretrain loss on `batch` (frozen per-example
// latent noise); returns the maximum relative error.
double grad_check(const PolicyNet& net, std::span<const TrainSample> batch,
                  double epsilon, double kl_weight = 0.1);

// Analytic gradient and loss of the combined pretrain objective on a batch
// with the supplied per-example noise (layout: batch x latent_dim).
double batch_loss_and_grad(const PolicyNet& net, std::span<const TrainSample> batch,
                           std::span<const double> noise, double kl_weight,
                           std::span<double> grads, double* forecast_loss = nullptr,
                           double* decision_loss = nullptr, double* kl_term = nullptr);

}  // namespace orpr::policy
