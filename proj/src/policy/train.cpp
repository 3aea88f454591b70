#include "orpr/policy/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "orpr/core/errors.hpp"

namespace orpr::policy {

void TrainSchedule::validate() const {
  if (s1_epochs < 0 || s2_epochs < 0 || s3_epochs < 0) {
    throw ConfigError("epoch counts must be >= 0");
  }
  if (s1_lr <= 0.0 || s2_lr <= 0.0 || s3_lr <= 0.0) {
    throw ConfigError("learning rates must be > 0");
  }
  if (vae_kl_weight < 0.0) throw ConfigError("vae_kl_weight must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

void AdaptiveSgd::step(std::span<double> params, std::span<const double> grads,
                       double lr) {
  constexpr double kDecay = 0.99;
  constexpr double kEps = 1e-8;
  ++steps_;
  const double correction = 1.0 - std::pow(kDecay, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    accum_[i] = kDecay * accum_[i] + (1.0 - kDecay) * grads[i] * grads[i];
    params[i] -= lr * grads[i] / (std::sqrt(accum_[i] / correction) + kEps);
  }
}

namespace {

// Gradient mask per stage; returns true when the group is trainable.
bool trainable(Stage stage, const std::string& group) {
  const bool encoder = group.rfind("enc", 0) == 0 || group == "gate";
  const bool forecast = group.rfind("fc.", 0) == 0;
  const bool decision = group.rfind("dec.", 0) == 0;
  switch (stage) {
    case Stage::kS1Forecast: return encoder || forecast;
    case Stage::kS2DecisionFrozen: return decision;
    case Stage::kS3Joint: return encoder || decision || forecast;
  }
  return false;
}

void mask_gradients(const PolicyNet& net, Stage stage, std::span<double> grads) {
  for (const auto& g : net.params().groups()) {
    if (!trainable(stage, g.name)) {
      std::fill(grads.begin() + static_cast<std::ptrdiff_t>(g.offset),
                grads.begin() + static_cast<std::ptrdiff_t>(g.offset + g.size), 0.0);
    }
  }
}

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::kS1Forecast: return "S1";
    case Stage::kS2DecisionFrozen: return "S2";
    case Stage::kS3Joint: return "S3";
  }
  return "?";
}

}  // namespace

double batch_loss_and_grad(const PolicyNet& net, std::span<const TrainSample> batch,
                           std::span<const double> noise, double kl_weight,
                           std::span<double> grads, double* forecast_loss,
                           double* decision_loss, double* kl_term) {
  const auto& config = net.config();
  const auto z = static_cast<std::size_t>(config.latent_dim);
  const auto a = static_cast<std::size_t>(config.n_actions());
  if (noise.size() != batch.size() * z) {
    throw DomainError("noise buffer must be batch x latent_dim");
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  double fcst_total = 0.0, ce_total = 0.0, kl_total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& sample = batch[i];
    if (sample.label_v < config.action_min || sample.label_v > config.action_max) {
      throw DomainError("label v=" + std::to_string(sample.label_v) +
                        " outside action grid");
    }
    const auto trace = net.forward(sample.features, noise.subspan(i * z, z));

    // Forecast branch: squared error.
    const double err = trace.forecast - sample.demand_target;
    fcst_total += err * err;
    if (!grads.empty()) {
      net.backward_forecast(trace, 2.0 * err * inv_b, grads);
    }

    // Decision branch: cross-entropy + weighted gaussian KL.
    const auto log_probs = log_softmax(trace.logits, 1.0);
    const auto label_idx = static_cast<std::size_t>(sample.label_v - config.action_min);
    ce_total += -log_probs[label_idx];
    kl_total += gaussian_kl(trace.mu, trace.log_sigma);
    if (!grads.empty()) {
      std::vector<double> d_logits(a);
      for (std::size_t k = 0; k < a; ++k) {
        d_logits[k] = (std::exp(log_probs[k]) - (k == label_idx ? 1.0 : 0.0)) * inv_b;
      }
      std::vector<double> d_mu(z), d_ls(z);
      for (std::size_t k = 0; k < z; ++k) {
        d_mu[k] = kl_weight * trace.mu[k] * inv_b;
        const double sigma2 = trace.sigma[k] * trace.sigma[k];
        d_ls[k] = kl_weight * (sigma2 - 1.0) * inv_b;
      }
      net.backward_decision(trace, d_logits, d_mu, d_ls, /*propagate_encoder=*/true,
                            grads);
    }
  }

  if (forecast_loss) *forecast_loss = fcst_total * inv_b;
  if (decision_loss) *decision_loss = ce_total * inv_b;
  if (kl_term) *kl_term = kl_total * inv_b;
  return (fcst_total + ce_total + kl_weight * kl_total) * inv_b;
}

std::vector<EpochLog> pretrain(PolicyNet& net, std::span<const TrainSample> dataset,
                               const TrainSchedule& schedule,
                               const std::string& log_path) {
  schedule.validate();
  if (dataset.empty()) throw DomainError("pretrain dataset is empty");
  const auto& config = net.config();
  for (const auto& sample : dataset) {
    if (sample.label_v < config.action_min || sample.label_v > config.action_max) {
      throw DomainError("label v=" + std::to_string(sample.label_v) +
                        " outside action grid [" + std::to_string(config.action_min) +
                        ", " + std::to_string(config.action_max) + "]");
    }
  }

  std::mt19937_64 rng(schedule.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto z = static_cast<std::size_t>(config.latent_dim);
  const auto a = static_cast<std::size_t>(config.n_actions());
  const double kl_weight = schedule.vae_kl_weight;

  AdaptiveSgd optimizer(net.params().size());
  std::vector<double> grads(net.params().size(), 0.0);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochLog> logs;
  std::ofstream log_file;
  if (!log_path.empty()) {
    log_file.open(log_path);
    if (!log_file) throw IoError("cannot write training log " + log_path);
  }

  auto run_stage = [&](Stage stage, int epochs, double lr) {
    for (int epoch = 0; epoch < epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      double fcst_sum = 0.0, ce_sum = 0.0, kl_sum = 0.0;
      int batches = 0;

      for (std::size_t begin = 0; begin < order.size();
           begin += static_cast<std::size_t>(schedule.batch_size)) {
        const std::size_t end = std::min(
            begin + static_cast<std::size_t>(schedule.batch_size), order.size());
        const std::size_t b = end - begin;
        const double inv_b = 1.0 / static_cast<double>(b);
        std::fill(grads.begin(), grads.end(), 0.0);

        double fcst_batch = 0.0, ce_batch = 0.0, kl_batch = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
          const auto& sample = dataset[order[k]];
          std::vector<double> noise(z);
          for (double& n : noise) n = normal(rng);
          const auto trace = net.forward(sample.features, noise);

          if (stage == Stage::kS1Forecast) {
            const double err = trace.forecast - sample.demand_target;
            fcst_batch += err * err;
            net.backward_forecast(trace, 2.0 * err * inv_b, grads);
            // Decision loss logged for reference, not optimized.
            const auto log_probs = log_softmax(trace.logits, 1.0);
            ce_batch += -log_probs[static_cast<std::size_t>(sample.label_v -
                                                            config.action_min)];
            kl_batch += gaussian_kl(trace.mu, trace.log_sigma);
          } else {
            const auto log_probs = log_softmax(trace.logits, 1.0);
            const auto label_idx =
                static_cast<std::size_t>(sample.label_v - config.action_min);
            ce_batch += -log_probs[label_idx];
            kl_batch += gaussian_kl(trace.mu, trace.log_sigma);
            std::vector<double> d_logits(a);
            for (std::size_t j = 0; j < a; ++j) {
              d_logits[j] =
                  (std::exp(log_probs[j]) - (j == label_idx ? 1.0 : 0.0)) * inv_b;
            }
            std::vector<double> d_mu(z), d_ls(z);
            for (std::size_t j = 0; j < z; ++j) {
              d_mu[j] = kl_weight * trace.mu[j] * inv_b;
              const double sigma2 = trace.sigma[j] * trace.sigma[j];
              d_ls[j] = kl_weight * (sigma2 - 1.0) * inv_b;
            }
            net.backward_decision(trace, d_logits, d_mu, d_ls,
                                  stage == Stage::kS3Joint, grads);
            // Forecast loss is monitored through every stage.
            const double err = trace.forecast - sample.demand_target;
            fcst_batch += err * err;
          }
        }

        mask_gradients(net, stage, grads);
        optimizer.step(net.params().values(), grads, lr);

        fcst_sum += fcst_batch / static_cast<double>(b);
        ce_sum += ce_batch / static_cast<double>(b);
        kl_sum += kl_batch / static_cast<double>(b);
        ++batches;
      }

      EpochLog entry;
      entry.stage = stage;
      entry.epoch = epoch;
      entry.forecast_loss = fcst_sum / batches;
      entry.decision_loss = ce_sum / batches;
      entry.kl_term = kl_sum / batches;
      if (!std::isfinite(entry.forecast_loss) || !std::isfinite(entry.decision_loss) ||
          !std::isfinite(entry.kl_term)) {
        throw NumericError("training diverged at stage " +
                           std::string(stage_name(stage)) + " epoch " +
                           std::to_string(epoch));
      }
      logs.push_back(entry);
      if (log_file) {
        char line[192];
        std::snprintf(line, sizeof(line),
                      "{\"stage\":\"%s\",\"epoch\":%d,\"forecast_loss\":%.9g,"
                      "\"decision_loss\":%.9g,\"kl_term\":%.9g}",
                      stage_name(stage), epoch, entry.forecast_loss,
                      entry.decision_loss, entry.kl_term);
        log_file << line << '\n';
      }
    }
  };

  run_stage(Stage::kS1Forecast, schedule.s1_epochs, schedule.s1_lr);
  run_stage(Stage::kS2DecisionFrozen, schedule.s2_epochs, schedule.s2_lr);
  run_stage(Stage::kS3Joint, schedule.s3_epochs, schedule.s3_lr);
  return logs;
}

double grad_check(const PolicyNet& net, std::span<const TrainSample> batch,
                  double epsilon, double kl_weight) {
  if (batch.empty()) throw DomainError("grad_check needs a nonempty batch");
  const auto z = static_cast<std::size_t>(net.config().latent_dim);

  // Frozen noise so the finite-difference and analytic paths evaluate the
  // same deterministic function.
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise(batch.size() * z);
  for (double& n : noise) n = normal(rng);

  std::vector<double> analytic(net.params().size(), 0.0);
  batch_loss_and_grad(net, batch, noise, kl_weight, analytic);

  PolicyNet probe = net;
  auto values = probe.params().values();
  double max_rel = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double original = values[i];
    values[i] = original + epsilon;
    const double up = batch_loss_and_grad(probe, batch, noise, kl_weight, {});
    values[i] = original - epsilon;
    const double down = batch_loss_and_grad(probe, batch, noise, kl_weight, {});
    values[i] = original;
    const double fd = (up - down) / (2.0 * epsilon);
    const double denom = std::max({std::fabs(fd), std::fabs(analytic[i]), 1e-3});
    max_rel = std::max(max_rel, std::fabs(fd - analytic[i]) / denom);
  }
  return max_rel;
}

}  // namespace orpr::policy
