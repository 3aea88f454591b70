#include "orpr/rloo/rloo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "orpr/core/errors.hpp"

namespace orpr::rloo {

void RewardConfig::validate() const {
  if (omega < 0.0 || omega > 1.0) throw ConfigError("omega must lie in [0, 1]");
  if (focal_gamma < 0.0) throw ConfigError("focal_gamma must be >= 0");
  if (sign_alpha <= 1.0) throw ConfigError("sign_alpha must be > 1");
  if (kl_beta < 0.0) throw ConfigError("kl_beta must be >= 0");
  if (sim_horizon_days < 1) throw ConfigError("sim_horizon_days must be >= 1");
  if (k_samples < 2) throw ConfigError("k_samples must be >= 2");
  if (temperature <= 0.0) throw ConfigError("temperature must be > 0");
}

double rule_reward(int y, int a_star, int a_base, const RewardConfig& cfg) {
  const int delta_hat = y - a_base;
  const int delta_star = a_star - a_base;
  const double err = static_cast<double>(y - a_star) * static_cast<double>(y - a_star);
  // sign(0) matches either direction: a zero adjustment is never penalized
  // as wrong-way.
  const bool mismatch = delta_hat != 0 && delta_star != 0 &&
                        ((delta_hat > 0) != (delta_star > 0));
  const double w = mismatch ? cfg.sign_alpha : 1.0;
  const double we = w * err;
  const double focal = std::pow(1.0 - std::exp(-we), cfg.focal_gamma);
  return -focal * we;
}

namespace {

struct RolloutMetrics {
  double avg_inventory = 0.0;
  Cents lost_value = 0;
};

RolloutMetrics roll_forward(const RolloutContext& rollout, int v,
                            const RewardConfig& cfg) {
  SimConfig sim_cfg;
  sim_cfg.horizon_days = cfg.sim_horizon_days;
  sim_cfg.initial_inventory = rollout.initial_inventory;
  sim_cfg.review_offset = 0;
  sim_cfg.fixed_demand_avg = rollout.demand_avg;
  const auto window =
      rollout.forward_trace.subspan(0, static_cast<std::size_t>(cfg.sim_horizon_days));
  const SimOutcome outcome =
      sim::run_simulation(window, *rollout.sku, sim_cfg, [v](const sim::ReviewState& s) {
        return sim::round_half_up(v * s.demand_avg);
      });
  return {outcome.avg_inventory_units, outcome.lost_sales_value};
}

// a <= b within relative epsilon 1e-9.
bool leq(double a, double b) {
  const double eps = 1e-9 * std::max({std::fabs(a), std::fabs(b), 1.0});
  return a <= b + eps;
}
bool lt(double a, double b) {
  const double eps = 1e-9 * std::max({std::fabs(a), std::fabs(b), 1.0});
  return a < b - eps;
}

}  // namespace

int sim_reward(const RolloutContext& rollout, int y, int a_star,
               const RewardConfig& cfg) {
  if (rollout.sku == nullptr ||
      static_cast<int>(rollout.forward_trace.size()) < cfg.sim_horizon_days) {
    throw DomainError("rollout context shorter than the simulation horizon");
  }
  const RolloutMetrics candidate = roll_forward(rollout, y, cfg);
  const RolloutMetrics reference = roll_forward(rollout, a_star, cfg);

  // Shared demand trace: the average-inventory comparison is the turnover
  // comparison.
  const double t = candidate.avg_inventory, t0 = reference.avg_inventory;
  const double l = static_cast<double>(candidate.lost_value);
  const double l0 = static_cast<double>(reference.lost_value);

  const bool dominates = leq(t, t0) && leq(l, l0) && (lt(t, t0) || lt(l, l0));
  const bool dominated = leq(t0, t) && leq(l0, l) && (lt(t0, t) || lt(l0, l));
  if (dominates) return 1;
  if (dominated) return -1;
  return 0;
}

double hybrid_reward(double rule, double sim, const RewardConfig& cfg) {
  return cfg.omega * rule + (1.0 - cfg.omega) * sim;
}

double kl_adjusted_return(double r_total, double logp_theta, double logp_ref,
                          double beta) {
  return r_total - beta * (logp_theta - logp_ref);
}

double surrogate_loss_and_grad(const policy::PolicyNet& net,
                               std::span<const Prompt> prompts,
                               std::span<const double> noise,
                               std::span<const int> action_indices,
                               std::span<const double> weights, double temperature,
                               std::span<double> grads) {
  const auto z = static_cast<std::size_t>(net.config().latent_dim);
  const auto a = static_cast<std::size_t>(net.config().n_actions());
  const std::size_t k = action_indices.size() / prompts.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t flat = i * k + j;
      const auto trace =
          net.forward(prompts[i].features, noise.subspan(flat * z, z));
      const auto log_probs = policy::log_softmax(trace.logits, temperature);
      const auto idx = static_cast<std::size_t>(action_indices[flat]);
      loss -= weights[flat] * log_probs[idx];
      if (!grads.empty()) {
        std::vector<double> d_logits(a);
        for (std::size_t m = 0; m < a; ++m) {
          const double indicator = m == idx ? 1.0 : 0.0;
          d_logits[m] = -weights[flat] * (indicator - std::exp(log_probs[m])) /
                        temperature;
        }
        net.backward_decision(trace, d_logits, {}, {}, /*propagate_encoder=*/true,
                              grads);
      }
    }
  }
  return loss;
}

RlooTrainer::RlooTrainer(policy::PolicyNet& net, const policy::PolicyNet& ref_policy,
                         const RewardConfig& cfg, double learning_rate,
                         std::uint64_t seed, UpdateScope scope)
    : net_(net),
      ref_(ref_policy),
      cfg_(cfg),
      lr_(learning_rate),
      scope_(scope),
      rng_(seed) {
  cfg_.validate();
}

BatchStats RlooTrainer::step(std::span<const Prompt> batch) {
  if (batch.empty()) throw DomainError("rloo step needs a nonempty batch");
  const auto z = static_cast<std::size_t>(net_.config().latent_dim);
  const auto k = static_cast<std::size_t>(cfg_.k_samples);
  const std::size_t total = batch.size() * k;

  // Actions are drawn i.i.d. from the tempered softmax of the
  // deterministic-mode logits (z = mu). The latent noise is an ELBO training
  // device in pretraining; resampling z per draw would make the k samples
  // come from different conditionals and destabilize the baselines.
  std::vector<double> noise(total * z, 0.0);
  std::vector<int> action_indices(total);
  std::vector<double> returns(total);
  std::vector<double> weights(total);

  BatchStats stats;
  stats.samples.resize(batch.size());
  double reward_sum = 0.0, rule_sum = 0.0, sim_sum = 0.0, kl_sum = 0.0, adv_sum = 0.0;
  int hybrid_count = 0;

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Prompt& prompt = batch[i];
    // Reference distribution in deterministic mode; also used for exact KL.
    const auto ref_trace = ref_.forward(prompt.features);
    const auto ref_log_probs = policy::log_softmax(ref_trace.logits, cfg_.temperature);
    const auto trace = net_.forward(prompt.features);
    kl_sum += policy::categorical_kl(trace.logits, ref_trace.logits,
                                     cfg_.temperature);

    const bool rollout_usable =
        prompt.rollout.sku != nullptr &&
        static_cast<int>(prompt.rollout.forward_trace.size()) >= cfg_.sim_horizon_days;
    const bool want_sim = cfg_.omega < 1.0;
    if (want_sim && !rollout_usable) ++stats.skipped_rollouts;

    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t flat = i * k + j;
      auto sample =
          policy::sample_action(trace.logits, cfg_.temperature, rng_,
                                net_.config().action_min);
      action_indices[flat] = sample.action - net_.config().action_min;

      double rule = 0.0;
      if (cfg_.omega > 0.0) {
        rule = rule_reward(sample.action, prompt.a_star, prompt.a_base, cfg_);
        ++stats.rule_calls;
        ++total_rule_calls_;
      }
      double r_total;
      if (want_sim && rollout_usable) {
        const int sim = sim_reward(prompt.rollout, sample.action, prompt.a_star, cfg_);
        stats.sim_calls += 2;  // candidate and reference rollouts
        total_sim_calls_ += 2;
        sim_sum += sim;
        r_total = hybrid_reward(rule, sim, cfg_);
        ++hybrid_count;
      } else {
        // Rule-only fallback when the rollout window is unavailable.
        r_total = rule;
      }
      rule_sum += rule;

      const double logp_ref =
          ref_log_probs[static_cast<std::size_t>(action_indices[flat])];
      const double ret =
          kl_adjusted_return(r_total, sample.log_prob, logp_ref, cfg_.kl_beta);
      if (!std::isfinite(ret)) {
        throw NumericError("non-finite return for prompt " + std::to_string(i) +
                           ", sample " + std::to_string(j));
      }
      returns[flat] = ret;
      reward_sum += r_total;

      stats.samples[i].push_back({sample.action, ret, 0.0, sample.log_prob});
    }

    // Leave-one-out baselines.
    double prompt_sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) prompt_sum += returns[i * k + j];
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t flat = i * k + j;
      const double baseline =
          (prompt_sum - returns[flat]) / static_cast<double>(k - 1);
      const double advantage = returns[flat] - baseline;
      stats.samples[i][j].baseline = baseline;
      weights[flat] = advantage / static_cast<double>(total);
      adv_sum += advantage;
    }
  }

  std::vector<double> grads(net_.params().size(), 0.0);
  surrogate_loss_and_grad(net_, batch, noise, action_indices, weights,
                          cfg_.temperature, grads);
  if (scope_ == UpdateScope::kDecisionHead) {
    for (const auto& group : net_.params().groups()) {
      if (group.name.rfind("dec.", 0) != 0) {
        std::fill(grads.begin() + static_cast<std::ptrdiff_t>(group.offset),
                  grads.begin() + static_cast<std::ptrdiff_t>(group.offset + group.size),
                  0.0);
      }
    }
  }
  double norm_sq = 0.0;
  for (double g : grads) {
    if (!std::isfinite(g)) throw NumericError("non-finite gradient in rloo step");
    norm_sq += g * g;
  }
  // Alg. 1 updates theta by plain gradient descent on the surrogate; the
  // adaptive rule stays in pretraining only.
  auto params = net_.params().values();
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] -= lr_ * grads[i];
  }

  stats.mean_reward = reward_sum / static_cast<double>(total);
  stats.mean_rule_reward = rule_sum / static_cast<double>(total);
  stats.mean_sim_reward = hybrid_count > 0 ? sim_sum / hybrid_count : 0.0;
  stats.mean_kl = kl_sum / static_cast<double>(batch.size());
  stats.mean_advantage = adv_sum / static_cast<double>(total);
  stats.grad_norm = std::sqrt(norm_sq);
  return stats;
}

FinetuneResult finetune(policy::PolicyNet& net, const policy::PolicyNet& ref_policy,
                        std::span<const Prompt> dataset, const RewardConfig& cfg,
                        const FinetuneOptions& options) {
  if (dataset.empty()) throw DomainError("finetune dataset is empty");
  FinetuneResult result;
  if (options.n_steps == 0) return result;

  RlooTrainer trainer(net, ref_policy, cfg, options.learning_rate, options.seed,
                      options.scope);
  std::mt19937_64 batch_rng(options.seed ^ 0x9E3779B97F4A7C15ULL);

  std::ofstream log_file;
  if (!options.log_path.empty()) {
    log_file.open(options.log_path);
    if (!log_file) throw IoError("cannot write finetune log " + options.log_path);
  }

  std::vector<double> best_params;
  double best_cost = std::numeric_limits<double>::infinity();
  auto checkpoint = [&]() -> std::optional<double> {
    if (!options.validation_cost) return std::nullopt;
    const double cost = options.validation_cost(net);
    if (cost < best_cost) {
      best_cost = cost;
      const auto values = net.params().values();
      best_params.assign(values.begin(), values.end());
    }
    return cost;
  };
  checkpoint();  // the incoming pretrained policy competes too

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  const auto batch_size =
      std::min<std::size_t>(static_cast<std::size_t>(options.batch_size),
                            dataset.size());
  std::vector<Prompt> batch;
  for (int step = 0; step < options.n_steps; ++step) {
    batch.clear();
    for (std::size_t b = 0; b < batch_size; ++b) {
      if (cursor >= order.size()) {
        std::shuffle(order.begin(), order.end(), batch_rng);
        cursor = 0;
      }
      batch.push_back(dataset[order[cursor++]]);
    }
    const BatchStats stats = trainer.step(batch);

    FinetuneLogRow row;
    row.step = step;
    row.mean_reward = stats.mean_reward;
    row.mean_rule_reward = stats.mean_rule_reward;
    row.mean_sim_reward = stats.mean_sim_reward;
    row.exact_kl = stats.mean_kl;
    row.grad_norm = stats.grad_norm;
    const bool at_checkpoint =
        step + 1 == options.n_steps ||
        (options.checkpoint_every > 0 && (step + 1) % options.checkpoint_every == 0);
    if (at_checkpoint) row.validation_cost = checkpoint();
    result.log.push_back(row);
    if (log_file) {
      char line[288];
      if (row.validation_cost) {
        std::snprintf(line, sizeof(line),
                      "{\"step\":%d,\"mean_reward\":%.9g,\"mean_rule_reward\":%.9g,"
                      "\"mean_sim_reward\":%.9g,\"exact_kl\":%.9g,\"grad_norm\":%.9g,"
                      "\"validation_cost\":%.9g}",
                      row.step, row.mean_reward, row.mean_rule_reward,
                      row.mean_sim_reward, row.exact_kl, row.grad_norm,
                      *row.validation_cost);
      } else {
        std::snprintf(line, sizeof(line),
                      "{\"step\":%d,\"mean_reward\":%.9g,\"mean_rule_reward\":%.9g,"
                      "\"mean_sim_reward\":%.9g,\"exact_kl\":%.9g,\"grad_norm\":%.9g}",
                      row.step, row.mean_reward, row.mean_rule_reward,
                      row.mean_sim_reward, row.exact_kl, row.grad_norm);
      }
      log_file << line << '\n';
    }
  }

  result.sim_calls = trainer.total_sim_calls();
  result.rule_calls = trainer.total_rule_calls();
  if (options.validation_cost && !best_params.empty()) {
    const auto values = net.params().values();
    const bool final_is_best =
        std::equal(values.begin(), values.end(), best_params.begin());
    if (!final_is_best) {
      std::copy(best_params.begin(), best_params.end(), values.begin());
      result.restored_checkpoint = true;
    }
    result.best_validation_cost = best_cost;
  }
  return result;
}

}  // namespace orpr::rloo
