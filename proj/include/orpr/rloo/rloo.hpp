#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orpr/policy/train.hpp"
#include "orpr/sim/simulator.hpp"

namespace orpr::rloo {

struct RewardConfig {
  double omega = 0.7;        // hybrid weight on the rule reward
  double focal_gamma = 1.0;  // focal exponent, >= 0
  double sign_alpha = 2.0;   // wrong-direction weight, > 1
  double kl_beta = 0.05;     // KL penalty coefficient, >= 0
  int sim_horizon_days = 14; // H
  int k_samples = 4;         // samples per prompt, >= 2
  double temperature = 1.0;

  void validate() const;
};

// Sign-aware focal rule reward. Adjustments are measured against the
// incumbent decision a_base: delta_hat = y - a_base, delta_star =
// a_star - a_base, e = (y - a_star)^2, w = 1 on matching adjustment signs
// (zero matches either) else sign_alpha; reward = -(1 - exp(-w e))^gamma * w e.
double rule_reward(int y, int a_star, int a_base, const RewardConfig& cfg);

// Rollout context for the simulation reward: the forward slice starting at
// the decision day plus the inventory state and frozen demand average there.
struct RolloutContext {
  std::span<const Units> forward_trace;  // >= H days when usable
  const SkuRecord* sku = nullptr;
  Units initial_inventory = 0;
  double demand_avg = 0.0;  // frozen v -> units conversion over the window
};

// Pareto-dominance indicator of the candidate decision y against the
// reference a_star over an H-day rollout (the tested decision repeats at
// every review inside the window). Both rollouts share the demand trace, so
// comparing average inventory is comparing turnover. Ties use relative
// epsilon 1e-9. Returns +1 / -1 / 0.
int sim_reward(const RolloutContext& rollout, int y, int a_star,
               const RewardConfig& cfg);

double hybrid_reward(double rule, double sim, const RewardConfig& cfg);

// R = r_total - beta * (log pi_theta - log pi_ref) at the sampled action.
double kl_adjusted_return(double r_total, double logp_theta, double logp_ref,
                          double beta);

// One training prompt: features, reference and incumbent decisions, and the
// rollout context for simulation rewards (unusable contexts fall back to the
// rule reward alone, with a warning counted).
struct Prompt {
  policy::FeatureVector features;
  int a_star = 0;
  int a_base = 0;
  RolloutContext rollout;
};

// Negated RLOO surrogate -sum_j w_j log pi(y_j | x_j) with frozen noise,
// actions and weights; accumulates its analytic gradient when `grads` is
// nonempty. Layouts: noise is (prompts*k) x latent, action_indices and
// weights are prompts*k. Exposed for the finite-difference checks.
double surrogate_loss_and_grad(const policy::PolicyNet& net,
                               std::span<const Prompt> prompts,
                               std::span<const double> noise,
                               std::span<const int> action_indices,
                               std::span<const double> weights, double temperature,
                               std::span<double> grads);

struct SampleRecord {
  int action = 0;
  double reward = 0.0;    // R^(j)
  double baseline = 0.0;  // b^(j)
  double log_prob = 0.0;
};

struct BatchStats {
  double mean_reward = 0.0;
  double mean_rule_reward = 0.0;
  double mean_sim_reward = 0.0;
  double mean_kl = 0.0;        // exact categorical KL(pi_theta || pi_ref)
  double mean_advantage = 0.0; // ~0 by the leave-one-out identity
  double grad_norm = 0.0;
  int sim_calls = 0;
  int rule_calls = 0;
  int skipped_rollouts = 0;
  std::vector<std::vector<SampleRecord>> samples;  // per prompt
};

// Which parameter groups the RLOO step moves. The decision head is the
// policy-network portion proper; encoders stay as pretrained unless the full
// model is requested.
enum class UpdateScope { kDecisionHead, kAll };

class RlooTrainer {
 public:
  // ref_policy is copied and frozen.
  RlooTrainer(policy::PolicyNet& net, const policy::PolicyNet& ref_policy,
              const RewardConfig& cfg, double learning_rate, std::uint64_t seed,
              UpdateScope scope = UpdateScope::kDecisionHead);

  // Draws k actions per prompt, scores them through the reward chain, and
  // takes one ascent step on the leave-one-out surrogate.
  BatchStats step(std::span<const Prompt> batch);

  // Cumulative instrumentation across steps.
  long total_sim_calls() const { return total_sim_calls_; }
  long total_rule_calls() const { return total_rule_calls_; }

  const policy::PolicyNet& reference() const { return ref_; }

 private:
  policy::PolicyNet& net_;
  policy::PolicyNet ref_;
  RewardConfig cfg_;
  double lr_;
  UpdateScope scope_;
  std::mt19937_64 rng_;
  long total_sim_calls_ = 0;
  long total_rule_calls_ = 0;
};

struct FinetuneOptions {
  int n_steps = 200;
  int batch_size = 16;
  int checkpoint_every = 25;
  double learning_rate = 2e-2;
  UpdateScope scope = UpdateScope::kDecisionHead;
  std::uint64_t seed = 7;
  std::string log_path;
  // Validation cost of a candidate policy; lower is better. When provided,
  // the best checkpoint by validation cost is restored at the end.
  std::function<double(const policy::PolicyNet&)> validation_cost;
};

struct FinetuneLogRow {
  int step = 0;
  double mean_reward = 0.0;
  double mean_rule_reward = 0.0;
  double mean_sim_reward = 0.0;
  double exact_kl = 0.0;
  double grad_norm = 0.0;
  std::optional<double> validation_cost;  // present on checkpoint steps
};

struct FinetuneResult {
  std::vector<FinetuneLogRow> log;
  long sim_calls = 0;
  long rule_calls = 0;
  double best_validation_cost = 0.0;
  bool restored_checkpoint = false;
};

// Outer loop over seeded random batches of the prompt dataset.
FinetuneResult finetune(policy::PolicyNet& net, const policy::PolicyNet& ref_policy,
                        std::span<const Prompt> dataset, const RewardConfig& cfg,
                        const FinetuneOptions& options);

}  // namespace orpr::rloo
