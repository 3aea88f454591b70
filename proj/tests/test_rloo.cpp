#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "orpr/core/errors.hpp"
#include "orpr/oracles/oracles.hpp"
#include "orpr/rloo/rloo.hpp"
#include "test_util.hpp"

using namespace orpr;
using namespace orpr::rloo;
using policy::FeatureVector;
using policy::NetConfig;
using policy::PolicyNet;

namespace {

NetConfig tiny_config() {
  NetConfig config;
  config.sales_width = 4;
  config.attrs_width = 3;
  config.objective_width = 2;
  config.encoder_hidden = 5;
  config.embed_dim = 5;
  config.forecast_hidden = 4;
  config.latent_dim = 3;
  config.action_min = 2;
  config.action_max = 7;
  return config;
}

FeatureVector random_features(const NetConfig& config, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  FeatureVector f;
  f.sales.resize(static_cast<std::size_t>(config.sales_width));
  f.attrs.resize(static_cast<std::size_t>(config.attrs_width));
  f.objective.resize(static_cast<std::size_t>(config.objective_width));
  for (double& x : f.sales) x = dist(rng);
  for (double& x : f.attrs) x = dist(rng);
  for (double& x : f.objective) x = dist(rng);
  return f;
}

std::vector<Prompt> rule_only_prompts(const NetConfig& config, int count, int a_star,
                                      std::mt19937_64& rng) {
  std::vector<Prompt> prompts;
  for (int i = 0; i < count; ++i) {
    Prompt prompt;
    prompt.features = random_features(config, rng);
    prompt.a_star = a_star;
    prompt.a_base = config.action_min;
    prompts.push_back(std::move(prompt));
  }
  return prompts;
}

RewardConfig rule_only_cfg() {
  RewardConfig cfg;
  cfg.omega = 1.0;
  cfg.focal_gamma = 1.0;
  cfg.sign_alpha = 2.0;
  cfg.kl_beta = 0.0;
  cfg.k_samples = 4;
  cfg.temperature = 1.0;
  return cfg;
}

}  // namespace

TEST_CASE("rule reward: exact match, sign weighting, focal factor") {
  RewardConfig cfg = rule_only_cfg();
  cfg.sign_alpha = 2.0;

  cfg.focal_gamma = 0.0;
  CHECK(rule_reward(5, 5, 3, cfg) == doctest::Approx(0.0));
  // y - a_base = +1, a_star - a_base = -1, e = 4, w = 2 -> loss 8.
  CHECK(rule_reward(4, 2, 3, cfg) == doctest::Approx(-8.0));

  cfg.focal_gamma = 1.0;
  const double expected = -(1.0 - std::exp(-8.0)) * 8.0;
  CHECK(rule_reward(4, 2, 3, cfg) == doctest::Approx(expected));
  CHECK(rule_reward(4, 2, 3, cfg) == doctest::Approx(-7.9973).epsilon(1e-4));

  // Matching direction keeps weight 1.
  cfg.focal_gamma = 0.0;
  CHECK(rule_reward(6, 4, 3, cfg) == doctest::Approx(-4.0));
  // A zero adjustment is never treated as wrong-direction.
  CHECK(rule_reward(3, 2, 3, cfg) == doctest::Approx(-1.0));
  CHECK(rule_reward(4, 3, 3, cfg) == doctest::Approx(-1.0));
}

TEST_CASE("rule reward is bounded above by zero") {
  RewardConfig cfg = rule_only_cfg();
  for (int y = 2; y <= 7; ++y) {
    for (int a_star = 2; a_star <= 7; ++a_star) {
      CHECK(rule_reward(y, a_star, 4, cfg) <= 0.0);
    }
  }
}

TEST_CASE("hybrid reward is the exact convex combination") {
  RewardConfig cfg = rule_only_cfg();
  cfg.omega = 1.0;
  CHECK(hybrid_reward(-8.0, 1.0, cfg) == doctest::Approx(-8.0));
  cfg.omega = 0.0;
  CHECK(hybrid_reward(-8.0, 1.0, cfg) == doctest::Approx(1.0));
  cfg.omega = 0.5;
  CHECK(hybrid_reward(-8.0, 1.0, cfg) == doctest::Approx(-3.5));
}

TEST_CASE("kl-adjusted return arithmetic") {
  CHECK(kl_adjusted_return(1.0, -2.0, -2.0, 0.7) == doctest::Approx(1.0));
  CHECK(kl_adjusted_return(1.0, -1.5, -2.0, 0.0) == doctest::Approx(1.0));
  CHECK(kl_adjusted_return(1.0, -1.5, -2.0, 0.2) == doctest::Approx(0.9));
}

TEST_CASE("simulation reward is a Pareto-dominance indicator") {
  // Constant demand 5 over the window, frozen conversion at 5 units/day.
  const std::vector<Units> window(10, 5);
  auto sku = testutil::make_sku("S", 100, 200, /*vlt=*/1, /*nrt=*/2);
  RolloutContext rollout;
  rollout.forward_trace = window;
  rollout.sku = &sku;
  rollout.initial_inventory = 10;
  rollout.demand_avg = 5.0;

  RewardConfig cfg = rule_only_cfg();
  cfg.omega = 0.5;
  cfg.sim_horizon_days = 7;

  // Same action: identical rollouts tie.
  CHECK(sim_reward(rollout, 3, 3, cfg) == 0);
  // v=2 covers demand with less stock than v=6: lower turnover, equal loss.
  CHECK(sim_reward(rollout, 2, 6, cfg) == 1);
  // And the over-stocker is dominated from the other side.
  CHECK(sim_reward(rollout, 6, 2, cfg) == -1);

  RolloutContext short_ctx = rollout;
  short_ctx.forward_trace = std::span<const Units>(window.data(), 3);
  CHECK_THROWS_AS(sim_reward(short_ctx, 2, 3, cfg), DomainError);
}

TEST_CASE("leave-one-out baselines: two-sample arithmetic") {
  // k = 2, R = (2, 0): baselines are the peer values.
  const double r0 = 2.0, r1 = 0.0;
  const double b0 = r1 / 1.0, b1 = r0 / 1.0;
  CHECK(r0 - b0 == doctest::Approx(2.0));
  CHECK(r1 - b1 == doctest::Approx(-2.0));
}

TEST_CASE("step satisfies the leave-one-out identity per prompt") {
  const auto config = tiny_config();
  PolicyNet net(config, 71);
  const PolicyNet ref = net;
  std::mt19937_64 rng(72);
  auto prompts = rule_only_prompts(config, 6, 5, rng);

  RewardConfig cfg = rule_only_cfg();
  cfg.kl_beta = 0.1;
  RlooTrainer trainer(net, ref, cfg, 1e-3, 73);
  const auto stats = trainer.step(prompts);

  // The policy starts as a parameter copy of the reference: exact KL is zero.
  CHECK(stats.mean_kl == doctest::Approx(0.0).epsilon(1e-12));

  REQUIRE(stats.samples.size() == prompts.size());
  for (const auto& prompt_samples : stats.samples) {
    REQUIRE(prompt_samples.size() == 4);
    double advantage_sum = 0.0;
    double reward_sum = 0.0;
    for (const auto& s : prompt_samples) reward_sum += s.reward;
    for (const auto& s : prompt_samples) {
      const double recomputed = (reward_sum - s.reward) / 3.0;
      CHECK(std::fabs(recomputed - s.baseline) < 1e-12);
      advantage_sum += s.reward - s.baseline;
    }
    CHECK(std::fabs(advantage_sum) < 1e-9);
  }
  CHECK(std::fabs(stats.mean_advantage) < 1e-9);
}

TEST_CASE("constant reward shifts leave the surrogate gradient unchanged") {
  const auto config = tiny_config();
  PolicyNet net(config, 81);
  std::mt19937_64 rng(82);
  const auto prompts = rule_only_prompts(config, 3, 5, rng);
  const std::size_t k = 4;
  const auto z = static_cast<std::size_t>(config.latent_dim);
  const std::size_t total = prompts.size() * k;

  std::vector<double> noise(total * z);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& n : noise) n = normal(rng);
  std::vector<int> actions(total);
  std::uniform_int_distribution<int> action(0, config.n_actions() - 1);
  for (int& a : actions) a = action(rng);
  std::vector<double> returns(total);
  std::uniform_real_distribution<double> reward(-4.0, 1.0);
  for (double& r : returns) r = reward(rng);

  auto weights_from = [&](double shift) {
    std::vector<double> weights(total);
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) sum += returns[i * k + j] + shift;
      for (std::size_t j = 0; j < k; ++j) {
        const double r = returns[i * k + j] + shift;
        const double baseline = (sum - r) / static_cast<double>(k - 1);
        weights[i * k + j] = (r - baseline) / static_cast<double>(total);
      }
    }
    return weights;
  };

  std::vector<double> g0(net.params().size(), 0.0), g1(net.params().size(), 0.0);
  surrogate_loss_and_grad(net, prompts, noise, actions, weights_from(0.0), 1.0, g0);
  surrogate_loss_and_grad(net, prompts, noise, actions, weights_from(7.5), 1.0, g1);
  for (std::size_t i = 0; i < g0.size(); ++i) {
    CHECK(std::fabs(g0[i] - g1[i]) < 1e-9);
  }
}

TEST_CASE("surrogate gradient matches finite differences on a frozen batch") {
  const auto config = tiny_config();
  PolicyNet net(config, 91);
  std::mt19937_64 rng(92);
  const auto prompts = rule_only_prompts(config, 2, 4, rng);
  const std::size_t k = 3;
  const auto z = static_cast<std::size_t>(config.latent_dim);
  const std::size_t total = prompts.size() * k;

  std::vector<double> noise(total * z);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& n : noise) n = normal(rng);
  std::vector<int> actions(total);
  std::uniform_int_distribution<int> action(0, config.n_actions() - 1);
  for (int& a : actions) a = action(rng);
  std::vector<double> weights(total);
  std::uniform_real_distribution<double> weight(-1.0, 1.0);
  for (double& w : weights) w = weight(rng);

  std::vector<double> analytic(net.params().size(), 0.0);
  surrogate_loss_and_grad(net, prompts, noise, actions, weights, 0.8, analytic);

  PolicyNet probe = net;
  const auto loss_at = [&](const std::vector<double>& params) {
    auto values = probe.params().values();
    std::copy(params.begin(), params.end(), values.begin());
    return surrogate_loss_and_grad(probe, prompts, noise, actions, weights, 0.8, {});
  };
  const std::vector<double> at(net.params().values().begin(),
                               net.params().values().end());
  const auto fd = oracle::fd_gradient(loss_at, at, 1e-5);
  double max_rel = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const double denom = std::max({std::fabs(fd[i]), std::fabs(analytic[i]), 1e-3});
    max_rel = std::max(max_rel, std::fabs(fd[i] - analytic[i]) / denom);
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("identical rewards produce a zero step") {
  const auto config = tiny_config();
  PolicyNet net(config, 101);
  const PolicyNet ref = net;
  std::mt19937_64 rng(102);
  auto prompts = rule_only_prompts(config, 4, 5, rng);

  // Near-zero temperature collapses sampling onto the greedy action, so all
  // k rewards coincide and every advantage is zero.
  RewardConfig cfg = rule_only_cfg();
  cfg.temperature = 1e-4;
  cfg.kl_beta = 0.0;
  const auto before = net.param_hash();
  RlooTrainer trainer(net, ref, cfg, 1e-2, 103);
  const auto stats = trainer.step(prompts);
  CHECK(stats.grad_norm == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(net.param_hash() == before);
}

TEST_CASE("omega extremes drive the instrumentation to zero") {
  const auto config = tiny_config();
  std::mt19937_64 rng(112);

  // Rule-only: no simulator call ever happens.
  {
    PolicyNet net(config, 111);
    const PolicyNet ref = net;
    auto prompts = rule_only_prompts(config, 5, 5, rng);
    RewardConfig cfg = rule_only_cfg();
    cfg.omega = 1.0;
    RlooTrainer trainer(net, ref, cfg, 1e-3, 113);
    for (int i = 0; i < 3; ++i) trainer.step(prompts);
    CHECK(trainer.total_sim_calls() == 0);
    CHECK(trainer.total_rule_calls() > 0);
  }

  // Simulation-only: the rule reward is never evaluated.
  {
    PolicyNet net(config, 121);
    const PolicyNet ref = net;
    const std::vector<Units> window(20, 5);
    auto sku = testutil::make_sku("S", 100, 200, 1, 2);
    std::vector<Prompt> prompts = rule_only_prompts(config, 5, 5, rng);
    for (auto& prompt : prompts) {
      prompt.rollout.forward_trace = window;
      prompt.rollout.sku = &sku;
      prompt.rollout.initial_inventory = 10;
      prompt.rollout.demand_avg = 5.0;
    }
    RewardConfig cfg = rule_only_cfg();
    cfg.omega = 0.0;
    cfg.sim_horizon_days = 7;
    RlooTrainer trainer(net, ref, cfg, 1e-3, 123);
    for (int i = 0; i < 2; ++i) trainer.step(prompts);
    CHECK(trainer.total_rule_calls() == 0);
    CHECK(trainer.total_sim_calls() > 0);
  }
}

TEST_CASE("short rollouts fall back to the rule reward with a warning count") {
  const auto config = tiny_config();
  PolicyNet net(config, 131);
  const PolicyNet ref = net;
  std::mt19937_64 rng(132);
  const std::vector<Units> short_window(3, 5);
  auto sku = testutil::make_sku("S", 100, 200, 1, 2);
  auto prompts = rule_only_prompts(config, 3, 5, rng);
  for (auto& prompt : prompts) {
    prompt.rollout.forward_trace = short_window;
    prompt.rollout.sku = &sku;
    prompt.rollout.demand_avg = 5.0;
  }
  RewardConfig cfg = rule_only_cfg();
  cfg.omega = 0.4;
  cfg.sim_horizon_days = 7;
  RlooTrainer trainer(net, ref, cfg, 1e-3, 133);
  const auto stats = trainer.step(prompts);
  CHECK(stats.skipped_rollouts == 3);
  CHECK(stats.sim_calls == 0);
}

TEST_CASE("alignment mini-run concentrates the greedy policy on the label") {
  const auto config = tiny_config();
  PolicyNet net(config, 141);
  const PolicyNet ref = net;
  std::mt19937_64 rng(142);
  const auto prompts = rule_only_prompts(config, 12, 6, rng);

  RewardConfig cfg = rule_only_cfg();
  cfg.kl_beta = 0.05;
  RlooTrainer trainer(net, ref, cfg, 2e-2, 143);
  for (int step = 0; step < 500; ++step) trainer.step(prompts);

  int agree = 0;
  for (const auto& prompt : prompts) {
    if (net.greedy_action(prompt.features) == 6) ++agree;
  }
  CHECK(agree >= 12);  // full agreement on the toy run
}

TEST_CASE("an expert label source pulls greedy actions toward the expert decisions") {
  // Promo-style fixture: supervised pretraining aligns the policy to routine
  // labels (v=3); expert labels then demand aggressive cover (v=7).
  const auto config = tiny_config();
  PolicyNet net(config, 171);
  std::mt19937_64 rng(172);

  std::vector<policy::TrainSample> dataset;
  std::vector<Prompt> prompts;
  for (int i = 0; i < 10; ++i) {
    auto features = random_features(config, rng);
    dataset.push_back({features, 3, 1.0});
    Prompt prompt;
    prompt.features = std::move(features);
    prompt.a_star = 7;  // expert decision
    prompts.push_back(std::move(prompt));
  }
  policy::TrainSchedule schedule;
  schedule.s1_epochs = 0;
  schedule.s2_epochs = 60;
  schedule.s3_epochs = 0;
  schedule.batch_size = 5;
  schedule.seed = 99;
  policy::pretrain(net, dataset, schedule);
  int routine_agree = 0;
  for (const auto& prompt : prompts) {
    if (net.greedy_action(prompt.features) == 3) ++routine_agree;
  }
  REQUIRE(routine_agree >= 9);

  for (auto& prompt : prompts) prompt.a_base = net.greedy_action(prompt.features);
  const PolicyNet ref = net;
  RewardConfig cfg = rule_only_cfg();
  cfg.kl_beta = 0.05;
  FinetuneOptions options;
  options.n_steps = 400;
  options.batch_size = 10;
  options.checkpoint_every = 0;
  options.learning_rate = 2e-2;
  options.seed = 174;
  finetune(net, ref, prompts, cfg, options);

  int shifted = 0;
  for (const auto& prompt : prompts) {
    if (net.greedy_action(prompt.features) >= 6) ++shifted;
  }
  CHECK(shifted >= 9);
}

TEST_CASE("finetune with zero steps returns the policy hash-identical") {
  const auto config = tiny_config();
  PolicyNet net(config, 151);
  const PolicyNet ref = net;
  std::mt19937_64 rng(152);
  const auto prompts = rule_only_prompts(config, 4, 5, rng);
  const auto before = net.param_hash();

  FinetuneOptions options;
  options.n_steps = 0;
  const auto result = finetune(net, ref, prompts, rule_only_cfg(), options);
  CHECK(net.param_hash() == before);
  CHECK(result.log.empty());
}

TEST_CASE("finetune logs rows and can restore the best checkpoint") {
  const auto config = tiny_config();
  PolicyNet net(config, 161);
  const PolicyNet ref = net;
  std::mt19937_64 rng(162);
  const auto prompts = rule_only_prompts(config, 8, 5, rng);

  testutil::TempDir dir("ft");
  FinetuneOptions options;
  options.n_steps = 12;
  options.batch_size = 4;
  options.checkpoint_every = 4;
  options.learning_rate = 5e-3;
  options.log_path = dir.file("ft.jsonl");
  // A validation cost that prefers the original parameters forces a restore.
  const auto original = net.param_hash();
  options.validation_cost = [&](const PolicyNet& candidate) {
    return candidate.param_hash() == original ? 0.0 : 1.0;
  };
  const auto result = finetune(net, ref, prompts, rule_only_cfg(), options);
  CHECK(result.log.size() == 12);
  CHECK(result.restored_checkpoint);
  CHECK(net.param_hash() == original);
  CHECK(result.best_validation_cost == doctest::Approx(0.0));

  std::ifstream log(dir.file("ft.jsonl"));
  int lines = 0;
  std::string line;
  while (std::getline(log, line)) ++lines;
  CHECK(lines == 12);
}
