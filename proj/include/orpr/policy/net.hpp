#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "orpr/policy/features.hpp"

namespace orpr::policy {

struct NetConfig {
  int sales_width = kSalesWidth;
  int attrs_width = kAttrsWidth;
  int objective_width = kObjectiveWidth;
  int encoder_hidden = 24;
  int embed_dim = 24;
  int forecast_hidden = 16;
  int latent_dim = 16;
  int action_min = 3;   // grid L
  int action_max = 30;  // grid U

  int n_actions() const { return action_max - action_min + 1; }
  int stream_width(int stream) const;
  void validate() const;
  bool operator==(const NetConfig&) const = default;
};

// Per-feature standardization constants, computed on the training split and
// serialized with the model. Default-constructed stats are the identity.
struct FeatureStats {
  std::vector<double> mean[3];
  std::vector<double> stdev[3];

  bool empty() const { return mean[0].empty(); }
};

FeatureStats compute_feature_stats(std::span<const FeatureVector> features);

struct ParamGroup {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

class ParamStore {
 public:
  std::size_t add_group(const std::string& name, std::size_t size);
  std::span<double> group(const std::string& name);
  std::span<const double> group(const std::string& name) const;
  const std::vector<ParamGroup>& groups() const { return groups_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
  std::vector<ParamGroup> groups_;
};

// Full forward activation record, kept for the analytic backward pass.
struct ForwardTrace {
  FeatureVector standardized;
  std::vector<double> enc_hidden[3];  // post-tanh
  std::vector<double> enc_out[3];
  std::vector<double> gates;  // softmax over streams
  std::vector<double> embedding;
  std::vector<double> forecast_hidden;  // post-tanh
  double forecast_pre = 0.0;            // pre-softplus
  double forecast = 0.0;
  std::vector<double> mu;
  std::vector<double> log_sigma;
  std::vector<double> sigma;
  std::vector<double> noise;  // epsilon used for z (zeros in deterministic mode)
  std::vector<double> latent;
  std::vector<double> logits;
};

struct ActionSample {
  int action = 0;        // inventory days v
  double log_prob = 0.0; // log softmax(logits / temperature) at the action
  std::vector<double> logits;  // raw logits
  std::vector<double> latent;
};

// Compact stochastic policy: three feedforward stream encoders fused by a
// learned softmax gate, a nonnegative demand forecast head, and a
// variational decision head mapping a Gaussian latent to logits over the
// inventory-days grid.
class PolicyNet {
 public:
  PolicyNet(const NetConfig& config, std::uint64_t init_seed);

  const NetConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  FeatureStats& stats() { return stats_; }
  const FeatureStats& stats() const { return stats_; }

  // noise: latent_dim standard-normal draws, or empty for the deterministic
  // mode z = mu.
  ForwardTrace forward(const FeatureVector& features,
                       std::span<const double> noise = {}) const;

  std::vector<double> encode(const FeatureVector& features) const;
  double forecast(const FeatureVector& features) const;
  int greedy_action(const FeatureVector& features) const;

  // Staged entry points operating on a precomputed embedding.
  double forecast_from_embedding(std::span<const double> embedding) const;
  // Returns (raw logits, latent); empty noise selects the deterministic mode
  // z = mu.
  std::pair<std::vector<double>, std::vector<double>> decision_logits(
      std::span<const double> embedding, std::span<const double> noise = {}) const;

  // Accumulates analytic gradients into `grads` (size params().size()).
  // d_logits, d_mu_extra and d_log_sigma_extra feed the decision branch;
  // propagate_encoder controls whether gradients flow past the embedding.
  void backward_decision(const ForwardTrace& trace, std::span<const double> d_logits,
                         std::span<const double> d_mu_extra,
                         std::span<const double> d_log_sigma_extra,
                         bool propagate_encoder, std::span<double> grads) const;
  void backward_forecast(const ForwardTrace& trace, double d_forecast,
                         std::span<double> grads) const;

  std::uint64_t param_hash() const;

  void save(const std::string& path) const;
  static PolicyNet load(const std::string& path);

 private:
  void init_weights(std::uint64_t seed);
  FeatureVector standardize(const FeatureVector& features) const;

  NetConfig config_;
  ParamStore params_;
  FeatureStats stats_;
};

// Categorical sample from softmax(logits / temperature); log_prob is the
// tempered log-probability at the sampled index. temperature -> 0 approaches
// argmax. Throws NumericError on non-finite logits.
ActionSample sample_action(std::span<const double> logits, double temperature,
                           std::mt19937_64& rng, int action_min);

// Tempered log softmax(logits / temperature); independent of sampling.
std::vector<double> log_softmax(std::span<const double> logits, double temperature);

// Closed-form KL(N(mu, sigma^2) || N(0, I)).
double gaussian_kl(std::span<const double> mu, std::span<const double> log_sigma);

// Exact KL between the tempered action distributions of two logit vectors.
double categorical_kl(std::span<const double> logits_p, std::span<const double> logits_q,
                      double temperature);

}  // namespace orpr::policy
