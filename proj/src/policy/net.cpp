#include "orpr/policy/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "orpr/core/errors.hpp"
#include "orpr/kernels/kernels.hpp"

namespace orpr::policy {

namespace kn = orpr::kernels;
using nlohmann::json;

int NetConfig::stream_width(int stream) const {
  switch (stream) {
    case 0: return sales_width;
    case 1: return attrs_width;
    default: return objective_width;
  }
}

void NetConfig::validate() const {
  if (sales_width < 1 || attrs_width < 1 || objective_width < 1) {
    throw ConfigError("stream widths must be >= 1");
  }
  if (encoder_hidden < 1 || embed_dim < 1 || forecast_hidden < 1 || latent_dim < 1) {
    throw ConfigError("layer widths must be >= 1");
  }
  if (action_min < 1 || action_max < action_min) {
    throw ConfigError("action grid requires 1 <= L <= U");
  }
}

FeatureStats compute_feature_stats(std::span<const FeatureVector> features) {
  if (features.empty()) throw DomainError("cannot compute stats on empty set");
  FeatureStats stats;
  const std::vector<double>* streams[3];
  for (int s = 0; s < 3; ++s) {
    const std::size_t width = s == 0   ? features[0].sales.size()
                              : s == 1 ? features[0].attrs.size()
                                       : features[0].objective.size();
    stats.mean[s].assign(width, 0.0);
    stats.stdev[s].assign(width, 0.0);
  }
  for (const auto& f : features) {
    streams[0] = &f.sales;
    streams[1] = &f.attrs;
    streams[2] = &f.objective;
    for (int s = 0; s < 3; ++s) {
      for (std::size_t i = 0; i < streams[s]->size(); ++i) {
        stats.mean[s][i] += (*streams[s])[i];
      }
    }
  }
  const double n = static_cast<double>(features.size());
  for (int s = 0; s < 3; ++s) {
    for (double& m : stats.mean[s]) m /= n;
  }
  for (const auto& f : features) {
    streams[0] = &f.sales;
    streams[1] = &f.attrs;
    streams[2] = &f.objective;
    for (int s = 0; s < 3; ++s) {
      for (std::size_t i = 0; i < streams[s]->size(); ++i) {
        const double d = (*streams[s])[i] - stats.mean[s][i];
        stats.stdev[s][i] += d * d;
      }
    }
  }
  for (int s = 0; s < 3; ++s) {
    for (double& v : stats.stdev[s]) {
      v = std::sqrt(v / n);
      if (v < 1e-8) v = 1.0;  // constant feature: leave it centered
    }
  }
  return stats;
}

std::size_t ParamStore::add_group(const std::string& name, std::size_t size) {
  const std::size_t offset = values_.size();
  values_.resize(offset + size, 0.0);
  groups_.push_back({name, offset, size});
  return offset;
}

std::span<double> ParamStore::group(const std::string& name) {
  for (const auto& g : groups_) {
    if (g.name == name) return std::span<double>(values_).subspan(g.offset, g.size);
  }
  throw DomainError("unknown parameter group " + name);
}

std::span<const double> ParamStore::group(const std::string& name) const {
  for (const auto& g : groups_) {
    if (g.name == name) {
      return std::span<const double>(values_).subspan(g.offset, g.size);
    }
  }
  throw DomainError("unknown parameter group " + name);
}

namespace {

void softmax_inplace(std::vector<double>& v) {
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

PolicyNet::PolicyNet(const NetConfig& config, std::uint64_t init_seed)
    : config_(config) {
  config_.validate();
  const auto h = static_cast<std::size_t>(config_.encoder_hidden);
  const auto e = static_cast<std::size_t>(config_.embed_dim);
  const auto fh = static_cast<std::size_t>(config_.forecast_hidden);
  const auto z = static_cast<std::size_t>(config_.latent_dim);
  const auto a = static_cast<std::size_t>(config_.n_actions());
  for (int s = 0; s < 3; ++s) {
    const auto w = static_cast<std::size_t>(config_.stream_width(s));
    const std::string prefix = "enc" + std::to_string(s);
    params_.add_group(prefix + ".W1", h * w);
    params_.add_group(prefix + ".b1", h);
    params_.add_group(prefix + ".W2", e * h);
    params_.add_group(prefix + ".b2", e);
  }
  params_.add_group("gate", 3);
  params_.add_group("fc.W1", fh * e);
  params_.add_group("fc.b1", fh);
  params_.add_group("fc.W2", fh);  // 1 x fh
  params_.add_group("fc.b2", 1);
  params_.add_group("dec.Wmu", z * e);
  params_.add_group("dec.bmu", z);
  params_.add_group("dec.Wls", z * e);
  params_.add_group("dec.bls", z);
  params_.add_group("dec.Wout", a * z);
  params_.add_group("dec.bout", a);
  init_weights(init_seed);
}

void PolicyNet::init_weights(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto glorot = [&](const std::string& name, std::size_t fan_in, std::size_t fan_out) {
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-r, r);
    for (double& w : params_.group(name)) w = dist(rng);
  };
  const auto h = static_cast<std::size_t>(config_.encoder_hidden);
  const auto e = static_cast<std::size_t>(config_.embed_dim);
  const auto fh = static_cast<std::size_t>(config_.forecast_hidden);
  const auto z = static_cast<std::size_t>(config_.latent_dim);
  const auto a = static_cast<std::size_t>(config_.n_actions());
  for (int s = 0; s < 3; ++s) {
    const auto w = static_cast<std::size_t>(config_.stream_width(s));
    const std::string prefix = "enc" + std::to_string(s);
    glorot(prefix + ".W1", w, h);
    glorot(prefix + ".W2", h, e);
  }
  glorot("fc.W1", e, fh);
  glorot("fc.W2", fh, 1);
  glorot("dec.Wmu", e, z);
  glorot("dec.Wls", e, z);
  glorot("dec.Wout", z, a);
  // Start the posterior tight (sigma ~ exp(-1)) for stable early training.
  for (double& b : params_.group("dec.bls")) b = -1.0;
}

FeatureVector PolicyNet::standardize(const FeatureVector& features) const {
  FeatureVector out = features;
  if (stats_.empty()) return out;
  std::vector<double>* streams[3] = {&out.sales, &out.attrs, &out.objective};
  for (int s = 0; s < 3; ++s) {
    if (streams[s]->size() != stats_.mean[s].size()) {
      throw DomainError("feature width mismatch against stored stats");
    }
    for (std::size_t i = 0; i < streams[s]->size(); ++i) {
      (*streams[s])[i] = ((*streams[s])[i] - stats_.mean[s][i]) / stats_.stdev[s][i];
    }
  }
  return out;
}

ForwardTrace PolicyNet::forward(const FeatureVector& features,
                                std::span<const double> noise) const {
  for (int s = 0; s < 3; ++s) {
    const auto expected = static_cast<std::size_t>(config_.stream_width(s));
    const std::size_t got = s == 0   ? features.sales.size()
                            : s == 1 ? features.attrs.size()
                                     : features.objective.size();
    if (got != expected) {
      throw DomainError("stream " + std::to_string(s) + " width " +
                        std::to_string(got) + " != configured " +
                        std::to_string(expected));
    }
  }
  if (!noise.empty() && static_cast<int>(noise.size()) != config_.latent_dim) {
    throw DomainError("noise length must equal latent width");
  }

  ForwardTrace trace;
  trace.standardized = standardize(features);
  const std::vector<double>* streams[3] = {&trace.standardized.sales,
                                           &trace.standardized.attrs,
                                           &trace.standardized.objective};

  const auto h = static_cast<std::size_t>(config_.encoder_hidden);
  const auto e = static_cast<std::size_t>(config_.embed_dim);

  for (int s = 0; s < 3; ++s) {
    const std::string prefix = "enc" + std::to_string(s);
    const auto w1 = params_.group(prefix + ".W1");
    const auto b1 = params_.group(prefix + ".b1");
    const auto w2 = params_.group(prefix + ".W2");
    const auto b2 = params_.group(prefix + ".b2");
    const auto width = streams[s]->size();

    auto& hidden = trace.enc_hidden[s];
    hidden.resize(h);
    kn::matvec(w1.data(), h, width, streams[s]->data(), hidden.data());
    for (std::size_t i = 0; i < h; ++i) hidden[i] = std::tanh(hidden[i] + b1[i]);

    auto& out = trace.enc_out[s];
    out.resize(e);
    kn::matvec(w2.data(), e, h, hidden.data(), out.data());
    for (std::size_t i = 0; i < e; ++i) out[i] += b2[i];
  }

  const auto gate = params_.group("gate");
  trace.gates.assign(gate.begin(), gate.end());
  softmax_inplace(trace.gates);
  trace.embedding.assign(e, 0.0);
  for (int s = 0; s < 3; ++s) {
    kn::axpy(trace.gates[static_cast<std::size_t>(s)], trace.enc_out[s].data(),
             trace.embedding.data(), e);
  }

  const auto fh = static_cast<std::size_t>(config_.forecast_hidden);
  const auto f_w1 = params_.group("fc.W1");
  const auto f_b1 = params_.group("fc.b1");
  const auto f_w2 = params_.group("fc.W2");
  const auto f_b2 = params_.group("fc.b2");
  trace.forecast_hidden.resize(fh);
  kn::matvec(f_w1.data(), fh, e, trace.embedding.data(), trace.forecast_hidden.data());
  for (std::size_t i = 0; i < fh; ++i) {
    trace.forecast_hidden[i] = std::tanh(trace.forecast_hidden[i] + f_b1[i]);
  }
  trace.forecast_pre =
      kn::dot(f_w2.data(), trace.forecast_hidden.data(), fh) + f_b2[0];
  trace.forecast = softplus(trace.forecast_pre);

  const auto z = static_cast<std::size_t>(config_.latent_dim);
  const auto a = static_cast<std::size_t>(config_.n_actions());
  const auto w_mu = params_.group("dec.Wmu");
  const auto b_mu = params_.group("dec.bmu");
  const auto w_ls = params_.group("dec.Wls");
  const auto b_ls = params_.group("dec.bls");
  const auto w_out = params_.group("dec.Wout");
  const auto b_out = params_.group("dec.bout");

  trace.mu.resize(z);
  kn::matvec(w_mu.data(), z, e, trace.embedding.data(), trace.mu.data());
  trace.log_sigma.resize(z);
  kn::matvec(w_ls.data(), z, e, trace.embedding.data(), trace.log_sigma.data());
  trace.sigma.resize(z);
  trace.noise.assign(z, 0.0);
  trace.latent.resize(z);
  for (std::size_t i = 0; i < z; ++i) {
    trace.mu[i] += b_mu[i];
    trace.log_sigma[i] += b_ls[i];
    trace.sigma[i] = std::exp(trace.log_sigma[i]);
    if (!noise.empty()) trace.noise[i] = noise[i];
    trace.latent[i] = trace.mu[i] + trace.sigma[i] * trace.noise[i];
  }

  trace.logits.resize(a);
  kn::matvec(w_out.data(), a, z, trace.latent.data(), trace.logits.data());
  for (std::size_t i = 0; i < a; ++i) trace.logits[i] += b_out[i];
  return trace;
}

std::vector<double> PolicyNet::encode(const FeatureVector& features) const {
  return forward(features).embedding;
}

double PolicyNet::forecast(const FeatureVector& features) const {
  return forward(features).forecast;
}

double PolicyNet::forecast_from_embedding(std::span<const double> embedding) const {
  if (static_cast<int>(embedding.size()) != config_.embed_dim) {
    throw DomainError("embedding width mismatch");
  }
  const auto fh = static_cast<std::size_t>(config_.forecast_hidden);
  const auto f_w1 = params_.group("fc.W1");
  const auto f_b1 = params_.group("fc.b1");
  const auto f_w2 = params_.group("fc.W2");
  const auto f_b2 = params_.group("fc.b2");
  std::vector<double> hidden(fh);
  kn::matvec(f_w1.data(), fh, embedding.size(), embedding.data(), hidden.data());
  for (std::size_t i = 0; i < fh; ++i) hidden[i] = std::tanh(hidden[i] + f_b1[i]);
  return softplus(kn::dot(f_w2.data(), hidden.data(), fh) + f_b2[0]);
}

std::pair<std::vector<double>, std::vector<double>> PolicyNet::decision_logits(
    std::span<const double> embedding, std::span<const double> noise) const {
  if (static_cast<int>(embedding.size()) != config_.embed_dim) {
    throw DomainError("embedding width mismatch");
  }
  if (!noise.empty() && static_cast<int>(noise.size()) != config_.latent_dim) {
    throw DomainError("noise length must equal latent width");
  }
  const auto z = static_cast<std::size_t>(config_.latent_dim);
  const auto a = static_cast<std::size_t>(config_.n_actions());
  const auto w_mu = params_.group("dec.Wmu");
  const auto b_mu = params_.group("dec.bmu");
  const auto w_ls = params_.group("dec.Wls");
  const auto b_ls = params_.group("dec.bls");
  const auto w_out = params_.group("dec.Wout");
  const auto b_out = params_.group("dec.bout");

  std::vector<double> latent(z), log_sigma(z);
  kn::matvec(w_mu.data(), z, embedding.size(), embedding.data(), latent.data());
  kn::matvec(w_ls.data(), z, embedding.size(), embedding.data(), log_sigma.data());
  for (std::size_t i = 0; i < z; ++i) {
    latent[i] += b_mu[i];  // mu
    if (!noise.empty()) {
      latent[i] += std::exp(log_sigma[i] + b_ls[i]) * noise[i];
    }
  }
  std::vector<double> logits(a);
  kn::matvec(w_out.data(), a, z, latent.data(), logits.data());
  for (std::size_t i = 0; i < a; ++i) logits[i] += b_out[i];
  return {std::move(logits), std::move(latent)};
}

int PolicyNet::greedy_action(const FeatureVector& features) const {
  const auto trace = forward(features);
  std::size_t best = 0;
  for (std::size_t i = 1; i < trace.logits.size(); ++i) {
    if (trace.logits[i] > trace.logits[best]) best = i;
  }
  return config_.action_min + static_cast<int>(best);
}

void PolicyNet::backward_decision(const ForwardTrace& trace,
                                  std::span<const double> d_logits,
                                  std::span<const double> d_mu_extra,
                                  std::span<const double> d_log_sigma_extra,
                                  bool propagate_encoder,
                                  std::span<double> grads) const {
  const auto e = static_cast<std::size_t>(config_.embed_dim);
  const auto z = static_cast<std::size_t>(config_.latent_dim);
  const auto a = static_cast<std::size_t>(config_.n_actions());

  auto grad_of = [&](const std::string& name) {
    for (const auto& g : params_.groups()) {
      if (g.name == name) return grads.subspan(g.offset, g.size);
    }
    throw DomainError("unknown group " + name);
  };

  // logits = Wout z + bout
  kn::outer_acc(1.0, d_logits.data(), a, trace.latent.data(), z,
                grad_of("dec.Wout").data());
  kn::axpy(1.0, d_logits.data(), grad_of("dec.bout").data(), a);
  std::vector<double> d_latent(z);
  kn::matvec_t(params_.group("dec.Wout").data(), a, z, d_logits.data(),
               d_latent.data());

  // z = mu + sigma * eps
  std::vector<double> d_mu(z, 0.0), d_ls(z, 0.0);
  for (std::size_t i = 0; i < z; ++i) {
    d_mu[i] = d_latent[i];
    d_ls[i] = d_latent[i] * trace.noise[i] * trace.sigma[i];
    if (!d_mu_extra.empty()) d_mu[i] += d_mu_extra[i];
    if (!d_log_sigma_extra.empty()) d_ls[i] += d_log_sigma_extra[i];
  }

  kn::outer_acc(1.0, d_mu.data(), z, trace.embedding.data(), e,
                grad_of("dec.Wmu").data());
  kn::axpy(1.0, d_mu.data(), grad_of("dec.bmu").data(), z);
  kn::outer_acc(1.0, d_ls.data(), z, trace.embedding.data(), e,
                grad_of("dec.Wls").data());
  kn::axpy(1.0, d_ls.data(), grad_of("dec.bls").data(), z);

  if (!propagate_encoder) return;

  std::vector<double> d_embedding(e, 0.0);
  std::vector<double> tmp(e);
  kn::matvec_t(params_.group("dec.Wmu").data(), z, e, d_mu.data(), tmp.data());
  kn::axpy(1.0, tmp.data(), d_embedding.data(), e);
  kn::matvec_t(params_.group("dec.Wls").data(), z, e, d_ls.data(), tmp.data());
  kn::axpy(1.0, tmp.data(), d_embedding.data(), e);

  // Shared encoder/gate backward from an embedding gradient.
  const auto h = static_cast<std::size_t>(config_.encoder_hidden);
  std::vector<double> d_gate_raw(3, 0.0);
  for (int s = 0; s < 3; ++s) {
    d_gate_raw[static_cast<std::size_t>(s)] =
        kn::dot(d_embedding.data(), trace.enc_out[s].data(), e);
  }
  double weighted = 0.0;
  for (int s = 0; s < 3; ++s) {
    weighted += trace.gates[static_cast<std::size_t>(s)] *
                d_gate_raw[static_cast<std::size_t>(s)];
  }
  auto d_gate = grad_of("gate");
  for (int s = 0; s < 3; ++s) {
    const auto us = static_cast<std::size_t>(s);
    d_gate[us] += trace.gates[us] * (d_gate_raw[us] - weighted);
  }

  const std::vector<double>* streams[3] = {&trace.standardized.sales,
                                           &trace.standardized.attrs,
                                           &trace.standardized.objective};
  for (int s = 0; s < 3; ++s) {
    const std::string prefix = "enc" + std::to_string(s);
    const auto width = streams[s]->size();
    std::vector<double> d_out(e);
    for (std::size_t i = 0; i < e; ++i) {
      d_out[i] = trace.gates[static_cast<std::size_t>(s)] * d_embedding[i];
    }
    kn::outer_acc(1.0, d_out.data(), e, trace.enc_hidden[s].data(), h,
                  grad_of(prefix + ".W2").data());
    kn::axpy(1.0, d_out.data(), grad_of(prefix + ".b2").data(), e);
    std::vector<double> d_hidden(h);
    kn::matvec_t(params_.group(prefix + ".W2").data(), e, h, d_out.data(),
                 d_hidden.data());
    for (std::size_t i = 0; i < h; ++i) {
      const double t = trace.enc_hidden[s][i];
      d_hidden[i] *= 1.0 - t * t;
    }
    kn::outer_acc(1.0, d_hidden.data(), h, streams[s]->data(), width,
                  grad_of(prefix + ".W1").data());
    kn::axpy(1.0, d_hidden.data(), grad_of(prefix + ".b1").data(), h);
  }
}

void PolicyNet::backward_forecast(const ForwardTrace& trace, double d_forecast,
                                  std::span<double> grads) const {
  const auto e = static_cast<std::size_t>(config_.embed_dim);
  const auto fh = static_cast<std::size_t>(config_.forecast_hidden);
  const auto h = static_cast<std::size_t>(config_.encoder_hidden);

  auto grad_of = [&](const std::string& name) {
    for (const auto& g : params_.groups()) {
      if (g.name == name) return grads.subspan(g.offset, g.size);
    }
    throw DomainError("unknown group " + name);
  };

  const double d_pre = d_forecast * logistic(trace.forecast_pre);
  kn::axpy(d_pre, trace.forecast_hidden.data(), grad_of("fc.W2").data(), fh);
  grad_of("fc.b2")[0] += d_pre;

  std::vector<double> d_hidden(fh);
  const auto f_w2 = params_.group("fc.W2");
  for (std::size_t i = 0; i < fh; ++i) {
    const double t = trace.forecast_hidden[i];
    d_hidden[i] = d_pre * f_w2[i] * (1.0 - t * t);
  }
  kn::outer_acc(1.0, d_hidden.data(), fh, trace.embedding.data(), e,
                grad_of("fc.W1").data());
  kn::axpy(1.0, d_hidden.data(), grad_of("fc.b1").data(), fh);

  std::vector<double> d_embedding(e);
  kn::matvec_t(params_.group("fc.W1").data(), fh, e, d_hidden.data(),
               d_embedding.data());

  std::vector<double> d_gate_raw(3, 0.0);
  for (int s = 0; s < 3; ++s) {
    d_gate_raw[static_cast<std::size_t>(s)] =
        kn::dot(d_embedding.data(), trace.enc_out[s].data(), e);
  }
  double weighted = 0.0;
  for (int s = 0; s < 3; ++s) {
    weighted += trace.gates[static_cast<std::size_t>(s)] *
                d_gate_raw[static_cast<std::size_t>(s)];
  }
  auto d_gate = grad_of("gate");
  for (int s = 0; s < 3; ++s) {
    const auto us = static_cast<std::size_t>(s);
    d_gate[us] += trace.gates[us] * (d_gate_raw[us] - weighted);
  }

  const std::vector<double>* streams[3] = {&trace.standardized.sales,
                                           &trace.standardized.attrs,
                                           &trace.standardized.objective};
  for (int s = 0; s < 3; ++s) {
    const std::string prefix = "enc" + std::to_string(s);
    const auto width = streams[s]->size();
    std::vector<double> d_out(e);
    for (std::size_t i = 0; i < e; ++i) {
      d_out[i] = trace.gates[static_cast<std::size_t>(s)] * d_embedding[i];
    }
    kn::outer_acc(1.0, d_out.data(), e, trace.enc_hidden[s].data(), h,
                  grad_of(prefix + ".W2").data());
    kn::axpy(1.0, d_out.data(), grad_of(prefix + ".b2").data(), e);
    std::vector<double> d_hid(h);
    kn::matvec_t(params_.group(prefix + ".W2").data(), e, h, d_out.data(),
                 d_hid.data());
    for (std::size_t i = 0; i < h; ++i) {
      const double t = trace.enc_hidden[s][i];
      d_hid[i] *= 1.0 - t * t;
    }
    kn::outer_acc(1.0, d_hid.data(), h, streams[s]->data(), width,
                  grad_of(prefix + ".W1").data());
    kn::axpy(1.0, d_hid.data(), grad_of(prefix + ".b1").data(), h);
  }
}

std::uint64_t PolicyNet::param_hash() const {
  std::uint64_t hash = 1469598103934665603ULL;  // FNV-1a
  const auto values = params_.values();
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  for (std::size_t i = 0; i < values.size() * sizeof(double); ++i) {
    hash ^= bytes[i];
    hash *= 1099511628211ULL;
  }
  return hash;
}

namespace {

json stats_to_json(const FeatureStats& stats) {
  json j;
  for (int s = 0; s < 3; ++s) {
    j["mean"].push_back(stats.mean[s]);
    j["stdev"].push_back(stats.stdev[s]);
  }
  return j;
}

FeatureStats stats_from_json(const json& j) {
  FeatureStats stats;
  if (!j.contains("mean")) return stats;
  for (int s = 0; s < 3; ++s) {
    stats.mean[s] = j["mean"][static_cast<std::size_t>(s)].get<std::vector<double>>();
    stats.stdev[s] = j["stdev"][static_cast<std::size_t>(s)].get<std::vector<double>>();
  }
  return stats;
}

}  // namespace

void PolicyNet::save(const std::string& path) const {
  json j;
  j["format"] = "orpr-policy";
  j["version"] = 1;
  j["n_params"] = params_.size();
  j["config"] = {{"sales_width", config_.sales_width},
                 {"attrs_width", config_.attrs_width},
                 {"objective_width", config_.objective_width},
                 {"encoder_hidden", config_.encoder_hidden},
                 {"embed_dim", config_.embed_dim},
                 {"forecast_hidden", config_.forecast_hidden},
                 {"latent_dim", config_.latent_dim},
                 {"action_min", config_.action_min},
                 {"action_max", config_.action_max}};
  j["stats"] = stats_to_json(stats_);
  json params = json::object();
  for (const auto& g : params_.groups()) {
    const auto values = params_.values().subspan(g.offset, g.size);
    params[g.name] = std::vector<double>(values.begin(), values.end());
  }
  j["params"] = std::move(params);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("model write failed for " + path);
}

PolicyNet PolicyNet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("model file " + path + ": " + e.what());
  }
  if (!j.contains("format") || j["format"] != "orpr-policy") {
    throw ParseError("model file " + path + " has unknown format");
  }
  if (!j.contains("version") || j["version"].get<int>() != 1) {
    throw ParseError("model file " + path + " has unsupported version");
  }
  const auto& c = j["config"];
  NetConfig config;
  config.sales_width = c["sales_width"].get<int>();
  config.attrs_width = c["attrs_width"].get<int>();
  config.objective_width = c["objective_width"].get<int>();
  config.encoder_hidden = c["encoder_hidden"].get<int>();
  config.embed_dim = c["embed_dim"].get<int>();
  config.forecast_hidden = c["forecast_hidden"].get<int>();
  config.latent_dim = c["latent_dim"].get<int>();
  config.action_min = c["action_min"].get<int>();
  config.action_max = c["action_max"].get<int>();

  PolicyNet net(config, 0);
  net.stats_ = stats_from_json(j["stats"]);
  for (const auto& g : net.params_.groups()) {
    if (!j["params"].contains(g.name)) {
      throw ParseError("model file " + path + " missing group " + g.name);
    }
    const auto values = j["params"][g.name].get<std::vector<double>>();
    if (values.size() != g.size) {
      throw ParseError("model file " + path + " group " + g.name +
                       " has wrong size");
    }
    auto dest = net.params_.values().subspan(g.offset, g.size);
    std::copy(values.begin(), values.end(), dest.begin());
  }
  return net;
}

std::vector<double> log_softmax(std::span<const double> logits, double temperature) {
  if (temperature <= 0.0) throw DomainError("temperature must be > 0");
  std::vector<double> scaled(logits.size());
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) throw NumericError("non-finite logit");
    scaled[i] = logits[i] / temperature;
    m = std::max(m, scaled[i]);
  }
  double sum = 0.0;
  for (double& x : scaled) sum += std::exp(x - m);
  const double log_norm = m + std::log(sum);
  for (double& x : scaled) x -= log_norm;
  return scaled;
}

ActionSample sample_action(std::span<const double> logits, double temperature,
                           std::mt19937_64& rng, int action_min) {
  const auto log_probs = log_softmax(logits, temperature);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(rng);
  double cumulative = 0.0;
  std::size_t index = log_probs.size() - 1;
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    cumulative += std::exp(log_probs[i]);
    if (u <= cumulative) {
      index = i;
      break;
    }
  }
  ActionSample sample;
  sample.action = action_min + static_cast<int>(index);
  sample.log_prob = log_probs[index];
  sample.logits.assign(logits.begin(), logits.end());
  return sample;
}

double gaussian_kl(std::span<const double> mu, std::span<const double> log_sigma) {
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double sigma2 = std::exp(2.0 * log_sigma[i]);
    kl += 0.5 * (mu[i] * mu[i] + sigma2 - 1.0 - 2.0 * log_sigma[i]);
  }
  return kl;
}

double categorical_kl(std::span<const double> logits_p, std::span<const double> logits_q,
                      double temperature) {
  const auto lp = log_softmax(logits_p, temperature);
  const auto lq = log_softmax(logits_q, temperature);
  double kl = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    kl += std::exp(lp[i]) * (lp[i] - lq[i]);
  }
  return std::max(kl, 0.0);
}

}  // namespace orpr::policy
