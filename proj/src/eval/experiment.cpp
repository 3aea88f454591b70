#include "orpr/eval/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "orpr/baselines/baselines.hpp"
#include "orpr/core/csv.hpp"
#include "orpr/core/errors.hpp"
#include "orpr/eval/report.hpp"
#include "orpr/policy/features.hpp"

namespace orpr::eval {

using nlohmann::json;

void ExperimentConfig::validate(int horizon_days) const {
  grid.validate();
  if (methods.empty()) throw ConfigError("method list must be nonempty");
  if (split.train_end < 1 || split.train_end >= split.val_end ||
      split.val_end >= horizon_days) {
    throw ConfigError("splits must satisfy 0 < train_end < val_end < horizon (" +
                      std::to_string(split.train_end) + ", " +
                      std::to_string(split.val_end) + ", " +
                      std::to_string(horizon_days) + ")");
  }
  if (labeling.epoch_days < 1) throw ConfigError("epoch_days must be >= 1");
  if (estimation_window < 1) throw ConfigError("estimation_window must be >= 1");
  reward.validate();
  train.validate();
}

ExperimentConfig default_config() {
  ExperimentConfig config;
  config.scenario.n_skus = 24;
  config.scenario.horizon_days = 180;
  config.scenario.base_demand_min = 4.0;
  config.scenario.base_demand_max = 16.0;
  config.scenario.volatility_cov = {0.35, 0.7, 1.2};
  config.scenario.value_unit_prices = {2000, 800, 300};
  // The simulator charges unit_cost per held unit per day, so the cost acts
  // as a daily carrying charge; a few percent of price makes service and
  // capital trade off on comparable scales.
  config.scenario.cost_fraction = 0.03;
  config.scenario.seasonal_amplitude = 0.12;
  config.scenario.promo_calendar = {{84, 7, 2.5}};
  config.scenario.vlt_min = 1;
  config.scenario.vlt_max = 4;
  config.scenario.nrt_days = 7;

  config.grid = CandidateGrid{3, 14};
  config.sim.initial_cover_days = 8.0;
  config.sim.demand_avg_window = 7;

  config.labeling.mode = LabelingConfig::Mode::kCalibrate;
  config.labeling.target_turnover = 6.0;
  config.labeling.turnover_tol = 0.5;
  config.labeling.epoch_days = 30;

  config.net.action_min = config.grid.min_days;
  config.net.action_max = config.grid.max_days;

  config.train.s1_epochs = 30;
  config.train.s2_epochs = 40;
  config.train.s3_epochs = 10;
  config.train.batch_size = 32;

  config.reward.omega = 0.7;
  config.reward.sim_horizon_days = 14;

  config.split.train_end = 120;
  config.split.val_end = 150;
  return config;
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("config " + path + ": " + e.what());
  }

  ExperimentConfig config = default_config();
  if (j.contains("panel")) {
    const auto& p = j["panel"];
    std::string source = "generate";
    maybe(p, "source", source);
    if (source == "generate") {
      config.panel_source = ExperimentConfig::PanelSource::kGenerate;
    } else if (source == "load") {
      config.panel_source = ExperimentConfig::PanelSource::kLoad;
    } else {
      throw ConfigError("panel.source must be 'generate' or 'load'");
    }
    maybe(p, "path", config.panel_path);
    auto& s = config.scenario;
    maybe(p, "n_skus", s.n_skus);
    maybe(p, "horizon_days", s.horizon_days);
    maybe(p, "base_demand_min", s.base_demand_min);
    maybe(p, "base_demand_max", s.base_demand_max);
    maybe(p, "volatility_cov", s.volatility_cov);
    if (p.contains("value_unit_prices")) {
      s.value_unit_prices.clear();
      for (const auto& price : p["value_unit_prices"]) {
        s.value_unit_prices.push_back(parse_money(price.get<std::string>()));
      }
    }
    maybe(p, "cost_fraction", s.cost_fraction);
    maybe(p, "seasonal_amplitude", s.seasonal_amplitude);
    maybe(p, "seasonal_period_days", s.seasonal_period_days);
    maybe(p, "vlt_min", s.vlt_min);
    maybe(p, "vlt_max", s.vlt_max);
    maybe(p, "nrt_days", s.nrt_days);
    if (p.contains("promos")) {
      s.promo_calendar.clear();
      for (const auto& promo : p["promos"]) {
        datagen::PromoWindow window;
        window.start_day = promo.at("start_day").get<int>();
        window.duration_days = promo.at("duration_days").get<int>();
        window.demand_multiplier = promo.at("multiplier").get<double>();
        s.promo_calendar.push_back(window);
      }
    }
  }
  if (j.contains("grid")) {
    maybe(j["grid"], "min_days", config.grid.min_days);
    maybe(j["grid"], "max_days", config.grid.max_days);
  }
  if (j.contains("sim")) {
    const auto& s = j["sim"];
    maybe(s, "initial_inventory", config.sim.initial_inventory);
    if (s.contains("initial_cover_days")) {
      config.sim.initial_cover_days = s["initial_cover_days"].get<double>();
    }
    maybe(s, "demand_avg_window", config.sim.demand_avg_window);
    maybe(s, "review_offset", config.sim.review_offset);
  }
  if (j.contains("labeling")) {
    const auto& l = j["labeling"];
    std::string mode = "calibrate";
    maybe(l, "mode", mode);
    if (mode == "calibrate") {
      config.labeling.mode = LabelingConfig::Mode::kCalibrate;
    } else if (mode == "fixed") {
      config.labeling.mode = LabelingConfig::Mode::kFixedAlpha;
    } else {
      throw ConfigError("labeling.mode must be 'calibrate' or 'fixed'");
    }
    maybe(l, "fixed_alpha", config.labeling.fixed_alpha);
    maybe(l, "target_turnover", config.labeling.target_turnover);
    maybe(l, "turnover_tol", config.labeling.turnover_tol);
    maybe(l, "epoch_days", config.labeling.epoch_days);
    maybe(l, "per_sku", config.labeling.per_sku);
  }
  if (j.contains("net")) {
    const auto& n = j["net"];
    maybe(n, "encoder_hidden", config.net.encoder_hidden);
    maybe(n, "embed_dim", config.net.embed_dim);
    maybe(n, "forecast_hidden", config.net.forecast_hidden);
    maybe(n, "latent_dim", config.net.latent_dim);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    maybe(t, "s1_epochs", config.train.s1_epochs);
    maybe(t, "s2_epochs", config.train.s2_epochs);
    maybe(t, "s3_epochs", config.train.s3_epochs);
    maybe(t, "s1_lr", config.train.s1_lr);
    maybe(t, "s2_lr", config.train.s2_lr);
    maybe(t, "s3_lr", config.train.s3_lr);
    maybe(t, "vae_kl_weight", config.train.vae_kl_weight);
    maybe(t, "batch_size", config.train.batch_size);
  }
  if (j.contains("reward")) {
    const auto& r = j["reward"];
    maybe(r, "omega", config.reward.omega);
    maybe(r, "focal_gamma", config.reward.focal_gamma);
    maybe(r, "sign_alpha", config.reward.sign_alpha);
    maybe(r, "kl_beta", config.reward.kl_beta);
    maybe(r, "sim_horizon_days", config.reward.sim_horizon_days);
    maybe(r, "k_samples", config.reward.k_samples);
    maybe(r, "temperature", config.reward.temperature);
  }
  if (j.contains("finetune")) {
    const auto& f = j["finetune"];
    maybe(f, "n_steps", config.finetune.n_steps);
    maybe(f, "batch_size", config.finetune.batch_size);
    maybe(f, "checkpoint_every", config.finetune.checkpoint_every);
    maybe(f, "learning_rate", config.finetune.learning_rate);
    std::string scope = "decision_head";
    maybe(f, "scope", scope);
    if (scope == "decision_head") {
      config.finetune.scope = rloo::UpdateScope::kDecisionHead;
    } else if (scope == "all") {
      config.finetune.scope = rloo::UpdateScope::kAll;
    } else {
      throw ConfigError("finetune.scope must be 'decision_head' or 'all'");
    }
    maybe(f, "reference_labels", config.finetune.reference_labels_path);
  }
  maybe(j, "methods", config.methods);
  if (j.contains("split")) {
    maybe(j["split"], "train_end", config.split.train_end);
    maybe(j["split"], "val_end", config.split.val_end);
  }
  maybe(j, "reference_method", config.reference_method);
  maybe(j, "estimation_window", config.estimation_window);
  if (j.contains("sale_basis")) {
    const auto basis = j["sale_basis"].get<std::string>();
    if (basis == "demand") {
      config.sale_basis = sim::SaleBasis::kDemandValue;
    } else if (basis == "fulfilled_max") {
      config.sale_basis = sim::SaleBasis::kFulfilledAtMax;
    } else {
      throw ConfigError("sale_basis must be 'demand' or 'fulfilled_max'");
    }
  }
  maybe(j, "seed", config.seed);

  config.net.action_min = config.grid.min_days;
  config.net.action_max = config.grid.max_days;
  return config;
}

namespace {

json config_to_json(const ExperimentConfig& c) {
  json promos = json::array();
  for (const auto& p : c.scenario.promo_calendar) {
    promos.push_back({{"start_day", p.start_day},
                      {"duration_days", p.duration_days},
                      {"multiplier", p.demand_multiplier}});
  }
  json prices = json::array();
  for (Cents p : c.scenario.value_unit_prices) prices.push_back(format_money(p));
  return json{
      {"panel",
       {{"source",
         c.panel_source == ExperimentConfig::PanelSource::kGenerate ? "generate"
                                                                    : "load"},
        {"path", c.panel_path},
        {"n_skus", c.scenario.n_skus},
        {"horizon_days", c.scenario.horizon_days},
        {"base_demand_min", c.scenario.base_demand_min},
        {"base_demand_max", c.scenario.base_demand_max},
        {"volatility_cov", c.scenario.volatility_cov},
        {"value_unit_prices", prices},
        {"cost_fraction", c.scenario.cost_fraction},
        {"seasonal_amplitude", c.scenario.seasonal_amplitude},
        {"seasonal_period_days", c.scenario.seasonal_period_days},
        {"vlt_min", c.scenario.vlt_min},
        {"vlt_max", c.scenario.vlt_max},
        {"nrt_days", c.scenario.nrt_days},
        {"promos", promos}}},
      {"grid", {{"min_days", c.grid.min_days}, {"max_days", c.grid.max_days}}},
      {"sim",
       {{"initial_inventory", c.sim.initial_inventory},
        {"initial_cover_days",
         c.sim.initial_cover_days ? json(*c.sim.initial_cover_days) : json(nullptr)},
        {"demand_avg_window", c.sim.demand_avg_window},
        {"review_offset", c.sim.review_offset}}},
      {"labeling",
       {{"mode",
         c.labeling.mode == LabelingConfig::Mode::kCalibrate ? "calibrate" : "fixed"},
        {"fixed_alpha", c.labeling.fixed_alpha},
        {"target_turnover", c.labeling.target_turnover},
        {"turnover_tol", c.labeling.turnover_tol},
        {"epoch_days", c.labeling.epoch_days},
        {"per_sku", c.labeling.per_sku}}},
      {"net",
       {{"encoder_hidden", c.net.encoder_hidden},
        {"embed_dim", c.net.embed_dim},
        {"forecast_hidden", c.net.forecast_hidden},
        {"latent_dim", c.net.latent_dim}}},
      {"train",
       {{"s1_epochs", c.train.s1_epochs},
        {"s2_epochs", c.train.s2_epochs},
        {"s3_epochs", c.train.s3_epochs},
        {"s1_lr", c.train.s1_lr},
        {"s2_lr", c.train.s2_lr},
        {"s3_lr", c.train.s3_lr},
        {"vae_kl_weight", c.train.vae_kl_weight},
        {"batch_size", c.train.batch_size}}},
      {"reward",
       {{"omega", c.reward.omega},
        {"focal_gamma", c.reward.focal_gamma},
        {"sign_alpha", c.reward.sign_alpha},
        {"kl_beta", c.reward.kl_beta},
        {"sim_horizon_days", c.reward.sim_horizon_days},
        {"k_samples", c.reward.k_samples},
        {"temperature", c.reward.temperature}}},
      {"finetune",
       {{"n_steps", c.finetune.n_steps},
        {"batch_size", c.finetune.batch_size},
        {"checkpoint_every", c.finetune.checkpoint_every},
        {"learning_rate", c.finetune.learning_rate},
        {"scope",
         c.finetune.scope == rloo::UpdateScope::kDecisionHead ? "decision_head"
                                                              : "all"},
        {"reference_labels", c.finetune.reference_labels_path}}},
      {"methods", c.methods},
      {"split", {{"train_end", c.split.train_end}, {"val_end", c.split.val_end}}},
      {"reference_method", c.reference_method},
      {"estimation_window", c.estimation_window},
      {"sale_basis",
       c.sale_basis == sim::SaleBasis::kDemandValue ? "demand" : "fulfilled_max"},
      {"seed", c.seed}};
}

}  // namespace

std::uint64_t config_hash(const ExperimentConfig& config) {
  const std::string canon = config_to_json(config).dump();
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : canon) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

MetricSet aggregate_metrics(std::span<const SimOutcome> outcomes,
                            std::span<const std::vector<Units>> traces) {
  if (outcomes.empty() || outcomes.size() != traces.size()) {
    throw DomainError("aggregate_metrics needs matching nonempty outcome/trace sets");
  }
  MetricSet metrics;
  double inventory_sum = 0.0, demand_sum = 0.0;
  long instock_days = 0, total_days = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& outcome = outcomes[i];
    const auto& trace = traces[i];
    inventory_sum += outcome.avg_inventory_units;
    Units demand_total = 0;
    for (Units d : trace) demand_total += d;
    demand_sum += static_cast<double>(demand_total) / static_cast<double>(trace.size());
    instock_days += outcome.instock_days;
    total_days += static_cast<long>(trace.size());
    metrics.holding_cost += outcome.stock_value;
    metrics.stockout_cost += outcome.lost_sales_value;
  }
  if (demand_sum > 0.0) metrics.turnover_days = inventory_sum / demand_sum;
  metrics.instock_rate = static_cast<double>(instock_days) / static_cast<double>(total_days);
  metrics.total_cost = metrics.holding_cost + metrics.stockout_cost;
  return metrics;
}

namespace {

namespace fs = std::filesystem;

void require_artifact(const std::string& path, const std::string& stage,
                      const std::string& producer) {
  if (!fs::exists(path)) {
    throw IoError("stage '" + stage + "' requires " + path + "; run '" + producer +
                  "' first");
  }
}

DemandPanel panel_for(const ExperimentConfig& config, const std::string& out_dir,
                      const std::string& stage) {
  require_artifact(out_dir + "/skus.csv", stage, "gen");
  require_artifact(out_dir + "/demand.csv", stage, "gen");
  auto panel = datagen::load_panel(out_dir);
  config.validate(panel.horizon_days);
  return panel;
}

DemandPanel slice_panel(const DemandPanel& panel, int begin, int end) {
  DemandPanel sliced;
  sliced.skus = panel.skus;
  sliced.horizon_days = end - begin;
  sliced.demand.reserve(panel.demand.size());
  for (const auto& trace : panel.demand) {
    sliced.demand.emplace_back(trace.begin() + begin, trace.begin() + end);
  }
  return sliced;
}

SimConfig sim_for(const ExperimentConfig& config, int horizon) {
  SimConfig cfg = config.sim;
  cfg.horizon_days = horizon;
  return cfg;
}

std::vector<int> review_days(int begin, int end, int offset, int nrt) {
  std::vector<int> days;
  for (int t = begin; t < end; ++t) {
    if (t >= begin + offset && (t - begin - offset) % nrt == 0) days.push_back(t);
  }
  return days;
}

// Reference decision for (group key, absolute-or-slice day) from label rows.
class LabelIndex {
 public:
  LabelIndex(const LabelSet& labels, bool per_sku) : per_sku_(per_sku) {
    for (const auto& row : labels.rows) {
      rows_[row.category_id].push_back({row.epoch_start_day, row.v_days});
    }
    for (auto& [key, entries] : rows_) {
      std::sort(entries.begin(), entries.end());
    }
  }

  int lookup(const SkuRecord& sku, int day) const {
    const std::string& key = per_sku_ ? sku.sku_id : sku.category_id;
    const auto it = rows_.find(key);
    if (it == rows_.end()) {
      throw DomainError("no label rows for group " + key);
    }
    int value = it->second.front().second;
    for (const auto& [start, v] : it->second) {
      if (start <= day) value = v;
    }
    return value;
  }

 private:
  bool per_sku_;
  std::map<std::string, std::vector<std::pair<int, int>>> rows_;
};

double labeling_alpha(const std::string& out_dir, const std::string& stage) {
  require_artifact(out_dir + "/labels_meta.json", stage, "labels");
  std::ifstream in(out_dir + "/labels_meta.json");
  json j;
  in >> j;
  return j.at("alpha_star").get<double>();
}

// Training samples over the train-split review calendar.
std::vector<policy::TrainSample> build_dataset(const ExperimentConfig& config,
                                               const DemandPanel& panel,
                                               const LabelIndex& labels) {
  std::vector<policy::TrainSample> dataset;
  const policy::FeatureTargets targets{config.labeling.target_turnover};
  for (std::size_t s = 0; s < panel.skus.size(); ++s) {
    const auto& sku = panel.skus[s];
    for (int t : review_days(0, config.split.train_end, config.sim.review_offset,
                             sku.nrt_days)) {
      policy::TrainSample sample;
      sample.features = policy::build_features(panel, s, t, config.grid, targets);
      sample.label_v = labels.lookup(sku, t);
      Units demand_total = 0;
      int days = 0;
      for (int u = t; u < std::min(t + sku.nrt_days, config.split.train_end); ++u) {
        demand_total += panel.demand[s][static_cast<std::size_t>(u)];
        ++days;
      }
      sample.demand_target =
          days > 0 ? static_cast<double>(demand_total) / days : 0.0;
      dataset.push_back(std::move(sample));
    }
  }
  return dataset;
}

// Per-SKU greedy decisions of a policy over a day range's review calendar.
std::vector<int> greedy_decisions(const policy::PolicyNet& net,
                                  const ExperimentConfig& config,
                                  const DemandPanel& panel, std::size_t sku_index,
                                  int begin, int end) {
  std::vector<int> decisions;
  const policy::FeatureTargets targets{config.labeling.target_turnover};
  for (int t : review_days(begin, end, config.sim.review_offset,
                           panel.skus[sku_index].nrt_days)) {
    decisions.push_back(net.greedy_action(
        policy::build_features(panel, sku_index, t, config.grid, targets)));
  }
  return decisions;
}

double validation_cost_of(const policy::PolicyNet& net, const ExperimentConfig& config,
                          const DemandPanel& panel) {
  const int begin = config.split.train_end;
  const int end = config.split.val_end;
  const SimConfig cfg = sim_for(config, end - begin);
  Cents total = 0;
  for (std::size_t s = 0; s < panel.skus.size(); ++s) {
    const auto decisions = greedy_decisions(net, config, panel, s, begin, end);
    const std::span<const Units> trace(panel.demand[s].data() +
                                           static_cast<std::size_t>(begin),
                                       static_cast<std::size_t>(end - begin));
    const auto outcome =
        sim::simulate_policy(trace, panel.skus[s], decisions, cfg);
    total += outcome.stock_value + outcome.lost_sales_value;
  }
  return static_cast<double>(total);
}

struct MethodRun {
  std::vector<SimOutcome> outcomes;
  std::vector<DecisionRow> decisions;
};

// Order-up-to baselines share one execution path; `level_of` maps the
// estimation window to a base-stock level (or none when unidentifiable).
MethodRun run_base_stock_method(
    const std::string& method, const ExperimentConfig& config,
    const DemandPanel& panel, int begin, int end,
    const std::function<std::optional<double>(std::span<const Units>,
                                              const SkuRecord&)>& level_of) {
  MethodRun run;
  const SimConfig cfg = sim_for(config, end - begin);
  for (std::size_t s = 0; s < panel.skus.size(); ++s) {
    const auto& sku = panel.skus[s];
    const std::span<const Units> trace(panel.demand[s].data() +
                                           static_cast<std::size_t>(begin),
                                       static_cast<std::size_t>(end - begin));
    auto& decisions = run.decisions;
    const auto outcome = sim::run_simulation(
        trace, sku, cfg, [&](const sim::ReviewState& state) -> Units {
          const int wbegin = std::max(0, state.day - config.estimation_window);
          const std::span<const Units> window =
              trace.subspan(static_cast<std::size_t>(wbegin),
                            static_cast<std::size_t>(state.day - wbegin));
          Units order = 0;
          if (!window.empty()) {
            const auto level = level_of(window, sku);
            if (level) {
              order = baselines::base_stock_to_order(*level,
                                                     state.on_hand + state.pipeline);
            }
          }
          DecisionRow row;
          row.method = method;
          row.sku_id = sku.sku_id;
          row.day = begin + state.day;
          if (state.demand_avg > 1e-9) {
            row.cover_days = static_cast<double>(order) / state.demand_avg;
          } else {
            row.cover_known = order == 0;
            row.cover_days = 0.0;
          }
          decisions.push_back(std::move(row));
          return order;
        });
    run.outcomes.push_back(outcome);
  }
  return run;
}

MethodRun run_decision_method(const std::string& method,
                              const ExperimentConfig& config, const DemandPanel& panel,
                              int begin, int end,
                              const std::function<int(std::size_t, int)>& decision_at) {
  MethodRun run;
  const SimConfig cfg = sim_for(config, end - begin);
  for (std::size_t s = 0; s < panel.skus.size(); ++s) {
    const auto& sku = panel.skus[s];
    const auto days = review_days(begin, end, config.sim.review_offset, sku.nrt_days);
    std::vector<int> decisions;
    decisions.reserve(days.size());
    for (int t : days) {
      const int v = decision_at(s, t);
      decisions.push_back(v);
      DecisionRow row;
      row.method = method;
      row.sku_id = sku.sku_id;
      row.day = t;
      row.cover_days = v;
      run.decisions.push_back(std::move(row));
    }
    const std::span<const Units> trace(panel.demand[s].data() +
                                           static_cast<std::size_t>(begin),
                                       static_cast<std::size_t>(end - begin));
    run.outcomes.push_back(sim::simulate_policy(trace, sku, decisions, cfg));
  }
  return run;
}

MethodRun eval_method(const std::string& method, const ExperimentConfig& config,
                      const DemandPanel& panel, double alpha_star,
                      const policy::PolicyNet* pretrained,
                      const policy::PolicyNet* finetuned) {
  const int begin = config.split.val_end;
  const int end = panel.horizon_days;

  if (method == "OR") {
    // Hindsight labels on the test slice itself.
    const auto test_panel = slice_panel(panel, begin, end);
    const SimConfig cfg = sim_for(config, end - begin);
    const int epoch = std::min(config.labeling.epoch_days, test_panel.horizon_days);
    const auto labels =
        orsel::generate_labels(test_panel, config.grid, cfg, alpha_star, epoch, {},
                               config.labeling.per_sku, config.sale_basis);
    const LabelIndex index(labels, config.labeling.per_sku);
    return run_decision_method(method, config, panel, begin, end,
                               [&](std::size_t s, int t) {
                                 return index.lookup(panel.skus[s], t - begin);
                               });
  }
  if (method == "DL_pretrain" || method == "ORPR_finetuned") {
    const policy::PolicyNet* net = method == "DL_pretrain" ? pretrained : finetuned;
    if (net == nullptr) throw DomainError("method " + method + " needs its model");
    const policy::FeatureTargets targets{config.labeling.target_turnover};
    return run_decision_method(
        method, config, panel, begin, end, [&](std::size_t s, int t) {
          return net->greedy_action(
              policy::build_features(panel, s, t, config.grid, targets));
        });
  }
  if (method == "PTO_normal" || method == "PTO_gamma") {
    const bool use_gamma = method == "PTO_gamma";
    return run_base_stock_method(
        method, config, panel, begin, end,
        [&, use_gamma](std::span<const Units> window,
                       const SkuRecord& sku) -> std::optional<double> {
          const auto est = baselines::estimate_moments(window);
          if (est.mu <= 0.0) return std::nullopt;
          baselines::PtoInputs inputs;
          inputs.mu_d = est.mu;
          inputs.sigma_d = est.sigma;
          inputs.review_days = sku.nrt_days;
          inputs.lead_days = sku.vlt_days;
          inputs.stockout_cost = static_cast<double>(sku.unit_price);
          inputs.holding_cost = static_cast<double>(sku.unit_cost);
          if (use_gamma && est.gamma_valid) {
            inputs.gamma_shape = est.gamma_shape;
            inputs.gamma_scale = est.gamma_scale;
            return baselines::pto_gamma(inputs).base_stock_level;
          }
          // Degenerate gamma moments fall back to the normal formula.
          return baselines::pto_normal(inputs).base_stock_level;
        });
  }
  if (method.rfind("BM_", 0) == 0) {
    const double percentile = std::stod(method.substr(3));
    return run_base_stock_method(
        method, config, panel, begin, end,
        [&, percentile](std::span<const Units> window,
                        const SkuRecord& sku) -> std::optional<double> {
          return baselines::quantile_policy(window, percentile,
                                            sku.nrt_days + sku.vlt_days);
        });
  }
  throw ConfigError("unknown method '" + method + "'");
}

std::uint64_t derived_seed(const ExperimentConfig& config, std::uint64_t stream) {
  return datagen::split_seed(config.seed, stream ^ 0xA5A5A5A5ULL);
}

}  // namespace

void stage_gen(const ExperimentConfig& config, const std::string& out_dir) {
  fs::create_directories(out_dir);
  DemandPanel panel;
  if (config.panel_source == ExperimentConfig::PanelSource::kGenerate) {
    datagen::ScenarioConfig scenario = config.scenario;
    scenario.seed = config.seed;
    panel = datagen::generate_panel(scenario);
  } else {
    if (config.panel_path.empty()) throw ConfigError("panel.path required for load");
    panel = datagen::load_panel(config.panel_path);
  }
  config.validate(panel.horizon_days);
  datagen::save_panel(panel, out_dir);
}

void stage_params(const ExperimentConfig& config, const std::string& out_dir) {
  const auto panel = panel_for(config, out_dir, "params");
  const auto train_panel = slice_panel(panel, 0, config.split.train_end);
  const SimConfig cfg = sim_for(config, config.split.train_end);
  const auto table =
      sim::tabulate_parameters(train_panel, config.grid, cfg,
                               sim::category_grouping(train_panel), config.sale_basis);
  sim::save_param_table(table, out_dir + "/params.csv");
  json meta{{"sale_total_cents", table.sale_total},
            {"train_end", config.split.train_end}};
  std::ofstream out(out_dir + "/params_meta.json", std::ios::binary);
  out << meta.dump(2) << '\n';
}

void stage_labels(const ExperimentConfig& config, const std::string& out_dir) {
  const auto panel = panel_for(config, out_dir, "labels");
  const auto train_panel = slice_panel(panel, 0, config.split.train_end);
  const SimConfig cfg = sim_for(config, config.split.train_end);

  orsel::SolverOptions options;
  options.diagnostics_path = out_dir + "/solver_diag.jsonl";
  std::error_code ec;
  fs::remove(options.diagnostics_path, ec);

  double alpha_star = config.labeling.fixed_alpha;
  json meta;
  if (config.labeling.mode == LabelingConfig::Mode::kCalibrate) {
    const auto result = orsel::calibrate_alpha(
        train_panel, config.grid, cfg, config.labeling.target_turnover,
        config.labeling.turnover_tol, options, config.sale_basis);
    alpha_star = result.alpha_star;
    meta["achieved_turnover"] = result.achieved_turnover;
    meta["probes"] = result.probes;
    meta["bracketed"] = result.bracketed;
    meta["warning"] = result.warning;
  }
  meta["alpha_star"] = alpha_star;

  const int epoch = std::min(config.labeling.epoch_days, train_panel.horizon_days);
  const auto labels =
      orsel::generate_labels(train_panel, config.grid, cfg, alpha_star, epoch,
                             options, config.labeling.per_sku, config.sale_basis);
  orsel::save_labels(labels, out_dir + "/labels.csv");
  std::ofstream out(out_dir + "/labels_meta.json", std::ios::binary);
  out << meta.dump(2) << '\n';
}

void stage_pretrain(const ExperimentConfig& config, const std::string& out_dir) {
  const auto panel = panel_for(config, out_dir, "pretrain");
  require_artifact(out_dir + "/labels.csv", "pretrain", "labels");
  const auto labels = orsel::load_labels(out_dir + "/labels.csv");
  const LabelIndex index(labels, config.labeling.per_sku);

  const auto dataset = build_dataset(config, panel, index);
  if (dataset.empty()) throw ConfigError("no training samples in the train split");

  policy::NetConfig net_config = config.net;
  net_config.action_min = config.grid.min_days;
  net_config.action_max = config.grid.max_days;
  policy::PolicyNet net(net_config, derived_seed(config, 1));
  std::vector<policy::FeatureVector> features;
  features.reserve(dataset.size());
  for (const auto& sample : dataset) features.push_back(sample.features);
  net.stats() = policy::compute_feature_stats(features);

  policy::TrainSchedule schedule = config.train;
  schedule.seed = derived_seed(config, 2);
  policy::pretrain(net, dataset, schedule, out_dir + "/pretrain_log.jsonl");
  net.save(out_dir + "/model_pretrained.json");
}

void stage_finetune(const ExperimentConfig& config, const std::string& out_dir) {
  const auto panel = panel_for(config, out_dir, "finetune");
  require_artifact(out_dir + "/model_pretrained.json", "finetune", "pretrain");
  std::string labels_path = config.finetune.reference_labels_path;
  if (labels_path.empty()) labels_path = out_dir + "/labels.csv";
  require_artifact(labels_path, "finetune", "labels");
  const auto labels = orsel::load_labels(labels_path);
  const LabelIndex index(labels, config.labeling.per_sku);

  auto net = policy::PolicyNet::load(out_dir + "/model_pretrained.json");
  const policy::PolicyNet reference = net;

  // Incumbent trajectory per SKU: the pretrained policy's greedy decisions
  // simulated over the train split; prompts read their initial state off it.
  const int train_end = config.split.train_end;
  const SimConfig train_cfg = sim_for(config, train_end);
  const policy::FeatureTargets targets{config.labeling.target_turnover};

  std::vector<rloo::Prompt> prompts;
  for (std::size_t s = 0; s < panel.skus.size(); ++s) {
    const auto& sku = panel.skus[s];
    const auto days =
        review_days(0, train_end, config.sim.review_offset, sku.nrt_days);
    std::vector<int> incumbent;
    std::vector<policy::FeatureVector> feats;
    incumbent.reserve(days.size());
    for (int t : days) {
      feats.push_back(policy::build_features(panel, s, t, config.grid, targets));
      incumbent.push_back(reference.greedy_action(feats.back()));
    }
    const std::span<const Units> train_trace(panel.demand[s].data(),
                                             static_cast<std::size_t>(train_end));
    const auto incumbent_outcome =
        sim::simulate_policy(train_trace, sku, incumbent, train_cfg);

    for (std::size_t d = 0; d < days.size(); ++d) {
      const int t = days[d];
      rloo::Prompt prompt;
      prompt.features = std::move(feats[d]);
      prompt.a_star = index.lookup(sku, t);
      prompt.a_base = incumbent[d];
      // Rollout window starts the morning after the decision and never
      // crosses into the validation split.
      const int start = t + 1;
      if (start < train_end) {
        prompt.rollout.forward_trace =
            std::span<const Units>(panel.demand[s].data() + start,
                                   static_cast<std::size_t>(train_end - start));
        prompt.rollout.sku = &panel.skus[s];
        prompt.rollout.initial_inventory =
            incumbent_outcome.inventory_trace[static_cast<std::size_t>(t)];
        prompt.rollout.demand_avg = sim::demand_average(train_trace, train_cfg, t);
      }
      prompts.push_back(std::move(prompt));
    }
  }

  rloo::FinetuneOptions options;
  options.n_steps = config.finetune.n_steps;
  options.batch_size = config.finetune.batch_size;
  options.checkpoint_every = config.finetune.checkpoint_every;
  options.learning_rate = config.finetune.learning_rate;
  options.scope = config.finetune.scope;
  options.seed = derived_seed(config, 3);
  options.log_path = out_dir + "/finetune_log.jsonl";
  options.validation_cost = [&](const policy::PolicyNet& candidate) {
    return validation_cost_of(candidate, config, panel);
  };
  rloo::finetune(net, reference, prompts, config.reward, options);
  net.save(out_dir + "/model_finetuned.json");
}

void stage_eval(const ExperimentConfig& config, const std::string& out_dir) {
  const auto panel = panel_for(config, out_dir, "eval");
  const double alpha_star = labeling_alpha(out_dir, "eval");

  std::optional<policy::PolicyNet> pretrained, finetuned;
  for (const auto& method : config.methods) {
    if (method == "DL_pretrain" && !pretrained) {
      require_artifact(out_dir + "/model_pretrained.json", "eval", "pretrain");
      pretrained = policy::PolicyNet::load(out_dir + "/model_pretrained.json");
    }
    if (method == "ORPR_finetuned" && !finetuned) {
      require_artifact(out_dir + "/model_finetuned.json", "eval", "finetune");
      finetuned = policy::PolicyNet::load(out_dir + "/model_finetuned.json");
    }
  }

  const int begin = config.split.val_end;
  std::vector<std::vector<Units>> test_traces;
  for (const auto& trace : panel.demand) {
    test_traces.emplace_back(trace.begin() + begin, trace.end());
  }

  std::vector<ReportRow> rows;
  std::vector<DecisionRow> decisions;
  std::vector<SeriesRow> series;
  for (const auto& method : config.methods) {
    const auto run = eval_method(method, config, panel, alpha_star,
                                 pretrained ? &*pretrained : nullptr,
                                 finetuned ? &*finetuned : nullptr);
    const auto metrics = aggregate_metrics(run.outcomes, test_traces);
    ReportRow row;
    row.method = method;
    row.turnover_days = metrics.turnover_days;
    row.instock_rate = metrics.instock_rate;
    row.holding_cost = metrics.holding_cost;
    row.stockout_cost = metrics.stockout_cost;
    row.total_cost = metrics.total_cost;
    rows.push_back(std::move(row));

    decisions.insert(decisions.end(), run.decisions.begin(), run.decisions.end());
    for (int u = 0; u < panel.horizon_days - begin; ++u) {
      SeriesRow point;
      point.method = method;
      point.day = begin + u;
      for (const auto& outcome : run.outcomes) {
        point.inventory_units += outcome.inventory_trace[static_cast<std::size_t>(u)];
        point.lost_units += outcome.lost_trace[static_cast<std::size_t>(u)];
      }
      series.push_back(point);
    }
  }

  // Relative totals against the reference method (first row when absent).
  Cents reference_total = rows.front().total_cost;
  for (const auto& row : rows) {
    if (row.method == config.reference_method) reference_total = row.total_cost;
  }
  for (auto& row : rows) {
    row.relative_total_pct =
        reference_total > 0
            ? 100.0 * static_cast<double>(row.total_cost - reference_total) /
                  static_cast<double>(reference_total)
            : 0.0;
  }

  emit_report(rows, decisions, series, out_dir);

  json rows_json = json::array();
  for (const auto& row : rows) {
    rows_json.push_back(
        {{"method", row.method},
         {"turnover_days",
          row.turnover_days ? json(*row.turnover_days) : json(nullptr)},
         {"instock_rate", row.instock_rate},
         {"holding_cost_cents", row.holding_cost},
         {"stockout_cost_cents", row.stockout_cost},
         {"total_cost_cents", row.total_cost},
         {"relative_total_pct", row.relative_total_pct}});
  }
  json eval_json{{"config_hash", config_hash(config)},
                 {"seed", config.seed},
                 {"alpha_star", alpha_star},
                 {"reference_method", config.reference_method},
                 {"rows", rows_json}};
  std::ofstream out(out_dir + "/eval_rows.json", std::ios::binary);
  out << eval_json.dump(2) << '\n';
}

void stage_report(const ExperimentConfig& config, const std::string& out_dir) {
  require_artifact(out_dir + "/eval_rows.json", "report", "eval");
  const auto rows = load_report_rows(out_dir + "/eval_rows.json");

  std::vector<std::vector<std::string>> report_rows;
  for (const auto& row : rows) {
    char turnover[64], instock[64], rel[64];
    if (row.turnover_days) {
      std::snprintf(turnover, sizeof(turnover), "%.6f", *row.turnover_days);
    } else {
      std::snprintf(turnover, sizeof(turnover), "na");
    }
    std::snprintf(instock, sizeof(instock), "%.6f", row.instock_rate);
    std::snprintf(rel, sizeof(rel), "%.2f", row.relative_total_pct);
    report_rows.push_back({row.method, turnover, instock,
                           format_money(row.holding_cost),
                           format_money(row.stockout_cost),
                           format_money(row.total_cost), rel});
  }
  csv::write_file(out_dir + "/report.csv",
                  {"method", "turnover_days", "instock_rate", "holding_cost",
                   "stockout_cost", "total_cost", "relative_total_pct"},
                  report_rows);

  char hash_buf[32];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  json meta{{"config_hash", hash_buf},
            {"seed", config.seed},
            {"reference_method", config.reference_method}};
  std::ofstream out(out_dir + "/report_meta.json", std::ios::binary);
  out << meta.dump(2) << '\n';
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir) {
  stage_gen(config, out_dir);
  stage_params(config, out_dir);
  stage_labels(config, out_dir);
  const bool needs_pretrain =
      std::find(config.methods.begin(), config.methods.end(), "DL_pretrain") !=
          config.methods.end() ||
      std::find(config.methods.begin(), config.methods.end(), "ORPR_finetuned") !=
          config.methods.end();
  if (needs_pretrain) {
    stage_pretrain(config, out_dir);
  }
  if (std::find(config.methods.begin(), config.methods.end(), "ORPR_finetuned") !=
      config.methods.end()) {
    stage_finetune(config, out_dir);
  }
  stage_eval(config, out_dir);
  stage_report(config, out_dir);

  ExperimentResult result;
  result.rows = load_report_rows(out_dir + "/eval_rows.json");
  result.alpha_star = labeling_alpha(out_dir, "report");
  return result;
}

}  // namespace orpr::eval
