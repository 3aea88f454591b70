#pragma once

#include <optional>
#include <string>
#include <vector>

#include "orpr/datagen/datagen.hpp"
#include "orpr/orsel/selection.hpp"
#include "orpr/policy/train.hpp"
#include "orpr/rloo/rloo.hpp"
#include "orpr/sim/simulator.hpp"

namespace orpr::eval {

struct SplitConfig {
  int train_end = 0;  // train = [0, train_end)
  int val_end = 0;    // validation = [train_end, val_end), test = [val_end, T)
};

struct LabelingConfig {
  enum class Mode { kCalibrate, kFixedAlpha };
  Mode mode = Mode::kCalibrate;
  double fixed_alpha = 0.9;
  double target_turnover = 5.0;  // days, calibration target
  double turnover_tol = 0.5;     // days
  int epoch_days = 30;
  bool per_sku = false;
};

struct FinetuneConfig {
  int n_steps = 300;
  int batch_size = 16;
  int checkpoint_every = 25;
  double learning_rate = 2e-2;
  rloo::UpdateScope scope = rloo::UpdateScope::kDecisionHead;
  // Optional replacement reference labels (e.g. expert decisions); empty
  // means the OR labels from the labels stage.
  std::string reference_labels_path;
};

struct ExperimentConfig {
  enum class PanelSource { kGenerate, kLoad };
  PanelSource panel_source = PanelSource::kGenerate;
  datagen::ScenarioConfig scenario;
  std::string panel_path;  // directory holding skus.csv/demand.csv when loading

  CandidateGrid grid{3, 14};
  SimConfig sim;  // horizon_days is taken from the panel
  LabelingConfig labeling;
  policy::NetConfig net;  // action_min/max synced with the grid
  policy::TrainSchedule train;
  rloo::RewardConfig reward;
  FinetuneConfig finetune;
  std::vector<std::string> methods = {"OR",    "PTO_normal",  "PTO_gamma",
                                      "BM_50", "BM_85",       "DL_pretrain",
                                      "ORPR_finetuned"};
  SplitConfig split;
  std::string reference_method = "OR";
  int estimation_window = 28;  // trailing days for PTO/BM parameter fits
  sim::SaleBasis sale_basis = sim::SaleBasis::kDemandValue;
  std::uint64_t seed = 7;

  void validate(int horizon_days) const;
};

ExperimentConfig default_config();
ExperimentConfig load_config(const std::string& path);
std::uint64_t config_hash(const ExperimentConfig& config);

struct ReportRow {
  std::string method;
  std::optional<double> turnover_days;
  double instock_rate = 0.0;
  Cents holding_cost = 0;
  Cents stockout_cost = 0;
  Cents total_cost = 0;
  double relative_total_pct = 0.0;
};

struct DecisionRow {
  std::string method;
  std::string sku_id;
  int day = 0;            // absolute day index of the review
  double cover_days = 0;  // inventory-days decision (implied for baselines)
  bool cover_known = true;
};

struct SeriesRow {
  std::string method;
  int day = 0;  // absolute day index
  Units inventory_units = 0;
  Units lost_units = 0;
};

// Demand-weighted aggregation across SKUs: costs summed, turnover = total
// average inventory / total average demand, in-stock day-weighted.
MetricSet aggregate_metrics(std::span<const SimOutcome> outcomes,
                            std::span<const std::vector<Units>> traces);

struct ExperimentResult {
  std::vector<ReportRow> rows;
  std::vector<DecisionRow> decisions;
  std::vector<SeriesRow> series;
  double alpha_star = 0.0;
};

// Stage functions: each reads its declared inputs from out_dir and writes its
// artifacts there, failing with a stage-dependency message when a required
// artifact is missing.
void stage_gen(const ExperimentConfig& config, const std::string& out_dir);
void stage_params(const ExperimentConfig& config, const std::string& out_dir);
void stage_labels(const ExperimentConfig& config, const std::string& out_dir);
void stage_pretrain(const ExperimentConfig& config, const std::string& out_dir);
void stage_finetune(const ExperimentConfig& config, const std::string& out_dir);
void stage_eval(const ExperimentConfig& config, const std::string& out_dir);
void stage_report(const ExperimentConfig& config, const std::string& out_dir);

// The full pipeline in order; returns the assembled result.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir);

}  // namespace orpr::eval
