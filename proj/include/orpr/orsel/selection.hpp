#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orpr/core/types.hpp"
#include "orpr/sim/simulator.hpp"

namespace orpr::orsel {

struct SolverOptions {
  // solve_exact enumerates when (U-L+1)^I stays below this, else runs the
  // loss-discretized DP.
  double exhaustive_combo_cap = 1e6;
  // DP loss resolution = max(1 cent, budget / dp_resolution_steps).
  int dp_resolution_steps = 10000;
  // solve_auto routes to the Lagrangian above this many I x (U-L+1) cells.
  long dp_cell_cap = 50000;
  int lagrangian_max_iters = 60;
  // When set, one JSON line of diagnostics (route, gap, iterations) is
  // appended per solve.
  std::string diagnostics_path;
};

// Globally optimal selection: minimize total stock value subject to one
// candidate per category and total loss <= SALE * (1 - alpha_loss).
// Tie-break: smaller objective, then lexicographically smaller chosen-v
// vector. Throws InfeasibleError naming the minimum attainable loss.
SelectionSolution solve_exact(const SelectionProblem& problem,
                              const SolverOptions& options = {});

// Dual bisection on the loss multiplier with greedy repair and a local
// exchange pass; reports a certified gap (primal - dual) / primal.
SelectionSolution solve_lagrangian(const SelectionProblem& problem,
                                   const SolverOptions& options = {});

// Default routing: solve_exact (enumeration, then DP) up to dp_cell_cap
// cells, Lagrangian beyond it.
SelectionSolution solve_auto(const SelectionProblem& problem,
                             const SolverOptions& options = {});

struct ParetoEntry {
  double alpha = 0.0;
  bool feasible = false;
  SelectionSolution solution;  // valid when feasible
  std::string error;           // infeasibility note otherwise
};

// Per-alpha solves over an ascending alpha list; infeasible entries are
// flagged and the sweep continues.
std::vector<ParetoEntry> pareto_sweep(const SelectionProblem& base,
                                      std::span<const double> alphas,
                                      const SolverOptions& options = {});

struct CalibrationResult {
  double alpha_star = 0.0;
  double achieved_turnover = 0.0;
  int probes = 0;
  bool bracketed = true;  // false when the target fell outside both endpoints
  std::string warning;
  LabelSet labels;  // one row per category, epoch_start_day = 0
};

// Binary search on alpha_loss: each probe solves the selection model on the
// panel's parameter table and simulates the chosen policy to measure achieved
// turnover; stops when |achieved - target| <= tol_days. Non-bracketing
// targets return the nearer endpoint with a warning. An infinite tol_days
// returns the first midpoint probe.
CalibrationResult calibrate_alpha(const DemandPanel& panel, const CandidateGrid& grid,
                                  const SimConfig& cfg, double target_turnover,
                                  double tol_days, const SolverOptions& options = {},
                                  sim::SaleBasis sale_basis = sim::SaleBasis::kDemandValue);

// Partitions the horizon into consecutive epochs of epoch_days (last one may
// be shorter), re-tabulates parameters on each epoch sub-trace and solves at
// alpha_star. When per_sku is true every SKU forms its own selection group.
LabelSet generate_labels(const DemandPanel& panel, const CandidateGrid& grid,
                         const SimConfig& cfg, double alpha_star, int epoch_days,
                         const SolverOptions& options = {}, bool per_sku = false,
                         sim::SaleBasis sale_basis = sim::SaleBasis::kDemandValue);

// Achieved portfolio turnover when every category runs its chosen constant
// v over the panel: sum of average inventories / sum of average demands.
double simulate_selection_turnover(const DemandPanel& panel, const CandidateGrid& grid,
                                   const SimConfig& cfg,
                                   const std::vector<std::string>& category_ids,
                                   const SelectionSolution& solution);

void save_labels(const LabelSet& labels, const std::string& path);
LabelSet load_labels(const std::string& path);

}  // namespace orpr::orsel
