#include "orpr/orsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "orpr/core/csv.hpp"
#include "orpr/core/errors.hpp"

namespace orpr::orsel {

namespace {

constexpr Cents kInf = std::numeric_limits<Cents>::max() / 4;

struct Instance {
  int n = 0;      // categories
  int width = 0;  // candidates per category
  Cents budget = 0;
  const std::vector<std::vector<Cents>>* stock = nullptr;
  const std::vector<std::vector<Cents>>* loss = nullptr;

  Cents stock_at(int i, int k) const {
    return (*stock)[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  Cents loss_at(int i, int k) const {
    return (*loss)[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
};

Instance make_instance(const SelectionProblem& problem) {
  Instance inst;
  inst.n = problem.n_categories();
  inst.width = problem.grid.size();
  inst.budget = problem.loss_budget();
  inst.stock = &problem.stock;
  inst.loss = &problem.loss;
  return inst;
}

Cents min_attainable_loss(const Instance& inst) {
  Cents total = 0;
  for (int i = 0; i < inst.n; ++i) {
    Cents row = inst.loss_at(i, 0);
    for (int k = 1; k < inst.width; ++k) row = std::min(row, inst.loss_at(i, k));
    total += row;
  }
  return total;
}

void require_feasible(const Instance& inst) {
  const Cents min_loss = min_attainable_loss(inst);
  if (min_loss > inst.budget) {
    throw InfeasibleError("selection infeasible: minimum attainable loss " +
                          std::to_string(min_loss) + " exceeds budget " +
                          std::to_string(inst.budget),
                          min_loss, inst.budget);
  }
}

SelectionSolution finish_solution(const SelectionProblem& problem,
                                  const std::vector<int>& choice_idx, double gap) {
  SelectionSolution solution;
  solution.chosen_days.resize(choice_idx.size());
  solution.objective_value = 0;
  solution.total_loss = 0;
  for (std::size_t i = 0; i < choice_idx.size(); ++i) {
    const auto k = static_cast<std::size_t>(choice_idx[i]);
    solution.chosen_days[i] = problem.grid.value_at(choice_idx[i]);
    solution.objective_value += problem.stock[i][k];
    solution.total_loss += problem.loss[i][k];
  }
  solution.optimality_gap = gap;
  return solution;
}

// Depth-first search in increasing-v order with stock/loss bound pruning.
// Strictly-better acceptance plus the visit order makes the first optimum
// found the lexicographically smallest one.
struct ExhaustiveSearch {
  const Instance& inst;
  std::vector<Cents> suffix_min_stock;  // over categories i..n-1
  std::vector<Cents> suffix_min_loss;
  std::vector<int> current;
  std::vector<int> best;
  Cents best_stock = kInf;

  explicit ExhaustiveSearch(const Instance& instance) : inst(instance) {
    suffix_min_stock.assign(static_cast<std::size_t>(inst.n) + 1, 0);
    suffix_min_loss.assign(static_cast<std::size_t>(inst.n) + 1, 0);
    for (int i = inst.n - 1; i >= 0; --i) {
      Cents ms = kInf, ml = kInf;
      for (int k = 0; k < inst.width; ++k) {
        ms = std::min(ms, inst.stock_at(i, k));
        ml = std::min(ml, inst.loss_at(i, k));
      }
      suffix_min_stock[static_cast<std::size_t>(i)] =
          suffix_min_stock[static_cast<std::size_t>(i) + 1] + ms;
      suffix_min_loss[static_cast<std::size_t>(i)] =
          suffix_min_loss[static_cast<std::size_t>(i) + 1] + ml;
    }
    current.assign(static_cast<std::size_t>(inst.n), 0);
  }

  void run(int i, Cents stock_so_far, Cents loss_so_far) {
    if (i == inst.n) {
      if (stock_so_far < best_stock) {
        best_stock = stock_so_far;
        best = current;
      }
      return;
    }
    for (int k = 0; k < inst.width; ++k) {
      const Cents stock = stock_so_far + inst.stock_at(i, k);
      const Cents loss = loss_so_far + inst.loss_at(i, k);
      if (loss + suffix_min_loss[static_cast<std::size_t>(i) + 1] > inst.budget) continue;
      if (stock + suffix_min_stock[static_cast<std::size_t>(i) + 1] > best_stock) continue;
      current[static_cast<std::size_t>(i)] = k;
      run(i + 1, stock, loss);
    }
  }
};

std::vector<int> solve_exhaustive(const Instance& inst) {
  ExhaustiveSearch search(inst);
  search.run(0, 0, 0);
  return search.best;
}

// Suffix DP over discretized loss units; rounding losses up and the budget
// down keeps every DP-feasible selection truly feasible. `round_up` false
// gives the relaxation used as a lower bound for the gap certificate.
struct DpResult {
  bool feasible = false;
  Cents objective = kInf;
  std::vector<int> choice;
};

DpResult solve_dp(const Instance& inst, Cents resolution, bool round_up) {
  const Cents cap = inst.budget / resolution;
  const auto states = static_cast<std::size_t>(cap) + 1;
  auto unit_loss = [&](int i, int k) -> Cents {
    const Cents loss = inst.loss_at(i, k);
    return round_up ? (loss + resolution - 1) / resolution : loss / resolution;
  };

  // suffix[i][j]: min stock over categories i..n-1 within j loss units.
  std::vector<std::vector<Cents>> suffix(
      static_cast<std::size_t>(inst.n) + 1, std::vector<Cents>(states, kInf));
  for (std::size_t j = 0; j < states; ++j) suffix[static_cast<std::size_t>(inst.n)][j] = 0;

  for (int i = inst.n - 1; i >= 0; --i) {
    auto& row = suffix[static_cast<std::size_t>(i)];
    const auto& next = suffix[static_cast<std::size_t>(i) + 1];
    for (std::size_t j = 0; j < states; ++j) {
      Cents best = kInf;
      for (int k = 0; k < inst.width; ++k) {
        const Cents u = unit_loss(i, k);
        if (u > static_cast<Cents>(j)) continue;
        const Cents tail = next[j - static_cast<std::size_t>(u)];
        if (tail >= kInf) continue;
        best = std::min(best, inst.stock_at(i, k) + tail);
      }
      row[j] = best;
    }
  }

  DpResult result;
  if (suffix[0][states - 1] >= kInf) return result;
  result.feasible = true;
  result.objective = suffix[0][states - 1];
  result.choice.assign(static_cast<std::size_t>(inst.n), 0);
  std::size_t j = states - 1;
  for (int i = 0; i < inst.n; ++i) {
    for (int k = 0; k < inst.width; ++k) {
      const Cents u = unit_loss(i, k);
      if (u > static_cast<Cents>(j)) continue;
      const Cents tail = suffix[static_cast<std::size_t>(i) + 1][j - static_cast<std::size_t>(u)];
      if (tail >= kInf) continue;
      if (inst.stock_at(i, k) + tail == suffix[static_cast<std::size_t>(i)][j]) {
        result.choice[static_cast<std::size_t>(i)] = k;
        j -= static_cast<std::size_t>(u);
        break;
      }
    }
  }
  return result;
}

std::vector<int> min_loss_choice(const Instance& inst) {
  std::vector<int> choice(static_cast<std::size_t>(inst.n), 0);
  for (int i = 0; i < inst.n; ++i) {
    int best = 0;
    for (int k = 1; k < inst.width; ++k) {
      if (inst.loss_at(i, k) < inst.loss_at(i, best)) best = k;
    }
    choice[static_cast<std::size_t>(i)] = best;
  }
  return choice;
}

Cents total_stock(const Instance& inst, const std::vector<int>& choice) {
  Cents total = 0;
  for (int i = 0; i < inst.n; ++i) {
    total += inst.stock_at(i, choice[static_cast<std::size_t>(i)]);
  }
  return total;
}

Cents total_loss(const Instance& inst, const std::vector<int>& choice) {
  Cents total = 0;
  for (int i = 0; i < inst.n; ++i) {
    total += inst.loss_at(i, choice[static_cast<std::size_t>(i)]);
  }
  return total;
}

void append_diagnostics(const std::string& path, const char* solver,
                        const char* route, double gap, int iterations) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::app);
  if (!out) return;
  char line[256];
  std::snprintf(line, sizeof(line),
                "{\"solver\":\"%s\",\"route\":\"%s\",\"gap\":%.9g,"
                "\"iterations\":%d}",
                solver, route, gap, iterations);
  out << line << '\n';
}

}  // namespace

SelectionSolution solve_exact(const SelectionProblem& problem,
                              const SolverOptions& options) {
  problem.validate();
  const Instance inst = make_instance(problem);
  require_feasible(inst);

  double combos = 1.0;
  for (int i = 0; i < inst.n && combos <= options.exhaustive_combo_cap; ++i) {
    combos *= inst.width;
  }

  if (combos <= options.exhaustive_combo_cap) {
    const auto choice = solve_exhaustive(inst);
    append_diagnostics(options.diagnostics_path, "exact", "exhaustive", 0.0, 0);
    return finish_solution(problem, choice, 0.0);
  }

  const Cents resolution =
      std::max<Cents>(1, inst.budget / std::max(1, options.dp_resolution_steps));
  DpResult upper = solve_dp(inst, resolution, /*round_up=*/true);
  std::vector<int> choice;
  if (upper.feasible) {
    choice = upper.choice;
  } else {
    // Rounding can block a feasible instance; fall back to the guaranteed
    // min-loss selection.
    choice = min_loss_choice(inst);
  }
  double gap = 0.0;
  if (resolution > 1) {
    const DpResult lower = solve_dp(inst, resolution, /*round_up=*/false);
    const Cents ub = total_stock(inst, choice);
    if (lower.feasible && ub > 0) {
      gap = static_cast<double>(ub - std::min(lower.objective, ub)) /
            static_cast<double>(ub);
    }
  }
  append_diagnostics(options.diagnostics_path, "exact", "dp", gap, 0);
  return finish_solution(problem, choice, gap);
}

SelectionSolution solve_lagrangian(const SelectionProblem& problem,
                                   const SolverOptions& options) {
  problem.validate();
  const Instance inst = make_instance(problem);
  require_feasible(inst);

  // Per-category argmin of stock + lambda * loss, smaller v on ties.
  auto select_at = [&](double lambda) {
    std::vector<int> choice(static_cast<std::size_t>(inst.n), 0);
    for (int i = 0; i < inst.n; ++i) {
      int best = 0;
      double best_score = static_cast<double>(inst.stock_at(i, 0)) +
                          lambda * static_cast<double>(inst.loss_at(i, 0));
      for (int k = 1; k < inst.width; ++k) {
        const double score = static_cast<double>(inst.stock_at(i, k)) +
                             lambda * static_cast<double>(inst.loss_at(i, k));
        if (score < best_score) {
          best = k;
          best_score = score;
        }
      }
      choice[static_cast<std::size_t>(i)] = best;
    }
    return choice;
  };
  auto dual_value = [&](double lambda, const std::vector<int>& choice) {
    double value = -lambda * static_cast<double>(inst.budget);
    for (int i = 0; i < inst.n; ++i) {
      const int k = choice[static_cast<std::size_t>(i)];
      value += static_cast<double>(inst.stock_at(i, k)) +
               lambda * static_cast<double>(inst.loss_at(i, k));
    }
    return value;
  };

  double best_dual = -std::numeric_limits<double>::infinity();
  std::vector<int> best_feasible;
  bool have_feasible = false;
  auto consider = [&](const std::vector<int>& choice) {
    if (total_loss(inst, choice) > inst.budget) return;
    if (!have_feasible || total_stock(inst, choice) < total_stock(inst, best_feasible)) {
      best_feasible = choice;
      have_feasible = true;
    }
  };

  int iterations = 0;
  auto probe = [&](double lambda) {
    ++iterations;
    auto choice = select_at(lambda);
    best_dual = std::max(best_dual, dual_value(lambda, choice));
    consider(choice);
    return choice;
  };

  // lambda = 0: pure min-stock. Feasible means the loss constraint is slack.
  auto zero_choice = probe(0.0);
  if (total_loss(inst, zero_choice) <= inst.budget) {
    append_diagnostics(options.diagnostics_path, "lagrangian", "slack", 0.0, iterations);
    return finish_solution(problem, zero_choice, 0.0);
  }

  // Grow lambda until the relaxed pick turns feasible, then bisect.
  double lo = 0.0, hi = 1.0;
  while (total_loss(inst, probe(hi)) > inst.budget && hi < 1e12) hi *= 2.0;
  for (int iter = 0; iter < options.lagrangian_max_iters; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const auto choice = probe(mid);
    if (total_loss(inst, choice) > inst.budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  // Greedy repair from the last infeasible side: best loss reduction per
  // added stock until within budget.
  std::vector<int> repaired = select_at(lo);
  Cents cur_loss = total_loss(inst, repaired);
  while (cur_loss > inst.budget) {
    int move_i = -1, move_k = -1;
    double move_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < inst.n; ++i) {
      const int cur = repaired[static_cast<std::size_t>(i)];
      for (int k = 0; k < inst.width; ++k) {
        const Cents dloss = inst.loss_at(i, k) - inst.loss_at(i, cur);
        if (dloss >= 0) continue;
        const Cents dstock = inst.stock_at(i, k) - inst.stock_at(i, cur);
        const double ratio =
            static_cast<double>(std::max<Cents>(dstock, 0)) / static_cast<double>(-dloss);
        if (ratio < move_ratio) {
          move_ratio = ratio;
          move_i = i;
          move_k = k;
        }
      }
    }
    if (move_i < 0) break;  // no loss-reducing move left
    repaired[static_cast<std::size_t>(move_i)] = move_k;
    cur_loss = total_loss(inst, repaired);
  }
  consider(repaired);

  if (!have_feasible) {
    // The min-loss selection is feasible by the precondition.
    best_feasible = min_loss_choice(inst);
    have_feasible = true;
  }

  // Local exchange: any single-category switch that lowers stock (or matches
  // it with a smaller v) while staying within budget.
  bool improved = true;
  while (improved) {
    improved = false;
    const Cents loss_now = total_loss(inst, best_feasible);
    for (int i = 0; i < inst.n && !improved; ++i) {
      const int cur = best_feasible[static_cast<std::size_t>(i)];
      for (int k = 0; k < inst.width; ++k) {
        if (k == cur) continue;
        const Cents dstock = inst.stock_at(i, k) - inst.stock_at(i, cur);
        const Cents dloss = inst.loss_at(i, k) - inst.loss_at(i, cur);
        if (loss_now + dloss > inst.budget) continue;
        if (dstock < 0 || (dstock == 0 && k < cur)) {
          best_feasible[static_cast<std::size_t>(i)] = k;
          improved = true;
          break;
        }
      }
    }
  }

  const Cents primal = total_stock(inst, best_feasible);
  double gap = 0.0;
  if (primal > 0) {
    gap = (static_cast<double>(primal) - std::min(best_dual, static_cast<double>(primal))) /
          static_cast<double>(primal);
  }
  append_diagnostics(options.diagnostics_path, "lagrangian", "bisect", gap, iterations);
  return finish_solution(problem, best_feasible, gap);
}

SelectionSolution solve_auto(const SelectionProblem& problem,
                             const SolverOptions& options) {
  problem.validate();
  const long cells = static_cast<long>(problem.n_categories()) * problem.grid.size();
  if (cells <= options.dp_cell_cap) return solve_exact(problem, options);
  return solve_lagrangian(problem, options);
}

std::vector<ParetoEntry> pareto_sweep(const SelectionProblem& base,
                                      std::span<const double> alphas,
                                      const SolverOptions& options) {
  for (std::size_t i = 1; i < alphas.size(); ++i) {
    if (alphas[i] < alphas[i - 1]) {
      throw DomainError("pareto_sweep alphas must be sorted ascending");
    }
  }
  std::vector<ParetoEntry> entries;
  entries.reserve(alphas.size());
  for (double alpha : alphas) {
    ParetoEntry entry;
    entry.alpha = alpha;
    SelectionProblem problem = base;
    problem.alpha_loss = alpha;
    try {
      entry.solution = solve_exact(problem, options);
      entry.feasible = true;
    } catch (const InfeasibleError& err) {
      entry.feasible = false;
      entry.error = err.what();
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

double simulate_selection_turnover(const DemandPanel& panel, const CandidateGrid& grid,
                                   const SimConfig& cfg,
                                   const std::vector<std::string>& category_ids,
                                   const SelectionSolution& solution) {
  double inventory_sum = 0.0;
  double demand_sum = 0.0;
  for (std::size_t s = 0; s < panel.skus.size(); ++s) {
    const auto& sku = panel.skus[s];
    const auto it = std::find(category_ids.begin(), category_ids.end(), sku.category_id);
    if (it == category_ids.end()) {
      throw DomainError("sku " + sku.sku_id + " category not in solution");
    }
    const int v = solution.chosen_days[static_cast<std::size_t>(it - category_ids.begin())];
    const SimOutcome outcome =
        sim::evaluate_candidate(sim::DemandTrace(panel.demand[s]), sku, grid, v, cfg);
    inventory_sum += outcome.avg_inventory_units;
    Units demand_total = 0;
    for (Units d : panel.demand[s]) demand_total += d;
    demand_sum += static_cast<double>(demand_total) / panel.horizon_days;
  }
  if (demand_sum <= 0.0) throw DomainError("panel has zero total demand");
  return inventory_sum / demand_sum;
}

CalibrationResult calibrate_alpha(const DemandPanel& panel, const CandidateGrid& grid,
                                  const SimConfig& cfg, double target_turnover,
                                  double tol_days, const SolverOptions& options,
                                  sim::SaleBasis sale_basis) {
  panel.validate();
  const auto grouping = sim::category_grouping(panel);
  const ParamTable table =
      sim::tabulate_parameters(panel, grid, cfg, grouping, sale_basis);

  SelectionProblem problem;
  problem.grid = grid;
  problem.stock = table.stock;
  problem.loss = table.loss;
  problem.sale_total = table.sale_total;

  struct Probe {
    double alpha;
    double turnover;
    SelectionSolution solution;
    bool feasible;
  };
  auto evaluate = [&](double alpha) {
    Probe probe;
    probe.alpha = alpha;
    problem.alpha_loss = alpha;
    try {
      probe.solution = solve_auto(problem, options);
      probe.feasible = true;
      probe.turnover = simulate_selection_turnover(panel, grid, cfg,
                                                   table.category_ids, probe.solution);
    } catch (const InfeasibleError&) {
      probe.feasible = false;
      probe.turnover = std::numeric_limits<double>::infinity();
    }
    return probe;
  };

  CalibrationResult result;
  auto label_rows = [&](const Probe& probe) {
    LabelSet labels;
    for (std::size_t c = 0; c < table.category_ids.size(); ++c) {
      labels.rows.push_back({table.category_ids[c], 0, probe.solution.chosen_days[c],
                             probe.alpha});
    }
    return labels;
  };
  auto finish = [&](const Probe& probe) {
    result.alpha_star = probe.alpha;
    result.achieved_turnover = probe.turnover;
    result.labels = label_rows(probe);
    return result;
  };

  // Degenerate tolerance: single probe at the midpoint.
  if (std::isinf(tol_days)) {
    const Probe mid = evaluate(0.5);
    result.probes = 1;
    if (!mid.feasible) throw DomainError("alpha=0.5 probe infeasible with infinite tolerance");
    return finish(mid);
  }

  Probe lo = evaluate(0.0);
  Probe hi = evaluate(1.0);
  result.probes = 2;
  if (!lo.feasible) {
    throw DomainError("selection infeasible even at alpha=0 (budget = SALE)");
  }
  if (lo.feasible && std::fabs(lo.turnover - target_turnover) <= tol_days) {
    return finish(lo);
  }
  if (hi.feasible && std::fabs(hi.turnover - target_turnover) <= tol_days) {
    return finish(hi);
  }

  const double turn_lo = lo.turnover;
  const double turn_hi = hi.feasible ? hi.turnover : std::numeric_limits<double>::infinity();
  if (target_turnover < std::min(turn_lo, turn_hi) ||
      target_turnover > std::max(turn_lo, turn_hi)) {
    // Non-bracketing target: fall back to the nearer endpoint, loudly.
    const bool use_lo = !hi.feasible ||
                        std::fabs(turn_lo - target_turnover) <=
                            std::fabs(turn_hi - target_turnover);
    result.bracketed = false;
    result.warning = "target turnover " + std::to_string(target_turnover) +
                     " outside achievable range; returning endpoint";
    return finish(use_lo ? lo : hi);
  }

  // Bisection assuming turnover rises with alpha; the best probe seen wins
  // if the response turns out non-monotone.
  const bool increasing = turn_hi >= turn_lo;
  double a_lo = 0.0, a_hi = 1.0;
  Probe best = std::fabs(lo.turnover - target_turnover) <=
                       std::fabs(hi.turnover - target_turnover)
                   ? lo
                   : hi;
  constexpr int kMaxProbes = 20;
  constexpr double kAlphaTol = 9.5367431640625e-07;  // 2^-20
  while (result.probes < kMaxProbes && (a_hi - a_lo) > kAlphaTol) {
    const double mid = 0.5 * (a_lo + a_hi);
    const Probe probe = evaluate(mid);
    ++result.probes;
    if (probe.feasible &&
        std::fabs(probe.turnover - target_turnover) <
            std::fabs(best.turnover - target_turnover)) {
      best = probe;
    }
    if (probe.feasible && std::fabs(probe.turnover - target_turnover) <= tol_days) {
      return finish(probe);
    }
    const bool go_right = probe.feasible
                              ? (increasing ? probe.turnover < target_turnover
                                            : probe.turnover > target_turnover)
                              : false;  // infeasible probe means alpha too tight
    if (go_right) {
      a_lo = mid;
    } else {
      a_hi = mid;
    }
  }
  result.warning = "bisection exhausted; returning best probe";
  return finish(best);
}

LabelSet generate_labels(const DemandPanel& panel, const CandidateGrid& grid,
                         const SimConfig& cfg, double alpha_star, int epoch_days,
                         const SolverOptions& options, bool per_sku,
                         sim::SaleBasis sale_basis) {
  panel.validate();
  if (epoch_days < 1) throw DomainError("epoch_days must be >= 1");
  if (epoch_days > panel.horizon_days) {
    throw DomainError("epoch_days " + std::to_string(epoch_days) +
                      " exceeds horizon " + std::to_string(panel.horizon_days));
  }

  std::map<std::string, std::string> grouping;
  if (per_sku) {
    for (const auto& sku : panel.skus) grouping[sku.sku_id] = sku.sku_id;
  } else {
    grouping = sim::category_grouping(panel);
  }

  LabelSet labels;
  for (int start = 0; start < panel.horizon_days; start += epoch_days) {
    const int length = std::min(epoch_days, panel.horizon_days - start);

    DemandPanel epoch_panel;
    epoch_panel.skus = panel.skus;
    epoch_panel.horizon_days = length;
    epoch_panel.demand.reserve(panel.skus.size());
    for (const auto& trace : panel.demand) {
      epoch_panel.demand.emplace_back(trace.begin() + start,
                                      trace.begin() + start + length);
    }
    SimConfig epoch_cfg = cfg;
    epoch_cfg.horizon_days = length;

    const ParamTable table =
        sim::tabulate_parameters(epoch_panel, grid, epoch_cfg, grouping, sale_basis);
    SelectionProblem problem;
    problem.grid = grid;
    problem.stock = table.stock;
    problem.loss = table.loss;
    problem.sale_total = table.sale_total;
    problem.alpha_loss = alpha_star;
    SelectionSolution solution;
    try {
      solution = solve_auto(problem, options);
    } catch (const InfeasibleError&) {
      // An epoch can be infeasible at the calibrated alpha even when the
      // full horizon is not; the budget-tightening limit is the min-loss
      // selection, so label this epoch with it.
      solution.chosen_days.resize(table.category_ids.size());
      for (std::size_t c = 0; c < table.category_ids.size(); ++c) {
        int best = 0;
        const auto& losses = problem.loss[c];
        const auto& stocks = problem.stock[c];
        for (int k = 1; k < grid.size(); ++k) {
          const auto uk = static_cast<std::size_t>(k);
          const auto ub = static_cast<std::size_t>(best);
          if (losses[uk] < losses[ub] ||
              (losses[uk] == losses[ub] && stocks[uk] < stocks[ub])) {
            best = k;
          }
        }
        solution.chosen_days[c] = grid.value_at(best);
      }
    }
    for (std::size_t c = 0; c < table.category_ids.size(); ++c) {
      labels.rows.push_back(
          {table.category_ids[c], start, solution.chosen_days[c], alpha_star});
    }
  }
  return labels;
}

void save_labels(const LabelSet& labels, const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(labels.rows.size());
  char alpha_buf[32];
  for (const auto& row : labels.rows) {
    std::snprintf(alpha_buf, sizeof(alpha_buf), "%.10g", row.alpha_used);
    rows.push_back({row.category_id, std::to_string(row.epoch_start_day),
                    std::to_string(row.v_days), alpha_buf});
  }
  csv::write_file(path, {"category_id", "epoch_start_day", "v_days", "alpha_used"},
                  rows);
}

LabelSet load_labels(const std::string& path) {
  const auto table = csv::read_file(path);
  const int c_cat = table.column("category_id");
  const int c_start = table.column("epoch_start_day");
  const int c_v = table.column("v_days");
  const int c_alpha = table.column("alpha_used");
  LabelSet labels;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const int line = static_cast<int>(r) + 2;
    LabelRow out;
    out.category_id = row[static_cast<std::size_t>(c_cat)];
    out.epoch_start_day = static_cast<int>(csv::parse_int(
        row[static_cast<std::size_t>(c_start)], "epoch_start_day", line));
    out.v_days = static_cast<int>(
        csv::parse_int(row[static_cast<std::size_t>(c_v)], "v_days", line));
    out.alpha_used =
        csv::parse_double(row[static_cast<std::size_t>(c_alpha)], "alpha_used", line);
    labels.rows.push_back(std::move(out));
  }
  return labels;
}

}  // namespace orpr::orsel
