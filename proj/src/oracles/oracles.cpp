#include "orpr/oracles/oracles.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "orpr/core/errors.hpp"

namespace orpr::oracle {

SelectionSolution enumerate_selection(const SelectionProblem& problem) {
  problem.validate();
  const int n_categories = problem.n_categories();
  const int width = problem.grid.size();

  double combos = 1.0;
  for (int i = 0; i < n_categories; ++i) combos *= width;
  if (combos > 1e7) {
    throw DomainError("enumeration instance too large: " + std::to_string(combos) +
                      " combinations");
  }

  const Cents budget = problem.loss_budget();
  Cents min_attainable = 0;
  for (int i = 0; i < n_categories; ++i) {
    Cents row_min = problem.loss[static_cast<std::size_t>(i)][0];
    for (int k = 1; k < width; ++k) {
      row_min = std::min(row_min, problem.loss[static_cast<std::size_t>(i)]
                                              [static_cast<std::size_t>(k)]);
    }
    min_attainable += row_min;
  }
  if (min_attainable > budget) {
    throw InfeasibleError("selection infeasible: minimum attainable loss " +
                          std::to_string(min_attainable) + " exceeds budget " +
                          std::to_string(budget),
                          min_attainable, budget);
  }

  std::vector<int> choice(static_cast<std::size_t>(n_categories), 0);
  std::vector<int> best_choice;
  Cents best_stock = 0;
  Cents best_loss = 0;
  bool have_best = false;

  // Odometer over all assignments; choice holds grid indices.
  while (true) {
    Cents total_stock = 0;
    Cents total_loss = 0;
    for (int i = 0; i < n_categories; ++i) {
      total_stock += problem.stock[static_cast<std::size_t>(i)]
                                  [static_cast<std::size_t>(choice[static_cast<std::size_t>(i)])];
      total_loss += problem.loss[static_cast<std::size_t>(i)]
                                [static_cast<std::size_t>(choice[static_cast<std::size_t>(i)])];
    }
    if (total_loss <= budget) {
      bool better = false;
      if (!have_best || total_stock < best_stock) {
        better = true;
      } else if (total_stock == best_stock) {
        // Lexicographic tie-break on the chosen-v vector.
        for (int i = 0; i < n_categories; ++i) {
          const auto ui = static_cast<std::size_t>(i);
          if (choice[ui] != best_choice[ui]) {
            better = choice[ui] < best_choice[ui];
            break;
          }
        }
      }
      if (better) {
        best_choice = choice;
        best_stock = total_stock;
        best_loss = total_loss;
        have_best = true;
      }
    }
    int pos = n_categories - 1;
    while (pos >= 0) {
      const auto upos = static_cast<std::size_t>(pos);
      if (++choice[upos] < width) break;
      choice[upos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }

  SelectionSolution solution;
  solution.chosen_days.resize(static_cast<std::size_t>(n_categories));
  for (int i = 0; i < n_categories; ++i) {
    solution.chosen_days[static_cast<std::size_t>(i)] =
        problem.grid.value_at(best_choice[static_cast<std::size_t>(i)]);
  }
  solution.objective_value = best_stock;
  solution.total_loss = best_loss;
  solution.optimality_gap = 0.0;
  return solution;
}

SimOutcome replay_simulator(std::span<const Units> trace, const SkuRecord& sku,
                            std::span<const int> decisions, const SimConfig& cfg) {
  cfg.validate();
  if (trace.empty()) throw DomainError("zero-length demand trace");
  if (static_cast<int>(trace.size()) != cfg.horizon_days) {
    throw DomainError("trace length != horizon");
  }
  const int T = cfg.horizon_days;

  // Ordering days by direct scan.
  std::vector<int> order_days;
  for (int t = 0; t < T; ++t) {
    if (t >= cfg.review_offset && (t - cfg.review_offset) % sku.nrt_days == 0) {
      order_days.push_back(t);
    }
  }
  if (order_days.size() != decisions.size()) {
    throw DomainError("decision count mismatch in replay");
  }

  std::vector<Units> incoming(static_cast<std::size_t>(T), 0);
  SimOutcome out;
  out.inventory_trace.assign(static_cast<std::size_t>(T), 0);
  out.lost_trace.assign(static_cast<std::size_t>(T), 0);
  out.arrivals_trace.assign(static_cast<std::size_t>(T), 0);

  Units inventory = cfg.initial_inventory;
  if (cfg.initial_cover_days.has_value()) {
    Units dtot = 0;
    for (int t = 0; t < T; ++t) dtot += trace[static_cast<std::size_t>(t)];
    const double mean = static_cast<double>(dtot) / static_cast<double>(T);
    inventory = static_cast<Units>(std::llround(cfg.initial_cover_days.value() * mean));
  }
  Units inv_sum = 0;
  std::size_t next_order = 0;

  for (int t = 0; t < T; ++t) {
    inventory += incoming[static_cast<std::size_t>(t)];
    out.arrivals_trace[static_cast<std::size_t>(t)] =
        incoming[static_cast<std::size_t>(t)];
    out.arrived_units_total += incoming[static_cast<std::size_t>(t)];

    const Units d = trace[static_cast<std::size_t>(t)];
    Units lost = 0;
    if (d > inventory) lost = d - inventory;
    const Units sold = d - lost;
    inventory = inventory >= d ? inventory - d : 0;

    out.lost_trace[static_cast<std::size_t>(t)] = lost;
    out.inventory_trace[static_cast<std::size_t>(t)] = inventory;
    out.sold_units_total += sold;
    if (lost == 0) out.instock_days += 1;
    inv_sum += inventory;
    out.stock_value += sku.unit_cost * inventory;
    out.lost_sales_value += sku.unit_price * lost;

    if (next_order < order_days.size() && order_days[next_order] == t) {
      double mean;
      if (cfg.fixed_demand_avg.has_value()) {
        mean = cfg.fixed_demand_avg.value();
      } else {
        int lo = t - cfg.demand_avg_window;
        if (lo < 0) lo = 0;
        Units acc = 0;
        int n = 0;
        for (int u = lo; u < t; ++u) {
          acc += trace[static_cast<std::size_t>(u)];
          ++n;
        }
        mean = n > 0 ? static_cast<double>(acc) / n : 0.0;
      }
      const int v = decisions[next_order];
      if (v < 0) throw DomainError("negative decision in replay");
      const Units q = static_cast<Units>(std::llround(v * mean));
      if (q > 0) {
        out.ordered_units_total += q;
        // Same-day (VLT = 0) orders become usable the next morning.
        int arrive = t + sku.vlt_days;
        if (arrive <= t) arrive = t + 1;
        if (arrive < T) {
          incoming[static_cast<std::size_t>(arrive)] += q;
        }
      }
      ++next_order;
    }
  }

  out.pipeline_end_units = out.ordered_units_total - out.arrived_units_total;
  out.avg_inventory_units = static_cast<double>(inv_sum) / static_cast<double>(T);
  return out;
}

std::vector<double> fd_gradient(
    const std::function<double(const std::vector<double>&)>& loss,
    const std::vector<double>& params, double epsilon) {
  std::vector<double> grad(params.size(), 0.0);
  std::vector<double> probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + epsilon;
    const double up = loss(probe);
    probe[i] = original - epsilon;
    const double down = loss(probe);
    probe[i] = original;
    grad[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

OracleReport make_report(const std::string& case_id, double main_value,
                         double oracle_value, double tolerance) {
  OracleReport report;
  report.case_id = case_id;
  report.main_value = main_value;
  report.oracle_value = oracle_value;
  report.abs_deviation = std::fabs(main_value - oracle_value);
  const double scale = std::max(std::fabs(main_value), std::fabs(oracle_value));
  report.rel_deviation = scale > 0.0 ? report.abs_deviation / scale : 0.0;
  report.tolerance = tolerance;
  report.pass = report.abs_deviation <= tolerance ||
                (scale > 0.0 && report.rel_deviation <= tolerance);
  return report;
}

void append_report(const std::string& path, const OracleReport& report) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to " + path);
  char line[512];
  std::snprintf(line, sizeof(line),
                "{\"case\":\"%s\",\"main\":%.17g,\"oracle\":%.17g,"
                "\"abs_dev\":%.17g,\"rel_dev\":%.17g,\"tol\":%.17g,"
                "\"verdict\":\"%s\"}",
                report.case_id.c_str(), report.main_value, report.oracle_value,
                report.abs_deviation, report.rel_deviation, report.tolerance,
                report.pass ? "pass" : "fail");
  out << line << '\n';
}

}  // namespace orpr::oracle
