#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "orpr/core/types.hpp"

// Brute-force and finite-difference reference implementations used by the
// test suite. Deliberately written without sharing arithmetic helpers with
// the main-path modules so that agreement between the two is evidence, not
// tautology.

namespace orpr::oracle {

// True global optimum of the selection problem by full enumeration, with the
// same tie-breaking rule as the production solver (smaller objective, then
// lexicographically smaller chosen-v vector from category 0). Throws
// DomainError when (U-L+1)^I exceeds 1e7 and InfeasibleError when no
// assignment satisfies the loss budget.
SelectionSolution enumerate_selection(const SelectionProblem& problem);

// Straight-line day-loop replay of the replenishment mechanics with one
// inventory-days decision per ordering day. Must agree with the production
// simulator exactly (integer units and cents).
SimOutcome replay_simulator(std::span<const Units> trace, const SkuRecord& sku,
                            std::span<const int> decisions, const SimConfig& cfg);

// Central finite differences of `loss` at `params`, one coordinate at a time.
std::vector<double> fd_gradient(
    const std::function<double(const std::vector<double>&)>& loss,
    const std::vector<double>& params, double epsilon);

struct OracleReport {
  std::string case_id;
  double main_value = 0.0;
  double oracle_value = 0.0;
  double abs_deviation = 0.0;
  double rel_deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

OracleReport make_report(const std::string& case_id, double main_value,
                         double oracle_value, double tolerance);

// Appends one JSON line per report; the test harness consumes these.
void append_report(const std::string& path, const OracleReport& report);

}  // namespace orpr::oracle
