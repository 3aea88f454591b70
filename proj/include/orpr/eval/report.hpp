#pragma once

#include <string>
#include <vector>

#include "orpr/eval/experiment.hpp"

namespace orpr::eval {

// Writes report.csv plus the companion decisions.csv and series.csv under
// out_dir, with deterministic formatting (re-emission is byte-identical).
void emit_report(const std::vector<ReportRow>& rows,
                 const std::vector<DecisionRow>& decisions,
                 const std::vector<SeriesRow>& series, const std::string& out_dir);

std::vector<ReportRow> load_report_rows(const std::string& path);

}  // namespace orpr::eval
