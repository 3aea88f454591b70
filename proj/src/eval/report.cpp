#include "orpr/eval/report.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "orpr/core/csv.hpp"
#include "orpr/core/errors.hpp"

namespace orpr::eval {

using nlohmann::json;

namespace {

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

}  // namespace

void emit_report(const std::vector<ReportRow>& rows,
                 const std::vector<DecisionRow>& decisions,
                 const std::vector<SeriesRow>& series, const std::string& out_dir) {
  if (rows.empty()) throw DomainError("emit_report requires at least one row");

  std::vector<std::vector<std::string>> report_rows;
  report_rows.reserve(rows.size());
  for (const auto& row : rows) {
    report_rows.push_back({row.method,
                           row.turnover_days ? fixed(*row.turnover_days, 6) : "na",
                           fixed(row.instock_rate, 6), format_money(row.holding_cost),
                           format_money(row.stockout_cost), format_money(row.total_cost),
                           fixed(row.relative_total_pct, 2)});
  }
  csv::write_file(out_dir + "/report.csv",
                  {"method", "turnover_days", "instock_rate", "holding_cost",
                   "stockout_cost", "total_cost", "relative_total_pct"},
                  report_rows);

  std::vector<std::vector<std::string>> decision_rows;
  decision_rows.reserve(decisions.size());
  for (const auto& row : decisions) {
    decision_rows.push_back({row.method, row.sku_id, std::to_string(row.day),
                             row.cover_known ? fixed(row.cover_days, 2) : "na"});
  }
  csv::write_file(out_dir + "/decisions.csv",
                  {"method", "sku_id", "epoch_start_day", "v_days"}, decision_rows);

  std::vector<std::vector<std::string>> series_rows;
  series_rows.reserve(series.size());
  for (const auto& row : series) {
    series_rows.push_back({row.method, std::to_string(row.day),
                           std::to_string(row.inventory_units),
                           std::to_string(row.lost_units)});
  }
  csv::write_file(out_dir + "/series.csv",
                  {"method", "day_index", "inventory_units", "lost_units"},
                  series_rows);
}

std::vector<ReportRow> load_report_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  std::vector<ReportRow> rows;
  for (const auto& entry : j.at("rows")) {
    ReportRow row;
    row.method = entry.at("method").get<std::string>();
    if (!entry.at("turnover_days").is_null()) {
      row.turnover_days = entry.at("turnover_days").get<double>();
    }
    row.instock_rate = entry.at("instock_rate").get<double>();
    row.holding_cost = entry.at("holding_cost_cents").get<Cents>();
    row.stockout_cost = entry.at("stockout_cost_cents").get<Cents>();
    row.total_cost = entry.at("total_cost_cents").get<Cents>();
    row.relative_total_pct = entry.at("relative_total_pct").get<double>();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace orpr::eval
