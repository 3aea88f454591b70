#pragma once

#include <string>
#include <vector>

namespace orpr::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // rows[i] is data line i+2 in the file

  int column(const std::string& name) const;  // throws ParseError when missing
};

// Reads a comma-separated UTF-8 file. Every data row must have the same
// field count as the header; violations throw ParseError naming the line.
Table read_file(const std::string& path);

// Writes header + rows, LF line endings, no quoting (fields must not
// contain commas or newlines).
void write_file(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows);

// Strict numeric field parsers; messages cite the 1-based file line.
std::int64_t parse_int(const std::string& field, const std::string& name, int line);
double parse_double(const std::string& field, const std::string& name, int line);

}  // namespace orpr::csv
