#pragma once

#include <cstdint>
#include <string>

namespace orpr {

// All currency amounts are held in integer minor units (cents) so that
// simulator and solver arithmetic is exact and cross-implementation
// comparisons can require equality instead of tolerances.
using Cents = std::int64_t;

// Parses a decimal currency literal ("12", "12.5", "12.50", "-0.07") into
// cents. At most two fraction digits are accepted. Throws ParseError.
Cents parse_money(const std::string& text);

// Formats cents as a decimal string with exactly two fraction digits.
std::string format_money(Cents cents);

}  // namespace orpr
