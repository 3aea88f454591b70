#include "orpr/core/money.hpp"

#include <cctype>
#include <cstdlib>

#include "orpr/core/errors.hpp"

namespace orpr {

Cents parse_money(const std::string& text) {
  if (text.empty()) throw ParseError("empty currency literal");
  std::size_t pos = 0;
  bool negative = false;
  if (text[pos] == '-' || text[pos] == '+') {
    negative = text[pos] == '-';
    ++pos;
  }
  if (pos == text.size()) throw ParseError("bad currency literal '" + text + "'");

  Cents whole = 0;
  bool any_digit = false;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
    whole = whole * 10 + (text[pos] - '0');
    any_digit = true;
    ++pos;
  }
  Cents frac = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      if (digits >= 2) throw ParseError("currency literal '" + text + "' has more than two fraction digits");
      frac = frac * 10 + (text[pos] - '0');
      ++digits;
      ++pos;
      any_digit = true;
    }
    if (digits == 1) frac *= 10;
  }
  if (!any_digit || pos != text.size()) {
    throw ParseError("bad currency literal '" + text + "'");
  }
  Cents cents = whole * 100 + frac;
  return negative ? -cents : cents;
}

std::string format_money(Cents cents) {
  const bool negative = cents < 0;
  Cents abs = negative ? -cents : cents;
  std::string out = std::to_string(abs / 100);
  const Cents frac = abs % 100;
  out += '.';
  out += static_cast<char>('0' + frac / 10);
  out += static_cast<char>('0' + frac % 10);
  return negative ? "-" + out : out;
}

}  // namespace orpr
