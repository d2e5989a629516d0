#include "bargain/money.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

namespace bargain {

std::string format_money(Cents amount) {
  const bool negative = amount < 0;
  const Cents magnitude = negative ? -amount : amount;
  const Cents whole = magnitude / kCentsPerDollar;
  const Cents frac = magnitude % kCentsPerDollar;
  char buf[40];
  if (frac == 0) {
    std::snprintf(buf, sizeof(buf), "%s$%lld", negative ? "-" : "",
                  static_cast<long long>(whole));
  } else {
    std::snprintf(buf, sizeof(buf), "%s$%lld.%02lld", negative ? "-" : "",
                  static_cast<long long>(whole), static_cast<long long>(frac));
  }
  return buf;
}

std::optional<Cents> parse_money(std::string_view text) {
  std::size_t i = 0;
  auto skip_space = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip_space();
  bool negative = false;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
    negative = text[i] == '-';
    ++i;
  }
  skip_space();
  if (i < text.size() && text[i] == '$') {
    ++i;
    skip_space();
  }
  if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i]))) {
    return std::nullopt;
  }

  Cents whole = 0;
  bool any_digit = false;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      whole = whole * 10 + (c - '0');
      if (whole > 1'000'000'000'000LL) return std::nullopt;  // absurd price
      any_digit = true;
      ++i;
    } else if (c == ',') {
      ++i;  // thousands separator, not validated for grouping
    } else {
      break;
    }
  }
  if (!any_digit) return std::nullopt;

  Cents frac = 0;
  if (i < text.size() && text[i] == '.') {
    ++i;
    int digits = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      if (digits < 2) frac = frac * 10 + (text[i] - '0');
      ++digits;
      ++i;
    }
    if (digits == 0 || digits > 2) return std::nullopt;
    if (digits == 1) frac *= 10;
  }
  skip_space();
  if (i != text.size()) return std::nullopt;

  const Cents total = whole * kCentsPerDollar + frac;
  return negative ? -total : total;
}

Cents cents_from_dollars_number(double dollars_value) {
  return static_cast<Cents>(std::llround(dollars_value * kCentsPerDollar));
}

}  // namespace bargain
