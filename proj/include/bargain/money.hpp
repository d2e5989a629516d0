#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace bargain {

// Prices are integral cents end to end, so comparisons on deal bands are
// exact. Conversion to double happens only inside the metric formulas.
using Cents = std::int64_t;

inline constexpr Cents kCentsPerDollar = 100;

constexpr Cents dollars(std::int64_t d) { return d * kCentsPerDollar; }

inline double to_dollars(Cents amount) {
  return static_cast<double>(amount) / kCentsPerDollar;
}

// Canonical rendering: "$480", "$480.50", "-$3.07". No thousands separators.
std::string format_money(Cents amount);

// Accepts "$480", "480", "$1,234.56", "$ 480". One or two decimal digits.
// Returns nullopt on anything else (including sub-cent precision).
std::optional<Cents> parse_money(std::string_view text);

// Dollars-as-number used by the file formats ("cost": 480.5 -> 48050).
Cents cents_from_dollars_number(double dollars_value);

}  // namespace bargain
