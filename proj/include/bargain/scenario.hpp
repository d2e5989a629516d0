#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bargain/jsonl.hpp"
#include "bargain/money.hpp"

namespace bargain {

enum class Regime { vanilla, deceptive, monopoly, installment, negative_perception };
enum class ProductMode { single, multi };
enum class Role { buyer, seller };

std::string_view to_string(Regime r);
std::string_view to_string(ProductMode m);
std::string_view to_string(Role r);
Regime regime_from_string(std::string_view s);
ProductMode product_mode_from_string(std::string_view s);
Role role_from_string(std::string_view s);
constexpr Role opponent(Role r) {
  return r == Role::buyer ? Role::seller : Role::buyer;
}

struct MarketRegime {
  Regime regime = Regime::vanilla;
  ProductMode product_mode = ProductMode::single;

  auto operator<=>(const MarketRegime&) const = default;
};

// Vanilla exists only in single-product form; every other regime comes in
// both, giving exactly nine markets.
bool valid_market(MarketRegime market);

// The nine markets in canonical report-column order.
const std::vector<MarketRegime>& all_markets();

std::string market_label(MarketRegime market);  // e.g. "deceptive/multi"
MarketRegime market_from_label(std::string_view label);

struct Product {
  std::string id;
  std::string name;
  Cents cost = 0;           // seller-private
  Cents wtp = 0;            // buyer's willingness to pay for this product
  Cents initial_price = 0;  // seller's listed ask
  std::vector<std::string> features;
  // Precomputed acquisition ratio against the scenario's desired product.
  std::optional<double> ar_to_desired;
};

struct Scenario {
  std::string id;
  MarketRegime market;
  // Short noun for the opening line ("Camera"); defaults to the desired
  // product's name when absent from the record.
  std::string category;
  std::vector<Product> products;
  std::string desired_product;
  bool buyer_first_offer = false;
  int max_messages = 20;
  std::map<std::string, std::string> prompt_overrides;  // role label -> text
  Json extra = Json::object();  // unknown record fields, preserved on save

  const Product* find_product(std::string_view product_id) const;
  const Product& desired() const;
};

// Empty iff every invariant holds; each entry names the violated rule and
// the offending field. Violations are data, not exceptions.
std::vector<std::string> validate_scenario(const Scenario& s);

Scenario scenario_from_json(const Json& j);
Json scenario_to_json(const Scenario& s);

// Loads the line-delimited scenario file, validating every record. Throws
// ParseError with the line number for malformed records and ValidationError
// naming the scenario id and rule for invariant violations. Order preserved.
std::vector<Scenario> load_scenarios(const std::filesystem::path& path);

void save_scenarios(const std::filesystem::path& path,
                    const std::vector<Scenario>& scenarios);

// Role-specific system prompt with the inventory filled in. The buyer prompt
// never contains product costs; regime clauses appear iff the regime asks
// for them. prompt_overrides wins verbatim when present.
std::string render_system_prompt(const Scenario& s, Role role);

// "Hi, I wanna buy a nice Camera."
std::string opening_line(const Scenario& s);

}  // namespace bargain
