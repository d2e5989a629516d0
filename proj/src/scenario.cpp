#include "bargain/scenario.hpp"

#include <algorithm>
#include <set>

#include "bargain/errors.hpp"

namespace bargain {

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::vanilla: return "vanilla";
    case Regime::deceptive: return "deceptive";
    case Regime::monopoly: return "monopoly";
    case Regime::installment: return "installment";
    case Regime::negative_perception: return "negative-perception";
  }
  return "vanilla";
}

std::string_view to_string(ProductMode m) {
  return m == ProductMode::single ? "single" : "multi";
}

std::string_view to_string(Role r) {
  return r == Role::buyer ? "buyer" : "seller";
}

Regime regime_from_string(std::string_view s) {
  if (s == "vanilla") return Regime::vanilla;
  if (s == "deceptive") return Regime::deceptive;
  if (s == "monopoly") return Regime::monopoly;
  if (s == "installment") return Regime::installment;
  if (s == "negative-perception" || s == "negative_perception") {
    return Regime::negative_perception;
  }
  throw ValidationError("unknown market regime: " + std::string(s));
}

ProductMode product_mode_from_string(std::string_view s) {
  if (s == "single") return ProductMode::single;
  if (s == "multi") return ProductMode::multi;
  throw ValidationError("unknown product mode: " + std::string(s));
}

Role role_from_string(std::string_view s) {
  if (s == "buyer") return Role::buyer;
  if (s == "seller") return Role::seller;
  throw ValidationError("unknown role: " + std::string(s));
}

bool valid_market(MarketRegime market) {
  if (market.regime == Regime::vanilla) {
    return market.product_mode == ProductMode::single;
  }
  return true;
}

const std::vector<MarketRegime>& all_markets() {
  static const std::vector<MarketRegime> markets = {
      {Regime::vanilla, ProductMode::single},
      {Regime::deceptive, ProductMode::single},
      {Regime::deceptive, ProductMode::multi},
      {Regime::monopoly, ProductMode::single},
      {Regime::monopoly, ProductMode::multi},
      {Regime::installment, ProductMode::single},
      {Regime::installment, ProductMode::multi},
      {Regime::negative_perception, ProductMode::single},
      {Regime::negative_perception, ProductMode::multi},
  };
  return markets;
}

std::string market_label(MarketRegime market) {
  return std::string(to_string(market.regime)) + "/" +
         std::string(to_string(market.product_mode));
}

MarketRegime market_from_label(std::string_view label) {
  const auto slash = label.find('/');
  if (slash == std::string_view::npos) {
    throw ValidationError("market label must look like 'deceptive/multi': " +
                          std::string(label));
  }
  MarketRegime market{regime_from_string(label.substr(0, slash)),
                      product_mode_from_string(label.substr(slash + 1))};
  if (!valid_market(market)) {
    throw ValidationError("invalid market: " + std::string(label) +
                          " (vanilla requires single)");
  }
  return market;
}

const Product* Scenario::find_product(std::string_view product_id) const {
  for (const auto& p : products) {
    if (p.id == product_id) return &p;
  }
  return nullptr;
}

const Product& Scenario::desired() const {
  const Product* p = find_product(desired_product);
  if (!p) {
    throw ValidationError("scenario " + id + ": desired_product '" +
                          desired_product + "' not in products");
  }
  return *p;
}

std::vector<std::string> validate_scenario(const Scenario& s) {
  std::vector<std::string> violations;
  auto violation = [&](const std::string& text) { violations.push_back(text); };

  if (s.id.empty()) violation("id: must be nonempty");

  if (!valid_market(s.market)) {
    violation("market: Vanilla requires Single (nine valid regime combinations)");
  }
  if (s.market.product_mode == ProductMode::single && s.products.size() != 1) {
    violation("products: single mode requires exactly 1 product, got " +
              std::to_string(s.products.size()));
  }
  if (s.market.product_mode == ProductMode::multi && s.products.size() < 2) {
    violation("products: multi mode requires at least 2 products, got " +
              std::to_string(s.products.size()));
  }
  if (!s.find_product(s.desired_product)) {
    violation("desired_product: '" + s.desired_product +
              "' does not reference a member of products");
  }
  if (s.max_messages <= 0) {
    violation("max_messages: must be positive");
  }

  std::set<std::string> seen_ids;
  for (const auto& p : s.products) {
    const std::string where = "product '" + p.id + "': ";
    if (!seen_ids.insert(p.id).second) {
      violation(where + "duplicate product id");
    }
    if (!(p.cost < p.wtp)) {
      violation(where + "cost < wtp violated (" + format_money(p.cost) +
                " vs " + format_money(p.wtp) + ")");
    }
    if (!(p.cost < p.initial_price)) {
      violation(where + "cost < initial_price violated (" +
                format_money(p.cost) + " vs " + format_money(p.initial_price) +
                ")");
    }
    if (!(p.initial_price >= p.wtp)) {
      violation(where + "initial_price >= wtp violated (" +
                format_money(p.initial_price) + " vs " + format_money(p.wtp) +
                ")");
    }
    if (p.ar_to_desired) {
      if (*p.ar_to_desired < 0.0 || *p.ar_to_desired > 1.0) {
        violation(where + "ar_to_desired outside [0,1]");
      }
      if (p.id == s.desired_product && *p.ar_to_desired != 1.0) {
        violation(where + "ar_to_desired must equal 1 for the desired product");
      }
    }
  }
  return violations;
}

namespace {

const char* const kKnownScenarioFields[] = {
    "id",          "market",          "category",
    "products",    "desired_product", "buyer_first_offer",
    "max_messages", "prompt_overrides"};

Cents money_field(const Json& j, const std::string& key,
                  const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ParseError(where + ": missing or non-numeric field '" + key + "'");
  }
  return cents_from_dollars_number(j.at(key).get<double>());
}

Product product_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": product must be an object");
  Product p;
  if (!j.contains("id") || !j.at("id").is_string()) {
    throw ParseError(where + ": missing product field 'id'");
  }
  p.id = j.at("id").get<std::string>();
  p.name = j.value("name", p.id);
  p.cost = money_field(j, "cost", where + " product '" + p.id + "'");
  p.wtp = money_field(j, "wtp", where + " product '" + p.id + "'");
  p.initial_price =
      money_field(j, "initial_price", where + " product '" + p.id + "'");
  if (j.contains("features")) {
    for (const auto& f : j.at("features")) {
      p.features.push_back(f.get<std::string>());
    }
  }
  if (j.contains("ar_to_desired") && !j.at("ar_to_desired").is_null()) {
    p.ar_to_desired = j.at("ar_to_desired").get<double>();
  }
  return p;
}

Json product_to_json(const Product& p) {
  Json j;
  j["id"] = p.id;
  j["name"] = p.name;
  j["cost"] = to_dollars(p.cost);
  j["wtp"] = to_dollars(p.wtp);
  j["initial_price"] = to_dollars(p.initial_price);
  j["features"] = p.features;
  if (p.ar_to_desired) j["ar_to_desired"] = *p.ar_to_desired;
  return j;
}

}  // namespace

Scenario scenario_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("scenario record must be an object");
  Scenario s;
  if (!j.contains("id") || !j.at("id").is_string()) {
    throw ParseError("scenario record: missing field 'id'");
  }
  s.id = j.at("id").get<std::string>();
  const std::string where = "scenario '" + s.id + "'";

  if (!j.contains("market") || !j.at("market").is_object()) {
    throw ParseError(where + ": missing field 'market'");
  }
  const Json& m = j.at("market");
  s.market.regime = regime_from_string(m.value("regime", ""));
  s.market.product_mode = product_mode_from_string(m.value("product_mode", ""));

  if (!j.contains("products") || !j.at("products").is_array()) {
    throw ParseError(where + ": missing field 'products'");
  }
  for (const auto& pj : j.at("products")) {
    s.products.push_back(product_from_json(pj, where));
  }
  if (!j.contains("desired_product") || !j.at("desired_product").is_string()) {
    throw ParseError(where + ": missing field 'desired_product'");
  }
  s.desired_product = j.at("desired_product").get<std::string>();
  if (const Product* d = s.find_product(s.desired_product); d) {
    s.category = j.value("category", d->name);
  } else {
    s.category = j.value("category", s.desired_product);
  }
  s.buyer_first_offer = j.value("buyer_first_offer", false);
  s.max_messages = j.value("max_messages", 20);
  if (j.contains("prompt_overrides")) {
    for (const auto& [role_label, text] : j.at("prompt_overrides").items()) {
      role_from_string(role_label);  // reject unknown roles early
      s.prompt_overrides[role_label] = text.get<std::string>();
    }
  }
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(std::begin(kKnownScenarioFields),
                     std::end(kKnownScenarioFields), [&](const char* k) {
                       return key == k;
                     }) == std::end(kKnownScenarioFields)) {
      s.extra[key] = value;
    }
  }
  return s;
}

Json scenario_to_json(const Scenario& s) {
  Json j = s.extra;
  j["id"] = s.id;
  j["market"] = {{"regime", to_string(s.market.regime)},
                 {"product_mode", to_string(s.market.product_mode)}};
  j["category"] = s.category;
  Json products = Json::array();
  for (const auto& p : s.products) products.push_back(product_to_json(p));
  j["products"] = products;
  j["desired_product"] = s.desired_product;
  if (s.buyer_first_offer) j["buyer_first_offer"] = true;
  j["max_messages"] = s.max_messages;
  if (!s.prompt_overrides.empty()) {
    Json overrides = Json::object();
    for (const auto& [role_label, text] : s.prompt_overrides) {
      overrides[role_label] = text;
    }
    j["prompt_overrides"] = overrides;
  }
  return j;
}

std::vector<Scenario> load_scenarios(const std::filesystem::path& path) {
  std::vector<Scenario> scenarios;
  for_each_jsonl(path, [&](std::size_t line, const Json& record) {
    Scenario s;
    try {
      s = scenario_from_json(record);
    } catch (const ParseError& e) {
      throw ParseError(path.filename().string() + " line " +
                       std::to_string(line) + ": " + e.what());
    }
    const auto violations = validate_scenario(s);
    if (!violations.empty()) {
      throw ValidationError("scenario '" + s.id + "' (line " +
                            std::to_string(line) + "): " + violations.front());
    }
    scenarios.push_back(std::move(s));
  });
  return scenarios;
}

void save_scenarios(const std::filesystem::path& path,
                    const std::vector<Scenario>& scenarios) {
  std::vector<std::string> lines;
  lines.reserve(scenarios.size());
  for (const auto& s : scenarios) lines.push_back(scenario_to_json(s).dump());
  write_lines_atomic(path, lines);
}

std::string opening_line(const Scenario& s) {
  return "Hi, I wanna buy a nice " + s.category + ".";
}

}  // namespace bargain
