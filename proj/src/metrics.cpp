#include "bargain/metrics.hpp"

#include <algorithm>
#include <fstream>

#include "bargain/errors.hpp"

namespace bargain {

MeritCoefficients default_coefficients() { return MeritCoefficients{}; }

MeritCoefficients coefficients_from_json(const Json& j) {
  MeritCoefficients c;
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.gamma = j.at("gamma").get<double>();
  if (c.alpha <= 0 || c.beta <= 0 || c.gamma <= 0) {
    throw ValidationError("merit coefficients must be strictly positive");
  }
  return c;
}

MeritCoefficients load_coefficients(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open coefficients file: " + path.string());
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw ParseError("malformed coefficients file: " + path.string());
  }
  return coefficients_from_json(j);
}

Json coefficients_to_json(const MeritCoefficients& c) {
  return Json{{"alpha", c.alpha}, {"beta", c.beta}, {"gamma", c.gamma}};
}

MeritConfig merit_config_from_json(const Json& j) {
  MeritConfig config;
  config.coefficients = coefficients_from_json(j);
  config.options.clamp_np = j.value("clamp_np", true);
  return config;
}

MeritConfig load_merit_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open coefficients file: " + path.string());
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw ParseError("malformed coefficients file: " + path.string());
  }
  return merit_config_from_json(j);
}

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

double consumer_surplus(Cents wtp, Cents deal, Cents cost) {
  if (cost >= wtp) {
    throw ValidationError("degenerate surplus band: cost " + format_money(cost) +
                          " >= wtp " + format_money(wtp));
  }
  const double ratio = static_cast<double>(wtp - deal) /
                       static_cast<double>(wtp - cost);
  return clamp01(ratio);
}

double negotiation_power(Cents initial, Cents deal, Cents cost, bool clamp) {
  if (cost >= initial) {
    throw ValidationError("degenerate power band: cost " + format_money(cost) +
                          " >= initial " + format_money(initial));
  }
  const double ratio = static_cast<double>(initial - deal) /
                       static_cast<double>(initial - cost);
  return clamp ? clamp01(ratio) : ratio;
}

double acquisition_ratio(const Eigen::VectorXd& acquired,
                         const Eigen::VectorXd& desired) {
  if (acquired.size() != desired.size()) {
    throw ValidationError("embedding dimensions differ: " +
                          std::to_string(acquired.size()) + " vs " +
                          std::to_string(desired.size()));
  }
  const double na = acquired.norm();
  const double nd = desired.norm();
  if (na == 0.0 || nd == 0.0) {
    throw ValidationError("acquisition ratio of a zero vector");
  }
  const double cosine = acquired.dot(desired) / (na * nd);
  return std::max(0.0, cosine);
}

double acquisition_ratio_lookup(const std::string& acquired_id,
                                const Scenario& s, const EmbedFn& embed) {
  if (acquired_id == s.desired_product) return 1.0;
  const Product* acquired = s.find_product(acquired_id);
  if (!acquired) {
    throw ValidationError("scenario '" + s.id + "': unknown product '" +
                          acquired_id + "'");
  }
  if (acquired->ar_to_desired) return *acquired->ar_to_desired;
  if (embed) {
    return acquisition_ratio(embed(acquired->name), embed(s.desired().name));
  }
  throw ValidationError("scenario '" + s.id + "': product '" + acquired_id +
                        "' has no ar_to_desired and no embedding provider is "
                        "configured");
}

MeritBreakdown score_dialogue(const DialogueRecord& record, const Scenario& s,
                              const MeritCoefficients& c,
                              const MeritOptions& options,
                              const EmbedFn& embed) {
  if (record.aborted) {
    throw ValidationError("aborted record '" + record.scenario_id +
                          "' is excluded from scoring");
  }
  if (!record.outcome) {
    throw ValidationError("record has no outcome; negotiation not terminal");
  }

  MeritBreakdown out;
  const auto* deal = std::get_if<DealOutcome>(&*record.outcome);
  if (!deal) {
    return out;  // impasse or quit: merit 0, components unset
  }

  std::string product_id;
  if (s.market.product_mode == ProductMode::single) {
    product_id = s.products.front().id;
  } else if (deal->product) {
    product_id = *deal->product;
  } else {
    throw ValidationError("scenario '" + s.id +
                          "': dealt product unresolvable in multi mode");
  }
  const Product* product = s.find_product(product_id);
  if (!product) {
    throw ValidationError("scenario '" + s.id + "': dealt product '" +
                          product_id + "' not in scenario");
  }

  out.dealt = true;
  out.deal_price = deal->price;
  out.product = product_id;
  out.cs = consumer_surplus(product->wtp, deal->price, product->cost);
  out.np = negotiation_power(product->initial_price, deal->price,
                             product->cost, options.clamp_np);
  out.ar = s.market.product_mode == ProductMode::single
               ? 1.0
               : acquisition_ratio_lookup(product_id, s, embed);
  out.merit = c.alpha * out.cs + c.beta * out.np + c.gamma * out.ar;
  return out;
}

Json breakdown_to_json(const MeritBreakdown& b) {
  Json j;
  j["dealt"] = b.dealt;
  j["merit"] = b.merit;
  if (b.dealt) {
    j["cs"] = b.cs;
    j["np"] = b.np;
    j["ar"] = b.ar;
    if (b.deal_price) j["deal_price"] = to_dollars(*b.deal_price);
    if (b.product) j["product"] = *b.product;
  }
  return j;
}

MeritBreakdown breakdown_from_json(const Json& j) {
  MeritBreakdown b;
  b.dealt = j.value("dealt", false);
  b.merit = j.value("merit", 0.0);
  if (b.dealt) {
    b.cs = j.value("cs", 0.0);
    b.np = j.value("np", 0.0);
    b.ar = j.value("ar", 0.0);
    if (j.contains("deal_price") && !j.at("deal_price").is_null()) {
      b.deal_price = cents_from_dollars_number(j.at("deal_price").get<double>());
    }
    if (j.contains("product") && !j.at("product").is_null()) {
      b.product = j.at("product").get<std::string>();
    }
  }
  return b;
}

}  // namespace bargain
