#include "bargain/agents.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "bargain/errors.hpp"

namespace bargain {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string format_coefficient(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  return buf;
}

}  // namespace

AgentView make_agent_view(const Scenario& s, Role role,
                          const AgentDescriptor& desc,
                          const MeritCoefficients& coefficients) {
  AgentView view;
  view.role = role;
  view.mode = s.market.product_mode;
  view.category = s.category;
  view.desired_product = s.desired_product;
  view.max_messages = s.max_messages;
  view.buyer_first_offer = s.buyer_first_offer;
  for (const auto& p : s.products) {
    VisibleProduct vp;
    vp.id = p.id;
    vp.name = p.name;
    vp.initial_price = p.initial_price;
    vp.features = p.features;
    if (role == Role::buyer) {
      vp.wtp = p.wtp;
    } else {
      vp.cost = p.cost;
    }
    view.products.push_back(std::move(vp));
  }
  if (role == Role::buyer && (desc.strategy == Strategy::icl_mf ||
                              desc.strategy == Strategy::icl_mf_oar)) {
    view.coefficients = coefficients;
  }
  view.system_prompt = build_strategy_prompt(s, role, desc.strategy, coefficients);
  return view;
}

std::vector<Turn> visible_history(const std::vector<Turn>& turns, Role role) {
  std::vector<Turn> out;
  out.reserve(turns.size());
  for (const Turn& t : turns) {
    if (t.role == role) {
      out.push_back(t);
    } else {
      Turn scrubbed = t;
      scrubbed.thought.reset();
      scrubbed.raw = render_turn_public(t);
      out.push_back(std::move(scrubbed));
    }
  }
  return out;
}

Cents og_narrator_offer(Cents budget, int k, int n) {
  if (n < 2) throw ValidationError("og-narrator schedule needs n >= 2");
  if (k < 0 || k >= n) {
    throw ValidationError("og-narrator offer index out of range");
  }
  const double fraction = 0.5 + 0.5 * static_cast<double>(k) /
                                    static_cast<double>(n - 1);
  const double dollars_value = to_dollars(budget) * fraction;
  return dollars(static_cast<std::int64_t>(std::llround(dollars_value)));
}

namespace {

const VisibleProduct* find_visible(const AgentView& view,
                                   const std::string& id) {
  for (const auto& p : view.products) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

int count_own_offers(const std::vector<Turn>& history, Role role,
                     ActionKind kind) {
  int n = 0;
  for (const auto& t : history) {
    if (t.role == role && t.action && t.action->kind == kind) ++n;
  }
  return n;
}

std::optional<Cents> last_offer_price(const std::vector<Turn>& history,
                                      Role role, ActionKind kind) {
  std::optional<Cents> price;
  for (const auto& t : history) {
    if (t.role == role && t.action && t.action->kind == kind && t.action->price) {
      price = *t.action->price;
    }
  }
  return price;
}

}  // namespace

OgNarratorBuyer::OgNarratorBuyer(std::optional<int> planned_offers)
    : planned_offers_(planned_offers) {
  descriptor_.strategy = Strategy::og_narrator;
}

std::string OgNarratorBuyer::next_turn(const AgentView& view,
                                       const std::vector<Turn>& history,
                                       std::uint64_t /*seed*/,
                                       std::string_view /*reminder*/) {
  const VisibleProduct* desired = find_visible(view, view.desired_product);
  if (!desired || !desired->wtp) {
    throw ValidationError("og-narrator buyer needs the desired product's wtp");
  }
  const Cents budget = *desired->wtp;
  const int n = planned_offers_ ? *planned_offers_
                                : std::max(2, view.max_messages / 2);
  const int k = count_own_offers(history, Role::buyer, ActionKind::buy);
  const Cents scheduled = og_narrator_offer(budget, std::min(k, n - 1), n);

  const std::optional<Cents> standing =
      last_offer_price(history, Role::seller, ActionKind::sell);
  const std::string tag =
      view.mode == ProductMode::multi ? " " + desired->name : "";

  if (standing && *standing <= scheduled) {
    return "Talk: Okay, " + format_money(*standing) + " works for me.\n"
           "Action: [DEAL] " + format_money(*standing) + tag;
  }
  if (k < n) {
    return "Talk: Would you take " + format_money(scheduled) + "?\n"
           "Action: [BUY] " + format_money(scheduled) + tag;
  }
  return "Talk: That's beyond what I can pay. I'll pass.\n"
         "Action: [QUIT]";
}

Action scripted_seller_offer(Cents initial, Cents cost, int k,
                             double floor_margin,
                             std::optional<Cents> buyer_offer, double decay) {
  if (cost >= initial) {
    throw ValidationError("scripted seller needs cost < initial");
  }
  if (floor_margin < 0) {
    throw ValidationError("scripted seller floor_margin must be >= 0");
  }
  // Floor in whole dollars, never below cost and never above the ask a
  // seller opened with.
  const double floor_dollars =
      std::ceil(to_dollars(cost) * (1.0 + floor_margin));
  const Cents floor = std::min(
      initial, std::max(cost, dollars(static_cast<std::int64_t>(floor_dollars))));

  if (buyer_offer) {
    if (*buyer_offer >= floor) {
      return Action{ActionKind::deal, *buyer_offer, std::nullopt, std::nullopt};
    }
    if (*buyer_offer < cost) {
      return Action{ActionKind::reject, std::nullopt, std::nullopt, std::nullopt};
    }
  }
  const double span = to_dollars(initial) - to_dollars(floor);
  const double offer_dollars =
      to_dollars(floor) + span * std::pow(decay, static_cast<double>(k));
  Cents offer = dollars(static_cast<std::int64_t>(std::llround(offer_dollars)));
  offer = std::clamp(offer, floor, initial);
  return Action{ActionKind::sell, offer, std::nullopt, std::nullopt};
}

ScriptedSeller::ScriptedSeller(double floor_margin, double decay)
    : floor_margin_(floor_margin), decay_(decay) {
  descriptor_.strategy = Strategy::scripted_seller;
}

std::string ScriptedSeller::next_turn(const AgentView& view,
                                      const std::vector<Turn>& history,
                                      std::uint64_t /*seed*/,
                                      std::string_view /*reminder*/) {
  const VisibleProduct* target = find_visible(view, view.desired_product);
  if (!target || !target->cost) {
    throw ValidationError("scripted seller needs the target product's cost");
  }
  const int k = count_own_offers(history, Role::seller, ActionKind::sell);
  const std::optional<Cents> buyer_offer =
      last_offer_price(history, Role::buyer, ActionKind::buy);
  const Action action = scripted_seller_offer(
      target->initial_price, *target->cost, k, floor_margin_, buyer_offer,
      decay_);
  const std::string tag =
      view.mode == ProductMode::multi ? " " + target->name : "";

  switch (action.kind) {
    case ActionKind::deal:
      return "Talk: Alright, " + format_money(*action.price) + " it is.\n"
             "Action: [DEAL] " + format_money(*action.price) + tag;
    case ActionKind::reject:
      return "Talk: I can't go that low, that's below what it's worth.\n"
             "Action: [REJECT]";
    default:
      return "Talk: I can offer it for " + format_money(*action.price) + ".\n"
             "Action: [SELL] " + format_money(*action.price) + tag;
  }
}

ReplayAgent::ReplayAgent(Role role, std::vector<std::string> replies)
    : replies_(std::move(replies)) {
  descriptor_.strategy = Strategy::replay;
  (void)role;
}

std::string ReplayAgent::next_turn(const AgentView& /*view*/,
                                   const std::vector<Turn>& /*history*/,
                                   std::uint64_t /*seed*/,
                                   std::string_view /*reminder*/) {
  if (next_ >= replies_.size()) {
    throw TransportError("replay agent exhausted after " +
                         std::to_string(replies_.size()) + " replies");
  }
  return replies_[next_++];
}

namespace {

std::string icl_mf_preamble(const MeritCoefficients& c, ProductMode mode) {
  std::ostringstream out;
  out << "Use the following private reward function to guide your "
         "negotiation strategy:\n\n"
      << "reward = " << format_coefficient(c.alpha) << " * CS + "
      << format_coefficient(c.beta) << " * NP + "
      << format_coefficient(c.gamma) << " * AR\n"
      << "where:\n\n"
      << "- CS = (P_budget - P_deal) / (P_budget - P_cost)\n\n"
      << "- NP = (P_initial - P_deal) / (P_initial - P_cost)\n\n";
  if (mode == ProductMode::single) {
    out << "- AR = 1 (constant)\n\n";
  } else {
    out << "- AR = How semantically similar the buyer's acquired items are "
           "to their desired items. (range [0, 1])\n\n";
  }
  out << "If P_cost values are not given, make reasonable assumptions for "
         "them in your private reasoning. Your goal is to maximize \"reward\" "
         "by estimating P_cost as low as realistically possible and adjusting "
         "P_cost accordingly to be as low as possible while keeping the "
         "negotiation active and avoiding a failed deal. Maximum reward is 3.";
  if (mode == ProductMode::multi) {
    out << " Also, ensure that there is a high \"cosine similarity\" between "
           "the item you originally desired and the item you ultimately "
           "purchase. In other words, the closer the final purchased item is "
           "to your initial desired item, the higher the value for AR. "
           "Purchasing exactly the item you wanted from the start yields the "
           "maximum AR.";
  }
  out << "\n\nPlease follow these guidelines:\n\n"
         "- Private Reasoning\n"
         "  - Think through multiple negotiation paths (in your hidden "
         "thought process).\n"
         "  - Do not expose your exact calculations or chain-of-thought to "
         "the other party.\n"
         "  - Continuously estimate CS and NP based on your assumptions.\n";
  return out.str();
}

}  // namespace

std::string build_icl_mf_prompt(const AgentView& view,
                                const MeritCoefficients& c, ProductMode mode) {
  if (view.role != Role::buyer) {
    throw ValidationError("the reward-function preamble is buyer-side only");
  }
  return icl_mf_preamble(c, mode);
}

std::string build_oar_prompt() {
  return
      "Before deciding your next action, explicitly consider the following "
      "about your opponent (the seller):\n"
      "1. Opponent's Potential Hidden Information: Based on their previous "
      "offers and statements, what is their likely underlying cost or "
      "minimum acceptable price for this item? Briefly state your current "
      "hypothesis.\n"
      "2. Opponent's Strategy/Flexibility: How flexible does the seller "
      "seem? Are they making significant concessions, or are they holding "
      "firm? What does this imply about their willingness to negotiate "
      "further?\n"
      "3. Impact of Your Action on Opponent: How might your next offer or "
      "statement influence the seller's perception and their subsequent "
      "counter-offer?\n";
}

std::string compose_with_oar(std::string_view strategy_prompt) {
  static const std::string marker = "Opponent's Potential Hidden Information";
  if (std::string(strategy_prompt).find(marker) != std::string::npos) {
    throw ValidationError("opponent-analysis preamble already composed");
  }
  return build_oar_prompt() + "\n" + std::string(strategy_prompt);
}

std::string build_strategy_prompt(const Scenario& s, Role role,
                                  Strategy strategy,
                                  const MeritCoefficients& c) {
  std::string prompt = render_system_prompt(s, role);
  if (role != Role::buyer) return prompt;

  if (strategy == Strategy::icl_mf || strategy == Strategy::icl_mf_oar) {
    prompt += "\n" + icl_mf_preamble(c, s.market.product_mode);
  }
  if (strategy == Strategy::react_oar || strategy == Strategy::icl_mf_oar) {
    prompt = compose_with_oar(prompt);
  }
  return prompt;
}

Sampling default_sampling(const std::string& model_id) {
  Sampling s;
  s.temperature = 1.0;
  s.top_p = lower(model_id).find("gemini") != std::string::npos ? 0.95 : 1.0;
  return s;
}

LlmAgent::LlmAgent(AgentDescriptor desc, ChatClient& client)
    : descriptor_(std::move(desc)), client_(client) {
  if (!descriptor_.model_id) {
    throw ValidationError("remote strategy '" +
                          std::string(to_string(descriptor_.strategy)) +
                          "' requires a model id");
  }
}

ChatRequest LlmAgent::build_request(const AgentDescriptor& desc,
                                    const AgentView& view,
                                    const std::vector<Turn>& history,
                                    std::string_view reminder) {
  ChatRequest req;
  req.model_id = desc.model_id.value_or("");
  req.sampling = desc.sampling;
  req.messages.push_back({"system", view.system_prompt});
  for (const Turn& t : history) {
    if (t.role == view.role) {
      req.messages.push_back({"assistant", t.raw});
    } else {
      req.messages.push_back({"user", render_turn_public(t)});
    }
  }
  if (req.messages.size() == 1) {
    req.messages.push_back(
        {"user", "(You open the negotiation. Make your first offer.)"});
  }
  if (!reminder.empty()) {
    req.messages.push_back({"user", std::string(reminder)});
  }
  return req;
}

std::string LlmAgent::next_turn(const AgentView& view,
                                const std::vector<Turn>& history,
                                std::uint64_t /*seed*/,
                                std::string_view reminder) {
  return client_.complete(build_request(descriptor_, view, history, reminder));
}

std::unique_ptr<Agent> make_agent(const AgentDescriptor& desc,
                                  ChatClient* client) {
  switch (desc.strategy) {
    case Strategy::og_narrator:
      if (desc.model_id) {
        throw ValidationError("og-narrator takes no model id");
      }
      return std::make_unique<OgNarratorBuyer>();
    case Strategy::scripted_seller:
      if (desc.model_id) {
        throw ValidationError("scripted-seller takes no model id");
      }
      return std::make_unique<ScriptedSeller>();
    case Strategy::replay:
      throw ValidationError(
          "replay agents are built from recorded replies, not descriptors");
    default: {
      if (!client) {
        throw ValidationError("remote strategy '" +
                              std::string(to_string(desc.strategy)) +
                              "' requires a transport client");
      }
      AgentDescriptor with_defaults = desc;
      if (with_defaults.model_id &&
          with_defaults.sampling == Sampling{}) {
        with_defaults.sampling = default_sampling(*with_defaults.model_id);
      }
      return std::make_unique<LlmAgent>(with_defaults, *client);
    }
  }
}

namespace {

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> sentences;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    current += c;
    const bool boundary =
        (c == '.' || c == '?' || c == '!') &&
        (i + 1 >= text.size() ||
         std::isspace(static_cast<unsigned char>(text[i + 1])));
    // Don't split "$47.50" or "3.5".
    const bool decimal =
        c == '.' && i > 0 && i + 1 < text.size() &&
        std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
        std::isdigit(static_cast<unsigned char>(text[i + 1]));
    if (boundary && !decimal) {
      sentences.push_back(current);
      current.clear();
    }
  }
  std::string tail;
  for (char c : current) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      tail = current;
      break;
    }
  }
  if (!tail.empty()) sentences.push_back(tail);
  return sentences;
}

bool keyword_oar(const std::string& sentence) {
  static const char* const keywords[] = {
      "opponent cost", "their cost",  "seller's cost", "profit",
      "margin",        "they might",  "their next",    "seller might",
  };
  const std::string s = lower(sentence);
  return std::any_of(std::begin(keywords), std::end(keywords),
                     [&](const char* k) { return s.find(k) != std::string::npos; });
}

}  // namespace

OarCount count_opponent_aware_sentences(
    const DialogueRecord& record,
    const std::function<bool(const std::string&)>& classifier) {
  OarCount count;
  for (const Turn& t : record.turns) {
    if (t.role != Role::buyer || !t.thought) continue;
    for (const auto& sentence : split_sentences(*t.thought)) {
      ++count.total_sentences;
      const bool hit = classifier ? classifier(sentence) : keyword_oar(sentence);
      if (hit) ++count.oar_sentences;
    }
  }
  return count;
}

}  // namespace bargain
