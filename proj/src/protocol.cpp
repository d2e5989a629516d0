#include "bargain/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "bargain/errors.hpp"

namespace bargain {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

bool allowed_for_role(ActionKind kind, Role role) {
  switch (kind) {
    case ActionKind::buy: return role == Role::buyer;
    case ActionKind::sell: return role == Role::seller;
    default: return true;
  }
}

}  // namespace

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::buy: return "buy";
    case ActionKind::sell: return "sell";
    case ActionKind::reject: return "reject";
    case ActionKind::deal: return "deal";
    case ActionKind::quit: return "quit";
  }
  return "reject";
}

ActionKind action_kind_from_string(std::string_view s) {
  if (s == "buy") return ActionKind::buy;
  if (s == "sell") return ActionKind::sell;
  if (s == "reject") return ActionKind::reject;
  if (s == "deal") return ActionKind::deal;
  if (s == "quit") return ActionKind::quit;
  throw ValidationError("unknown action kind: " + std::string(s));
}

Action parse_action(std::string_view line) {
  const std::string text = lower(line);

  struct Keyword {
    const char* token;
    ActionKind kind;
  };
  static const Keyword keywords[] = {{"[buy]", ActionKind::buy},
                                     {"[sell]", ActionKind::sell},
                                     {"[reject]", ActionKind::reject},
                                     {"[deal]", ActionKind::deal},
                                     {"[quit]", ActionKind::quit}};

  std::optional<ActionKind> kind;
  std::size_t keyword_end = 0;
  for (const auto& kw : keywords) {
    for (std::size_t pos = text.find(kw.token); pos != std::string::npos;
         pos = text.find(kw.token, pos + 1)) {
      if (kind) {
        throw ParseError("multiple conflicting actions on one line: \"" +
                         trim(line) + "\"");
      }
      kind = kw.kind;
      keyword_end = pos + std::string_view(kw.token).size();
    }
  }
  if (!kind) {
    throw ParseError("no recognized action keyword in: \"" + trim(line) + "\"");
  }

  Action action;
  action.kind = *kind;

  std::string rest = trim(line.substr(keyword_end));
  if (action.kind == ActionKind::reject || action.kind == ActionKind::quit) {
    return action;  // trailing chatter ignored; these carry no price
  }

  // Price token: "$1,234.56" or a bare leading number.
  if (!rest.empty()) {
    std::size_t price_begin = 0;
    if (rest[0] == '$' || std::isdigit(static_cast<unsigned char>(rest[0]))) {
      std::size_t price_end = price_begin;
      if (rest[price_end] == '$') ++price_end;
      while (price_end < rest.size() &&
             (std::isdigit(static_cast<unsigned char>(rest[price_end])) ||
              rest[price_end] == ',' || rest[price_end] == '.')) {
        ++price_end;
      }
      // A trailing period is sentence punctuation, not decimals.
      while (price_end > price_begin &&
             (rest[price_end - 1] == '.' || rest[price_end - 1] == ',')) {
        --price_end;
      }
      const std::string token = rest.substr(price_begin, price_end - price_begin);
      const auto parsed = parse_money(token);
      if (!parsed) {
        throw ParseError("unreadable price '" + token + "' in: \"" +
                         trim(line) + "\"");
      }
      action.price = *parsed;
      rest = trim(rest.substr(price_end));
    }
  }

  if (action.price && *action.price <= 0) {
    throw ParseError("price must be positive in: \"" + trim(line) + "\"");
  }
  if (!action.price && action.kind != ActionKind::deal) {
    // A priceless DEAL resolves later against the standing offer; BUY and
    // SELL are meaningless without one.
    throw ParseError("price missing for [" +
                     std::string(action.kind == ActionKind::buy ? "BUY" : "SELL") +
                     "] in: \"" + trim(line) + "\"");
  }

  if (action.kind == ActionKind::deal && !rest.empty()) {
    // Optional "in N installments" tag after the price.
    const std::string rl = lower(rest);
    const std::size_t word = rl.find("installment");
    if (rl.rfind("in ", 0) == 0 && word != std::string::npos) {
      int terms = 0;
      bool digits = false;
      for (std::size_t i = 3; i < word; ++i) {
        if (std::isdigit(static_cast<unsigned char>(rl[i]))) {
          terms = terms * 10 + (rl[i] - '0');
          digits = true;
        }
      }
      if (digits && terms > 0) {
        action.installment_terms = terms;
        std::size_t after = word;
        while (after < rest.size() &&
               !std::isspace(static_cast<unsigned char>(rest[after]))) {
          ++after;
        }
        rest = trim(rest.substr(after));
      }
    }
  }
  if (!rest.empty()) {
    action.product = rest;  // trailing product label (multi mode)
  }
  return action;
}

std::string format_action(const Action& a) {
  std::string out = "[";
  switch (a.kind) {
    case ActionKind::buy: out += "BUY"; break;
    case ActionKind::sell: out += "SELL"; break;
    case ActionKind::reject: out += "REJECT"; break;
    case ActionKind::deal: out += "DEAL"; break;
    case ActionKind::quit: out += "QUIT"; break;
  }
  out += "]";
  if (a.price) out += " " + format_money(*a.price);
  if (a.installment_terms) {
    out += " in " + std::to_string(*a.installment_terms) + " installments";
  }
  if (a.product) out += " " + *a.product;
  return out;
}

namespace {

struct Sections {
  std::optional<std::string> thought;
  std::optional<std::string> talk;
  std::optional<std::string> action_line;
  std::vector<std::string> unlabeled;
};

// Labels may carry markdown bold and any case: "**Thought:**", "ACTION:".
std::optional<std::string> match_label(const std::string& line,
                                       const char* label) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == '*' || line[i] == '#' ||
                             std::isspace(static_cast<unsigned char>(line[i])))) {
    ++i;
  }
  const std::string_view want(label);
  if (line.size() - i < want.size()) return std::nullopt;
  for (char c : want) {
    if (std::tolower(static_cast<unsigned char>(line[i])) != c) return std::nullopt;
    ++i;
  }
  while (i < line.size() && line[i] == '*') ++i;
  if (i >= line.size() || line[i] != ':') return std::nullopt;
  ++i;
  while (i < line.size() && (line[i] == '*' ||
                             std::isspace(static_cast<unsigned char>(line[i])))) {
    ++i;
  }
  return line.substr(i);
}

bool has_action_keyword(const std::string& line) {
  const std::string l = lower(line);
  for (const char* token :
       {"[buy]", "[sell]", "[reject]", "[deal]", "[quit]"}) {
    if (l.find(token) != std::string::npos) return true;
  }
  return false;
}

Sections split_sections(std::string_view raw) {
  Sections sections;
  std::istringstream in{std::string(raw)};
  std::string line;
  enum class Part { none, thought, talk, action } current = Part::none;
  auto append = [](std::optional<std::string>& slot, const std::string& text) {
    if (!slot) {
      slot = text;
    } else if (!text.empty()) {
      *slot += "\n" + text;
    }
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (auto rest = match_label(line, "thought")) {
      current = Part::thought;
      append(sections.thought, trim(*rest));
    } else if (auto rest2 = match_label(line, "talk")) {
      current = Part::talk;
      append(sections.talk, trim(*rest2));
    } else if (auto rest3 = match_label(line, "action")) {
      current = Part::action;
      append(sections.action_line, trim(*rest3));
    } else {
      switch (current) {
        case Part::thought: append(sections.thought, trim(line)); break;
        case Part::talk: append(sections.talk, trim(line)); break;
        case Part::action: break;  // action is one line; ignore run-on text
        case Part::none: {
          const std::string t = trim(line);
          if (!t.empty()) sections.unlabeled.push_back(t);
          break;
        }
      }
    }
  }
  return sections;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    if (!out.empty()) out += "\n";
    out += l;
  }
  return out;
}

}  // namespace

Turn parse_turn(std::string_view raw, Role role) {
  Sections sections = split_sections(raw);

  Turn turn;
  turn.role = role;
  turn.raw = std::string(raw);
  turn.thought = sections.thought;

  std::string action_text;
  if (sections.action_line) {
    action_text = *sections.action_line;
  } else {
    // No "Action:" label: exactly one unlabeled line may carry a bracketed
    // keyword; the other lines become the talk.
    std::vector<std::string> body;
    for (auto& l : sections.unlabeled) {
      if (has_action_keyword(l)) {
        if (!action_text.empty()) {
          throw ParseError("multiple action lines in one reply");
        }
        action_text = l;
      } else {
        body.push_back(l);
      }
    }
    sections.unlabeled = std::move(body);
  }
  if (action_text.empty()) {
    throw ParseError("reply has no Action line");
  }
  turn.action = parse_action(action_text);

  if (sections.talk) {
    turn.talk = *sections.talk;
  } else {
    turn.talk = join_lines(sections.unlabeled);
  }

  if (!allowed_for_role(turn.action->kind, role)) {
    throw ParseError(std::string(to_string(role)) + " reply carries [" +
                     std::string(to_string(turn.action->kind)) +
                     "], which is not in this role's action set");
  }
  return turn;
}

Turn opening_turn(const Scenario& s) {
  Turn turn;
  turn.role = Role::buyer;
  turn.talk = opening_line(s);
  turn.raw = turn.talk;
  return turn;
}

std::string render_turn_public(const Turn& t) {
  if (!t.action) return t.talk;
  std::string out;
  if (!t.talk.empty()) out += "Talk: " + t.talk + "\n";
  out += "Action: " + format_action(*t.action);
  return out;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::react: return "react";
    case Strategy::icl_mf: return "icl-mf";
    case Strategy::icl_mf_oar: return "icl-mf+oar";
    case Strategy::react_oar: return "react+oar";
    case Strategy::og_narrator: return "og-narrator";
    case Strategy::scripted_seller: return "scripted-seller";
    case Strategy::replay: return "replay";
  }
  return "react";
}

Strategy strategy_from_string(std::string_view s) {
  if (s == "react") return Strategy::react;
  if (s == "icl-mf") return Strategy::icl_mf;
  if (s == "icl-mf+oar") return Strategy::icl_mf_oar;
  if (s == "react+oar") return Strategy::react_oar;
  if (s == "og-narrator") return Strategy::og_narrator;
  if (s == "scripted-seller") return Strategy::scripted_seller;
  if (s == "replay") return Strategy::replay;
  throw ValidationError("unknown strategy: " + std::string(s));
}

bool strategy_needs_model(Strategy s) {
  switch (s) {
    case Strategy::og_narrator:
    case Strategy::scripted_seller:
    case Strategy::replay:
      return false;
    default:
      return true;
  }
}

std::string AgentDescriptor::label() const {
  std::string out(to_string(strategy));
  if (model_id) out += ":" + *model_id;
  return out;
}

bool is_deal(const Outcome& o) {
  return std::holds_alternative<DealOutcome>(o);
}

std::string outcome_label(const Outcome& o) {
  if (std::holds_alternative<DealOutcome>(o)) return "deal";
  if (std::holds_alternative<QuitOutcome>(o)) return "quit";
  return "impasse";
}

int message_count(const DialogueRecord& record) {
  int n = 0;
  for (const auto& t : record.turns) {
    if (t.action) ++n;
  }
  return n;
}

NegotiationState initial_state(const Scenario& s) {
  NegotiationState state;
  state.expected = Role::buyer;
  state.max_messages = s.max_messages;
  state.mode = s.market.product_mode;
  state.desired_product = s.desired_product;
  for (const auto& p : s.products) {
    state.products.push_back({p.id, lower(p.name), p.cost});
  }
  return state;
}

namespace {

// The unique product whose name appears in the text, or nullopt.
std::optional<std::string> unique_named_product(
    const std::vector<NegotiationState::ProductInfo>& products,
    std::string_view text) {
  const std::string body = lower(text);
  std::optional<std::string> found;
  for (const auto& p : products) {
    if (body.find(p.lower_name) != std::string::npos) {
      if (found) return std::nullopt;  // ambiguous
      found = p.id;
    }
  }
  return found;
}

// Matches an action's trailing product label against ids and names.
std::optional<std::string> resolve_product_label(
    const std::vector<NegotiationState::ProductInfo>& products,
    const std::string& label) {
  const std::string l = lower(label);
  for (const auto& p : products) {
    if (lower(p.id) == l || p.lower_name == l) return p.id;
  }
  // Tolerate extra words around the name ("the DSLR Camera please").
  return unique_named_product(products, label);
}

Cents product_cost(const std::vector<NegotiationState::ProductInfo>& products,
                   const std::string& id) {
  for (const auto& p : products) {
    if (p.id == id) return p.cost;
  }
  return 0;
}

}  // namespace

NegotiationState step(const NegotiationState& state, const Turn& turn) {
  if (state.terminal()) {
    throw ProtocolError("turn after terminal state");
  }
  if (turn.role != state.expected) {
    throw ProtocolError(std::string("wrong mover: expected ") +
                        std::string(to_string(state.expected)) + ", got " +
                        std::string(to_string(turn.role)));
  }

  NegotiationState next = state;
  next.expected = opponent(state.expected);

  if (!turn.action) {
    // Only the scripted opening line may lack an action.
    if (state.messages != 0 || turn.role != Role::buyer ||
        state.buyer_offer || state.seller_offer) {
      throw ProtocolError("actionless turn outside the opening greeting");
    }
    return next;
  }

  const Action& action = turn.action.value();
  if (!allowed_for_role(action.kind, turn.role)) {
    throw ProtocolError(std::string(to_string(turn.role)) +
                        " cannot perform [" +
                        std::string(to_string(action.kind)) + "]");
  }

  auto note_named_product = [&](const Turn& t, const Action& a) {
    if (a.product) {
      if (auto id = resolve_product_label(next.products, *a.product)) {
        next.last_named_product = id;
        return;
      }
    }
    if (auto id = unique_named_product(next.products, t.talk)) {
      next.last_named_product = id;
    }
  };

  switch (action.kind) {
    case ActionKind::buy: {
      StandingOffer offer{*action.price, std::nullopt};
      if (action.product) {
        offer.product = resolve_product_label(next.products, *action.product);
      }
      next.buyer_offer = offer;
      note_named_product(turn, action);
      break;
    }
    case ActionKind::sell: {
      StandingOffer offer{*action.price, std::nullopt};
      if (action.product) {
        offer.product = resolve_product_label(next.products, *action.product);
      }
      next.seller_offer = offer;
      note_named_product(turn, action);
      break;
    }
    case ActionKind::reject:
      break;  // the opponent's offer stays standing
    case ActionKind::quit:
      next.outcome = QuitOutcome{turn.role};
      break;
    case ActionKind::deal: {
      DealOutcome deal;
      const auto& opponent_offer =
          turn.role == Role::buyer ? state.seller_offer : state.buyer_offer;
      if (action.price) {
        deal.price = *action.price;
      } else if (opponent_offer) {
        deal.price = opponent_offer->price;
      } else {
        throw ProtocolError("priceless [DEAL] with no standing offer");
      }
      deal.installment_terms = action.installment_terms;

      if (next.mode == ProductMode::single) {
        deal.product = next.products.empty()
                           ? std::nullopt
                           : std::optional<std::string>(next.products[0].id);
      } else {
        if (action.product) {
          deal.product = resolve_product_label(next.products, *action.product);
        }
        if (!deal.product) {
          deal.product = unique_named_product(next.products, turn.talk);
        }
        if (!deal.product && opponent_offer && opponent_offer->product) {
          deal.product = opponent_offer->product;
        }
        if (!deal.product) {
          deal.product = next.last_named_product;
        }
      }
      if (deal.product) {
        const Cents cost = product_cost(next.products, *deal.product);
        if (deal.price < cost) {
          next.violations.push_back(
              "seller dealt below cost: " + format_money(deal.price) + " < " +
              format_money(cost) + " for product '" + *deal.product + "'");
        }
      }
      next.outcome = deal;
      break;
    }
  }

  ++next.messages;
  if (!next.outcome && next.messages >= next.max_messages) {
    next.outcome = ImpasseOutcome{"max_messages"};
  }
  return next;
}

std::vector<AnchoringFlag> detect_unstable_anchoring(
    const DialogueRecord& record) {
  std::vector<AnchoringFlag> flags;
  std::optional<Cents> previous_buy;
  for (std::size_t i = 0; i < record.turns.size(); ++i) {
    const Turn& t = record.turns[i];
    if (t.role != Role::buyer || !t.action ||
        t.action->kind != ActionKind::buy || !t.action->price) {
      continue;
    }
    const Cents offer = *t.action->price;
    if (previous_buy && offer < *previous_buy) {
      flags.push_back({i, *previous_buy, offer});
    }
    previous_buy = offer;
  }
  return flags;
}

namespace {

Json sampling_to_json(const Sampling& s) {
  return Json{{"temperature", s.temperature}, {"top_p", s.top_p}};
}

Sampling sampling_from_json(const Json& j) {
  Sampling s;
  s.temperature = j.value("temperature", 1.0);
  s.top_p = j.value("top_p", 1.0);
  return s;
}

Json descriptor_to_json(const AgentDescriptor& d) {
  Json j;
  j["strategy"] = to_string(d.strategy);
  if (d.model_id) j["model_id"] = *d.model_id;
  j["sampling"] = sampling_to_json(d.sampling);
  return j;
}

AgentDescriptor descriptor_from_json(const Json& j) {
  AgentDescriptor d;
  d.strategy = strategy_from_string(j.value("strategy", "react"));
  if (j.contains("model_id") && !j.at("model_id").is_null()) {
    d.model_id = j.at("model_id").get<std::string>();
  }
  if (j.contains("sampling")) d.sampling = sampling_from_json(j.at("sampling"));
  return d;
}

Json action_to_json(const Action& a) {
  Json j;
  j["kind"] = to_string(a.kind);
  if (a.price) j["price"] = to_dollars(*a.price);
  if (a.product) j["product"] = *a.product;
  if (a.installment_terms) j["installment_terms"] = *a.installment_terms;
  return j;
}

Action action_from_json(const Json& j) {
  Action a;
  a.kind = action_kind_from_string(j.value("kind", "reject"));
  if (j.contains("price") && !j.at("price").is_null()) {
    a.price = cents_from_dollars_number(j.at("price").get<double>());
  }
  if (j.contains("product") && !j.at("product").is_null()) {
    a.product = j.at("product").get<std::string>();
  }
  if (j.contains("installment_terms") && !j.at("installment_terms").is_null()) {
    a.installment_terms = j.at("installment_terms").get<int>();
  }
  return a;
}

Json turn_to_json(const Turn& t) {
  Json j;
  j["role"] = to_string(t.role);
  if (t.thought) j["thought"] = *t.thought;
  j["talk"] = t.talk;
  if (t.action) j["action"] = action_to_json(*t.action);
  j["raw"] = t.raw;
  return j;
}

Turn turn_from_json(const Json& j) {
  Turn t;
  t.role = role_from_string(j.value("role", "buyer"));
  if (j.contains("thought") && !j.at("thought").is_null()) {
    t.thought = j.at("thought").get<std::string>();
  }
  t.talk = j.value("talk", "");
  if (j.contains("action") && !j.at("action").is_null()) {
    t.action = action_from_json(j.at("action"));
  }
  t.raw = j.value("raw", "");
  return t;
}

Json outcome_to_json(const Outcome& o) {
  Json j;
  if (const auto* deal = std::get_if<DealOutcome>(&o)) {
    j["kind"] = "deal";
    j["price"] = to_dollars(deal->price);
    if (deal->product) j["product"] = *deal->product;
    if (deal->installment_terms) j["installment_terms"] = *deal->installment_terms;
  } else if (const auto* quit = std::get_if<QuitOutcome>(&o)) {
    j["kind"] = "quit";
    j["by"] = to_string(quit->by);
  } else {
    j["kind"] = "impasse";
    j["reason"] = std::get<ImpasseOutcome>(o).reason;
  }
  return j;
}

Outcome outcome_from_json(const Json& j) {
  const std::string kind = j.value("kind", "");
  if (kind == "deal") {
    DealOutcome deal;
    deal.price = cents_from_dollars_number(j.at("price").get<double>());
    if (j.contains("product") && !j.at("product").is_null()) {
      deal.product = j.at("product").get<std::string>();
    }
    if (j.contains("installment_terms") && !j.at("installment_terms").is_null()) {
      deal.installment_terms = j.at("installment_terms").get<int>();
    }
    return deal;
  }
  if (kind == "quit") return QuitOutcome{role_from_string(j.value("by", "buyer"))};
  if (kind == "impasse") return ImpasseOutcome{j.value("reason", "max_messages")};
  throw ParseError("unknown outcome kind: " + kind);
}

constexpr int kRecordSchemaVersion = 1;

}  // namespace

Json record_to_json(const DialogueRecord& record) {
  Json j;
  j["schema_version"] = kRecordSchemaVersion;
  j["scenario_id"] = record.scenario_id;
  Json turns = Json::array();
  for (const auto& t : record.turns) turns.push_back(turn_to_json(t));
  j["turns"] = turns;
  if (record.outcome) j["outcome"] = outcome_to_json(*record.outcome);
  j["buyer"] = descriptor_to_json(record.buyer);
  j["seller"] = descriptor_to_json(record.seller);
  j["seed"] = record.seed;
  if (!record.violations.empty()) j["violations"] = record.violations;
  if (record.aborted) {
    j["aborted"] = true;
    j["abort_reason"] = record.abort_reason;
  }
  return j;
}

DialogueRecord record_from_json(const Json& j) {
  DialogueRecord record;
  record.scenario_id = j.value("scenario_id", "");
  for (const auto& tj : j.value("turns", Json::array())) {
    record.turns.push_back(turn_from_json(tj));
  }
  if (j.contains("outcome") && !j.at("outcome").is_null()) {
    record.outcome = outcome_from_json(j.at("outcome"));
  }
  if (j.contains("buyer")) record.buyer = descriptor_from_json(j.at("buyer"));
  if (j.contains("seller")) record.seller = descriptor_from_json(j.at("seller"));
  record.seed = j.value("seed", 0ULL);
  for (const auto& v : j.value("violations", Json::array())) {
    record.violations.push_back(v.get<std::string>());
  }
  record.aborted = j.value("aborted", false);
  record.abort_reason = j.value("abort_reason", "");
  return record;
}

std::vector<DialogueRecord> load_records(const std::filesystem::path& path) {
  std::vector<DialogueRecord> records;
  for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      records.push_back(record_from_json(j));
    } catch (const Json::exception& e) {
      throw ParseError(path.filename().string() + " line " +
                       std::to_string(line) + ": " + e.what());
    }
  });
  return records;
}

void save_records(const std::filesystem::path& path,
                  const std::vector<DialogueRecord>& records) {
  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(record_to_json(r).dump());
  write_lines_atomic(path, lines);
}

}  // namespace bargain
