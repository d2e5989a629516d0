#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bargain/money.hpp"
#include "bargain/scenario.hpp"

namespace bargain {

enum class ActionKind { buy, sell, reject, deal, quit };

std::string_view to_string(ActionKind k);
ActionKind action_kind_from_string(std::string_view s);

struct Action {
  ActionKind kind = ActionKind::reject;
  std::optional<Cents> price;            // buy/sell carry one; deal may
  std::optional<std::string> product;    // trailing label, multi mode
  std::optional<int> installment_terms;  // "in N installments" on a deal

  bool operator==(const Action&) const = default;
};

// One bracketed keyword per line, case-insensitive, price from a "$" amount
// with optional thousands separators and up to two decimals. A leading
// "Action:" label is tolerated. Throws ParseError on no keyword, a missing
// required price, or conflicting actions on one line.
Action parse_action(std::string_view line);

// Canonical form: "[BUY] $480", "[DEAL] $1250.50 DSLR Camera",
// "[DEAL] $480 in 3 installments". parse_action(format_action(a)) == a.
std::string format_action(const Action& a);

struct Turn {
  Role role = Role::buyer;
  std::optional<std::string> thought;
  std::string talk;
  // Absent only on the scripted opening line, which carries talk alone.
  std::optional<Action> action;
  std::string raw;
};

// Splits a reply into its labeled Thought / Talk / Action sections. Thought
// may be absent; when labels are missing but an action line exists, Talk is
// the unlabeled remainder. Enforces the per-role action sets (buyers never
// SELL, sellers never BUY).
Turn parse_turn(std::string_view raw, Role role);

// The engine-issued buyer greeting that opens a negotiation.
Turn opening_turn(const Scenario& s);

// "Talk: ...\nAction: ...": the opponent-visible rendering of a turn.
std::string render_turn_public(const Turn& t);

struct Sampling {
  double temperature = 1.0;
  double top_p = 1.0;

  bool operator==(const Sampling&) const = default;
};

enum class Strategy {
  react,
  icl_mf,
  icl_mf_oar,
  react_oar,
  og_narrator,
  scripted_seller,
  replay,
};

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);
bool strategy_needs_model(Strategy s);

struct AgentDescriptor {
  Strategy strategy = Strategy::og_narrator;
  std::optional<std::string> model_id;
  Sampling sampling;

  std::string label() const;  // "react:gpt-4o" or "og-narrator"
};

struct DealOutcome {
  Cents price = 0;
  std::optional<std::string> product;  // resolved product id, multi mode
  std::optional<int> installment_terms;
};
struct QuitOutcome {
  Role by = Role::buyer;
};
struct ImpasseOutcome {
  std::string reason = "max_messages";
};
using Outcome = std::variant<DealOutcome, QuitOutcome, ImpasseOutcome>;

bool is_deal(const Outcome& o);
std::string outcome_label(const Outcome& o);  // "deal" | "quit" | "impasse"

struct DialogueRecord {
  std::string scenario_id;
  std::vector<Turn> turns;
  std::optional<Outcome> outcome;  // absent iff aborted
  AgentDescriptor buyer;
  AgentDescriptor seller;
  std::uint64_t seed = 0;
  std::vector<std::string> violations;  // observed, not enforced
  bool aborted = false;
  std::string abort_reason;
};

// Actioned turns; the scripted greeting does not count toward the budget.
int message_count(const DialogueRecord& record);

Json record_to_json(const DialogueRecord& record);
DialogueRecord record_from_json(const Json& j);
std::vector<DialogueRecord> load_records(const std::filesystem::path& path);
void save_records(const std::filesystem::path& path,
                  const std::vector<DialogueRecord>& records);

struct StandingOffer {
  Cents price = 0;
  std::optional<std::string> product;
};

// Value-semantics state for one negotiation; step() returns the successor.
struct NegotiationState {
  Role expected = Role::buyer;
  std::optional<StandingOffer> buyer_offer;
  std::optional<StandingOffer> seller_offer;
  int messages = 0;  // actioned turns so far
  int max_messages = 20;
  ProductMode mode = ProductMode::single;
  std::optional<std::string> last_named_product;
  std::optional<Outcome> outcome;
  std::vector<std::string> violations;

  // Product identity needed to resolve dealt products and flag below-cost
  // deals without holding the whole scenario.
  struct ProductInfo {
    std::string id;
    std::string lower_name;
    Cents cost = 0;
  };
  std::vector<ProductInfo> products;
  std::string desired_product;

  bool terminal() const { return outcome.has_value(); }
};

NegotiationState initial_state(const Scenario& s);

// Applies one turn: BUY/SELL update that side's standing offer, REJECT keeps
// the opponent's offer standing, DEAL terminates at the stated price (or the
// opponent's standing offer when priceless), QUIT terminates with no deal.
// Hitting max_messages without a deal terminates as an impasse. Throws
// ProtocolError on a turn after a terminal state, a wrong mover, or a
// priceless deal with no standing offer.
NegotiationState step(const NegotiationState& state, const Turn& turn);

struct AnchoringFlag {
  std::size_t turn_index = 0;
  Cents prior_offer = 0;
  Cents new_offer = 0;

  bool operator==(const AnchoringFlag&) const = default;
};

// Every buyer BUY priced strictly below that buyer's own previous BUY,
// the reversed concessions that human bargaining rarely shows.
std::vector<AnchoringFlag> detect_unstable_anchoring(
    const DialogueRecord& record);

class Agent;

// Runs a full negotiation. Opens with the fixed buyer greeting unless
// buyer_first_offer is set (then the buyer's first message must carry a BUY).
// Unparseable replies get one re-prompt with a format reminder; a second
// failure, or a transport failure, marks the record aborted. Deterministic
// given deterministic agents and a fixed seed.
DialogueRecord run_negotiation(const Scenario& s, Agent& buyer, Agent& seller,
                               std::uint64_t seed);

}  // namespace bargain
