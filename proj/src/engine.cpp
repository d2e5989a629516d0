#include "bargain/agents.hpp"
#include "bargain/errors.hpp"
#include "bargain/protocol.hpp"

namespace bargain {

namespace {

const char* format_reminder(Role role) {
  if (role == Role::buyer) {
    return "Your previous reply could not be parsed. Reply with exactly "
           "three labeled parts:\nThought: ...\nTalk: ...\nAction: one of "
           "[BUY] $price, [REJECT], [DEAL] $price, [QUIT]";
  }
  return "Your previous reply could not be parsed. Reply with exactly three "
         "labeled parts:\nThought: ...\nTalk: ...\nAction: one of [SELL] "
         "$price, [REJECT], [DEAL] $price, [QUIT]";
}

const char* first_offer_reminder() {
  return "You open this negotiation, so your first message must carry a "
         "price proposal: Action: [BUY] $price";
}

}  // namespace

DialogueRecord run_negotiation(const Scenario& s, Agent& buyer, Agent& seller,
                               std::uint64_t seed) {
  const auto violations = validate_scenario(s);
  if (!violations.empty()) {
    throw ValidationError("scenario '" + s.id + "': " + violations.front());
  }

  const MeritCoefficients coefficients = default_coefficients();
  const AgentView buyer_view =
      make_agent_view(s, Role::buyer, buyer.descriptor(), coefficients);
  const AgentView seller_view =
      make_agent_view(s, Role::seller, seller.descriptor(), coefficients);

  DialogueRecord record;
  record.scenario_id = s.id;
  record.buyer = buyer.descriptor();
  record.seller = seller.descriptor();
  record.seed = seed;

  NegotiationState state = initial_state(s);

  if (!s.buyer_first_offer) {
    const Turn greeting = opening_turn(s);
    state = step(state, greeting);
    record.turns.push_back(greeting);
  }

  bool first_agent_turn = s.buyer_first_offer;
  while (!state.terminal()) {
    const Role mover = state.expected;
    Agent& agent = mover == Role::buyer ? buyer : seller;
    const AgentView& view = mover == Role::buyer ? buyer_view : seller_view;
    const std::vector<Turn> history = visible_history(record.turns, mover);

    std::optional<Turn> turn;
    std::string reminder;
    for (int attempt = 0; attempt < 2 && !turn; ++attempt) {
      std::string raw;
      try {
        raw = agent.next_turn(view, history, seed, reminder);
      } catch (const TransportError& e) {
        record.aborted = true;
        record.abort_reason = std::string("transport failure: ") + e.what();
        return record;
      }
      try {
        Turn parsed = parse_turn(raw, mover);
        if (first_agent_turn && mover == Role::buyer &&
            parsed.action->kind != ActionKind::buy) {
          reminder = first_offer_reminder();
          continue;
        }
        turn = std::move(parsed);
      } catch (const ParseError&) {
        reminder = format_reminder(mover);
      }
    }
    if (!turn) {
      record.aborted = true;
      record.abort_reason = "persistent parse failure from " +
                            std::string(to_string(mover)) +
                            " after the re-prompt budget";
      return record;
    }

    state = step(state, *turn);
    record.turns.push_back(std::move(*turn));
    first_agent_turn = false;
  }

  record.outcome = state.outcome;
  record.violations = state.violations;
  return record;
}

}  // namespace bargain
