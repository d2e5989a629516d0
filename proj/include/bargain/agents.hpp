#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bargain/client.hpp"
#include "bargain/metrics.hpp"
#include "bargain/protocol.hpp"
#include "bargain/scenario.hpp"

namespace bargain {

// What one side is allowed to see. The buyer view never carries costs; the
// seller view never carries the buyer's willingness to pay.
struct VisibleProduct {
  std::string id;
  std::string name;
  Cents initial_price = 0;
  std::vector<std::string> features;
  std::optional<Cents> wtp;   // buyer view only
  std::optional<Cents> cost;  // seller view only
};

struct AgentView {
  Role role = Role::buyer;
  std::string system_prompt;
  ProductMode mode = ProductMode::single;
  std::string category;
  std::string desired_product;
  int max_messages = 20;
  bool buyer_first_offer = false;
  std::vector<VisibleProduct> products;
  std::optional<MeritCoefficients> coefficients;  // ICL-MF only
};

AgentView make_agent_view(const Scenario& s, Role role,
                          const AgentDescriptor& desc,
                          const MeritCoefficients& coefficients);

// History as handed to an agent: thoughts survive only on that agent's own
// turns; opponent turns keep talk and action alone.
std::vector<Turn> visible_history(const std::vector<Turn>& turns, Role role);

class Agent {
 public:
  virtual ~Agent() = default;
  virtual const AgentDescriptor& descriptor() const = 0;
  // Raw reply text for the next move. `reminder` is nonempty only on the
  // single retry the engine grants after an unparseable reply.
  virtual std::string next_turn(const AgentView& view,
                                const std::vector<Turn>& history,
                                std::uint64_t seed,
                                std::string_view reminder = {}) = 0;
};

// Scheduled price for the k-th of n planned offers: linear from 50% to 100%
// of budget, rounded to whole currency units. Requires n >= 2, 0 <= k < n.
Cents og_narrator_offer(Cents budget, int k, int n);

// Open-loop price-schedule buyer. Accepts any standing seller offer at or
// below its next scheduled price by dealing at the seller's price; quits
// once the schedule is exhausted. n defaults to half the message budget.
class OgNarratorBuyer : public Agent {
 public:
  explicit OgNarratorBuyer(std::optional<int> planned_offers = std::nullopt);
  const AgentDescriptor& descriptor() const override { return descriptor_; }
  std::string next_turn(const AgentView& view, const std::vector<Turn>& history,
                        std::uint64_t seed, std::string_view reminder) override;

 private:
  AgentDescriptor descriptor_;
  std::optional<int> planned_offers_;
};

// Deterministic opponent: k-th counter-offer on a geometric descent from the
// initial ask toward cost*(1+floor_margin). Accepts any buyer offer at or
// above that floor, refuses offers below cost, and never sells below cost.
Action scripted_seller_offer(Cents initial, Cents cost, int k,
                             double floor_margin,
                             std::optional<Cents> buyer_offer = std::nullopt,
                             double decay = 0.5);

class ScriptedSeller : public Agent {
 public:
  explicit ScriptedSeller(double floor_margin = 0.1, double decay = 0.5);
  const AgentDescriptor& descriptor() const override { return descriptor_; }
  std::string next_turn(const AgentView& view, const std::vector<Turn>& history,
                        std::uint64_t seed, std::string_view reminder) override;

 private:
  AgentDescriptor descriptor_;
  double floor_margin_;
  double decay_;
};

// Plays back a fixed list of raw replies, one per call.
class ReplayAgent : public Agent {
 public:
  ReplayAgent(Role role, std::vector<std::string> replies);
  const AgentDescriptor& descriptor() const override { return descriptor_; }
  std::string next_turn(const AgentView& view, const std::vector<Turn>& history,
                        std::uint64_t seed, std::string_view reminder) override;

 private:
  AgentDescriptor descriptor_;
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

// Reward-function preamble that embeds the merit formula in the buyer's
// prompt. The multi-product variant adds the similarity clause; the single
// variant pins AR = 1.
std::string build_icl_mf_prompt(const AgentView& view,
                                const MeritCoefficients& c, ProductMode mode);

// Three-question opponent-analysis preamble.
std::string build_oar_prompt();

// Prepends the opponent-analysis preamble; throws ValidationError when the
// text already carries it.
std::string compose_with_oar(std::string_view strategy_prompt);

// Full system prompt for a strategy: scenario role prompt, plus the ICL-MF
// preamble and/or the opponent-analysis preamble where the strategy asks.
std::string build_strategy_prompt(const Scenario& s, Role role,
                                  Strategy strategy,
                                  const MeritCoefficients& c);

// Remote-model agent. Maps history to chat messages (own turns verbatim as
// assistant messages, opponent turns as talk+action user messages) and
// returns the completion text.
class LlmAgent : public Agent {
 public:
  LlmAgent(AgentDescriptor desc, ChatClient& client);
  const AgentDescriptor& descriptor() const override { return descriptor_; }
  std::string next_turn(const AgentView& view, const std::vector<Turn>& history,
                        std::uint64_t seed, std::string_view reminder) override;

  static ChatRequest build_request(const AgentDescriptor& desc,
                                   const AgentView& view,
                                   const std::vector<Turn>& history,
                                   std::string_view reminder);

 private:
  AgentDescriptor descriptor_;
  ChatClient& client_;
};

// Per-provider sampling defaults: temperature 1 everywhere; top_p 0.95 for
// gemini-family model ids, 1.0 otherwise.
Sampling default_sampling(const std::string& model_id);

// Builds an agent for a descriptor. Scripted strategies need no client;
// remote strategies require one and a model id.
std::unique_ptr<Agent> make_agent(const AgentDescriptor& desc,
                                  ChatClient* client);

struct OarCount {
  int total_sentences = 0;
  int oar_sentences = 0;
};

// Counts buyer-thought sentences that reason about the opponent's hidden
// cost, profit, or next move. The default detector is a transparent keyword
// rule; pass a classifier to override it.
OarCount count_opponent_aware_sentences(
    const DialogueRecord& record,
    const std::function<bool(const std::string&)>& classifier = nullptr);

}  // namespace bargain
