#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <set>
#include <string>
#include <vector>

#include "bargain/preference.hpp"
#include "bargain/protocol.hpp"
#include "bargain/scenario.hpp"

namespace bargain {

// One buyer move: reasoning, utterance, action. The opening line carries the
// utterance alone.
struct BuyerTriple {
  std::optional<std::string> reasoning;
  std::string utterance;
  std::optional<Action> action;

  bool operator==(const BuyerTriple&) const = default;
};

// One seller move as the buyer saw it: utterance and action, no thought.
struct SellerPair {
  std::string utterance;
  std::optional<Action> action;

  bool operator==(const SellerPair&) const = default;
};

// Predict buyer turn t from the alternating history through seller turn t-1.
struct SftExample {
  std::string system_prompt;
  std::vector<std::pair<BuyerTriple, SellerPair>> history;  // (b_i, s_i), i < t
  BuyerTriple target;                                       // b_t
  std::string dialogue_id;
  int turn_index = 0;

  bool operator==(const SftExample&) const = default;
};

// Copy of the record with seller thoughts removed: seller turns keep talk
// and action only, and their raw text is re-rendered without the thought.
// Buyer turns are untouched. Idempotent.
DialogueRecord strip_seller_thoughts(const DialogueRecord& record);

// One example per buyer turn. Requires a record that starts with a buyer
// turn and alternates strictly; throws ValidationError otherwise. Feed it
// a stripped record; it refuses seller thoughts outright.
std::vector<SftExample> build_sft_examples(const DialogueRecord& record,
                                           const std::string& system_prompt);
std::vector<SftExample> build_sft_examples(const DialogueRecord& record,
                                           const Scenario& s);

struct PreferredFilterRule {
  int min_wins = 1;
  // When false, any dialogue with at least min_wins is retained even if it
  // also lost comparisons.
  bool wins_must_exceed_losses = true;
};

// The dialogues chosen by the pairs under the rule. When known_ids is given,
// a reference outside it throws ValidationError.
std::set<std::string> filter_preferred(
    std::span<const PreferencePair> pairs,
    const PreferredFilterRule& rule = {},
    const std::set<std::string>* known_ids = nullptr);

// One chat-format line per example: the buyer scenario prompt as the system
// message, seller pairs as user messages, buyer triples as assistant
// messages, the target last. Writes a manifest next to the file. Returns
// the number of records written.
std::size_t export_training_file(std::span<const SftExample> examples,
                                 const std::filesystem::path& path);

std::vector<SftExample> import_training_file(const std::filesystem::path& path);

Json sft_example_to_json(const SftExample& e);
SftExample sft_example_from_json(const Json& j);

}  // namespace bargain
