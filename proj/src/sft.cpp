#include "bargain/sft.hpp"

#include <map>
#include <sstream>

#include "bargain/errors.hpp"

namespace bargain {

DialogueRecord strip_seller_thoughts(const DialogueRecord& record) {
  DialogueRecord out = record;
  for (Turn& t : out.turns) {
    if (t.role != Role::seller) continue;
    t.thought.reset();
    t.raw = render_turn_public(t);
  }
  return out;
}

namespace {

std::string render_buyer_triple(const BuyerTriple& b) {
  std::string out;
  if (b.reasoning) out += "Thought: " + *b.reasoning + "\n";
  out += "Talk: " + b.utterance;
  if (b.action) out += "\nAction: " + format_action(*b.action);
  return out;
}

std::string render_seller_pair(const SellerPair& s) {
  std::string out = "Talk: " + s.utterance;
  if (s.action) out += "\nAction: " + format_action(*s.action);
  return out;
}

BuyerTriple parse_buyer_triple(const std::string& text) {
  BuyerTriple b;
  if (text.find("Action:") != std::string::npos ||
      text.find("Thought:") != std::string::npos) {
    const Turn t = parse_turn(text, Role::buyer);
    b.reasoning = t.thought;
    b.utterance = t.talk;
    b.action = t.action;
  } else {
    // Opening line: bare talk, possibly labeled.
    std::string body = text;
    if (body.rfind("Talk: ", 0) == 0) body = body.substr(6);
    b.utterance = body;
  }
  return b;
}

SellerPair parse_seller_pair(const std::string& text) {
  const Turn t = parse_turn(text, Role::seller);
  return {t.talk, t.action};
}

}  // namespace

std::vector<SftExample> build_sft_examples(const DialogueRecord& record,
                                           const std::string& system_prompt) {
  if (record.turns.empty()) {
    throw ValidationError("cannot build training examples from an empty record");
  }
  for (std::size_t i = 0; i < record.turns.size(); ++i) {
    const Role expected = i % 2 == 0 ? Role::buyer : Role::seller;
    if (record.turns[i].role != expected) {
      throw ValidationError("record does not alternate starting with the "
                            "buyer (turn " + std::to_string(i) + ")");
    }
    if (record.turns[i].role == Role::seller && record.turns[i].thought) {
      throw ValidationError("record still carries seller thoughts; strip "
                            "them before building training examples");
    }
  }

  std::vector<std::pair<BuyerTriple, SellerPair>> history;
  std::vector<SftExample> examples;
  for (std::size_t i = 0; i < record.turns.size(); i += 2) {
    const Turn& buyer_turn = record.turns[i];
    BuyerTriple target{buyer_turn.thought, buyer_turn.talk, buyer_turn.action};

    SftExample example;
    example.system_prompt = system_prompt;
    example.history = history;
    example.target = target;
    example.dialogue_id = record.scenario_id;
    example.turn_index = static_cast<int>(i / 2);
    examples.push_back(std::move(example));

    if (i + 1 < record.turns.size()) {
      const Turn& seller_turn = record.turns[i + 1];
      history.emplace_back(std::move(target),
                           SellerPair{seller_turn.talk, seller_turn.action});
    }
  }
  return examples;
}

std::vector<SftExample> build_sft_examples(const DialogueRecord& record,
                                           const Scenario& s) {
  return build_sft_examples(record, render_system_prompt(s, Role::buyer));
}

std::set<std::string> filter_preferred(std::span<const PreferencePair> pairs,
                                       const PreferredFilterRule& rule,
                                       const std::set<std::string>* known_ids) {
  std::map<std::string, std::pair<int, int>> tally;  // id -> (wins, losses)
  for (const auto& p : pairs) {
    if (p.dialogues[0].empty() || p.dialogues[1].empty()) {
      throw ValidationError("preference pair lacks dialogue references");
    }
    for (const auto& id : p.dialogues) {
      if (known_ids && !known_ids->count(id)) {
        throw ValidationError("dangling dialogue reference '" + id + "'");
      }
    }
    const std::string& winner = p.dialogues[p.choice == 1 ? 0 : 1];
    const std::string& loser = p.dialogues[p.choice == 1 ? 1 : 0];
    ++tally[winner].first;
    ++tally[loser].second;
  }

  std::set<std::string> preferred;
  for (const auto& [id, record] : tally) {
    const auto [wins, losses] = record;
    if (wins < rule.min_wins) continue;
    if (rule.wins_must_exceed_losses && wins <= losses) continue;
    preferred.insert(id);
  }
  return preferred;
}

Json sft_example_to_json(const SftExample& e) {
  Json messages = Json::array();
  messages.push_back({{"role", "system"}, {"content", e.system_prompt}});
  for (const auto& [buyer, seller] : e.history) {
    messages.push_back(
        {{"role", "assistant"}, {"content", render_buyer_triple(buyer)}});
    messages.push_back(
        {{"role", "user"}, {"content", render_seller_pair(seller)}});
  }
  messages.push_back(
      {{"role", "assistant"}, {"content", render_buyer_triple(e.target)}});
  Json j;
  j["messages"] = messages;
  j["provenance"] = {{"dialogue_id", e.dialogue_id},
                     {"turn_index", e.turn_index}};
  return j;
}

SftExample sft_example_from_json(const Json& j) {
  SftExample e;
  const auto& messages = j.at("messages");
  if (messages.empty() || messages[0].value("role", "") != "system") {
    throw ParseError("training record must open with a system message");
  }
  e.system_prompt = messages[0].value("content", "");

  std::vector<std::string> assistant_texts;
  std::vector<std::string> user_texts;
  for (std::size_t i = 1; i < messages.size(); ++i) {
    const std::string role = messages[i].value("role", "");
    const std::string content = messages[i].value("content", "");
    const bool assistant_expected = i % 2 == 1;
    if (assistant_expected && role != "assistant") {
      throw ParseError("training record does not alternate assistant/user");
    }
    if (!assistant_expected && role != "user") {
      throw ParseError("training record does not alternate assistant/user");
    }
    (assistant_expected ? assistant_texts : user_texts).push_back(content);
  }
  if (assistant_texts.empty() || assistant_texts.size() != user_texts.size() + 1) {
    throw ParseError("training record must end with the buyer's turn");
  }

  for (std::size_t i = 0; i < user_texts.size(); ++i) {
    e.history.emplace_back(parse_buyer_triple(assistant_texts[i]),
                           parse_seller_pair(user_texts[i]));
  }
  e.target = parse_buyer_triple(assistant_texts.back());

  if (j.contains("provenance")) {
    e.dialogue_id = j.at("provenance").value("dialogue_id", "");
    e.turn_index = j.at("provenance").value("turn_index", 0);
  }
  return e;
}

namespace {

// Recommended fine-tuning recipe recorded alongside every export; training
// itself happens in external tooling.
Json finetune_recipe() {
  return Json{{"method", "sft-lora"},
              {"learning_rate", 2e-4},
              {"per_device_batch_size", 2},
              {"gradient_accumulation_steps", 8},
              {"max_seq_len", 2048},
              {"warmup_ratio", 0.03},
              {"lr_schedule", "cosine"},
              {"seed", 42},
              {"precision", "bf16"},
              {"lora_r", 16},
              {"lora_alpha", 32},
              {"lora_dropout", 0.05},
              {"target_modules",
               Json::array({"q_proj", "k_proj", "v_proj", "o_proj"})}};
}

}  // namespace

std::size_t export_training_file(std::span<const SftExample> examples,
                                 const std::filesystem::path& path) {
  std::vector<std::string> lines;
  lines.reserve(examples.size());
  std::set<std::string> sources;
  for (const auto& e : examples) {
    lines.push_back(sft_example_to_json(e).dump());
    sources.insert(e.dialogue_id);
  }
  write_lines_atomic(path, lines);

  Json manifest;
  manifest["training_file"] = path.filename().string();
  manifest["examples"] = examples.size();
  manifest["source_dialogues"] = Json(sources);
  manifest["recommended_finetune"] = finetune_recipe();
  write_text_atomic(path.string() + ".manifest.json", manifest.dump(2) + "\n");
  return lines.size();
}

std::vector<SftExample> import_training_file(
    const std::filesystem::path& path) {
  std::vector<SftExample> examples;
  for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      examples.push_back(sft_example_from_json(j));
    } catch (const Json::exception& e) {
      throw ParseError(path.filename().string() + " line " +
                       std::to_string(line) + ": " + e.what());
    }
  });
  return examples;
}

}  // namespace bargain
