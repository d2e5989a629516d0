#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bargain/errors.hpp"
#include "bargain/rng.hpp"
#include "bargain/sft.hpp"
#include "support/fixtures.hpp"

using namespace bargain;

TEST_CASE("strip_seller_thoughts removes every trace, idempotently") {
  const DialogueRecord original = testsupport::replay_camera_dialogue();

  // The fixture genuinely carries seller thoughts.
  std::vector<std::string> seller_thoughts;
  for (const auto& t : original.turns) {
    if (t.role == Role::seller && t.thought) seller_thoughts.push_back(*t.thought);
  }
  REQUIRE_FALSE(seller_thoughts.empty());

  const DialogueRecord stripped = strip_seller_thoughts(original);
  for (const auto& t : stripped.turns) {
    if (t.role == Role::seller) {
      CHECK_FALSE(t.thought.has_value());
      for (const auto& thought : seller_thoughts) {
        CHECK(t.raw.find(thought) == std::string::npos);
      }
      CHECK_FALSE(t.talk.empty());
      CHECK(t.action.has_value());
    } else {
      // Buyer turns are untouched.
      CHECK(t.raw == original.turns[&t - stripped.turns.data()].raw);
    }
  }

  const DialogueRecord twice = strip_seller_thoughts(stripped);
  CHECK(record_to_json(twice).dump() == record_to_json(stripped).dump());

  // The original is untouched.
  CHECK(original.turns[1].thought.has_value());
}

TEST_CASE("the camera dialogue yields one example per buyer turn") {
  const DialogueRecord stripped =
      strip_seller_thoughts(testsupport::replay_camera_dialogue());
  const auto examples = build_sft_examples(stripped, "SYSTEM");
  REQUIRE(examples.size() == 5);  // greeting plus four offers

  // t = 0: empty history, the greeting is the target.
  CHECK(examples[0].history.empty());
  CHECK(examples[0].target.utterance == "Hi, I wanna buy a nice Camera.");
  CHECK_FALSE(examples[0].target.action.has_value());

  // t = 2: history is [b0, s0, b1, s1], ending with the seller pair s1.
  REQUIRE(examples[2].history.size() == 2);
  const auto& [b1, s1] = examples[2].history[1];
  CHECK(b1.action->price == dollars(480));
  CHECK(s1.action->kind == ActionKind::sell);
  CHECK(s1.action->price == dollars(515));
  CHECK(examples[2].target.action->price == dollars(475));

  // The final seller DEAL turn belongs to no example.
  for (const auto& e : examples) {
    for (const auto& [b, s] : e.history) {
      CHECK(s.action->kind != ActionKind::deal);
    }
  }

  CHECK(examples[4].turn_index == 4);
  CHECK(examples[4].target.action->price == dollars(480));
}

TEST_CASE("single-turn record gives one example with empty history") {
  DialogueRecord record;
  record.scenario_id = "quick-quit";
  Turn t;
  t.role = Role::buyer;
  t.thought = "not worth it";
  t.talk = "I'll pass.";
  t.action = Action{ActionKind::quit, std::nullopt, std::nullopt, std::nullopt};
  t.raw = "Thought: not worth it\nTalk: I'll pass.\nAction: [QUIT]";
  record.turns.push_back(t);
  record.outcome = QuitOutcome{Role::buyer};

  const auto examples = build_sft_examples(record, "SYSTEM");
  REQUIRE(examples.size() == 1);
  CHECK(examples[0].history.empty());
  CHECK(examples[0].target.reasoning == std::optional<std::string>("not worth it"));
}

TEST_CASE("non-alternating or unstripped records are rejected") {
  DialogueRecord record = testsupport::replay_camera_dialogue();

  SUBCASE("seller thoughts still present") {
    CHECK_THROWS_AS(build_sft_examples(record, "SYSTEM"), ValidationError);
  }
  SUBCASE("seller-first record") {
    DialogueRecord stripped = strip_seller_thoughts(record);
    stripped.turns.erase(stripped.turns.begin());
    CHECK_THROWS_AS(build_sft_examples(stripped, "SYSTEM"), ValidationError);
  }
  SUBCASE("empty record") {
    DialogueRecord empty;
    CHECK_THROWS_AS(build_sft_examples(empty, "SYSTEM"), ValidationError);
  }
}

TEST_CASE("filter_preferred applies the majority rule") {
  auto pair_ref = [](const std::string& first, const std::string& second,
                     int choice) {
    PreferencePair p;
    p.b1 = {0.5, 0.5, 0.5};
    p.b2 = {0.4, 0.4, 0.4};
    p.choice = choice;
    p.dialogues = {first, second};
    return p;
  };

  SUBCASE("single pair keeps the chosen dialogue") {
    const std::vector<PreferencePair> pairs{pair_ref("d1", "d2", 1)};
    const auto kept = filter_preferred(pairs);
    CHECK(kept == std::set<std::string>{"d1"});
  }
  SUBCASE("three wins one loss survives the majority rule") {
    const std::vector<PreferencePair> pairs{
        pair_ref("d1", "d2", 1), pair_ref("d1", "d3", 1),
        pair_ref("d1", "d4", 1), pair_ref("d5", "d1", 1)};
    const auto kept = filter_preferred(pairs);
    CHECK(kept.count("d1") == 1);
    // d5 won its only pair.
    CHECK(kept.count("d5") == 1);
    CHECK(kept.count("d2") == 0);
  }
  SUBCASE("even record fails the strict-majority default") {
    const std::vector<PreferencePair> pairs{pair_ref("d1", "d2", 1),
                                            pair_ref("d2", "d1", 1)};
    CHECK(filter_preferred(pairs).empty());
    PreferredFilterRule lenient;
    lenient.wins_must_exceed_losses = false;
    CHECK(filter_preferred(pairs, lenient) ==
          std::set<std::string>{"d1", "d2"});
  }
  SUBCASE("empty pair list keeps nothing") {
    CHECK(filter_preferred({}).empty());
  }
  SUBCASE("dangling references are rejected when ids are known") {
    const std::vector<PreferencePair> pairs{pair_ref("d1", "ghost", 1)};
    const std::set<std::string> known{"d1", "d2"};
    CHECK_THROWS_AS(filter_preferred(pairs, {}, &known), ValidationError);
  }
}

TEST_CASE("export writes chat-format lines and a manifest") {
  testsupport::TempDir tmp("sft");
  const DialogueRecord original = testsupport::replay_camera_dialogue();
  const DialogueRecord stripped = strip_seller_thoughts(original);
  auto examples = build_sft_examples(stripped, "BUYER SYSTEM PROMPT");
  for (auto& e : examples) e.dialogue_id = "camera-table8#42";

  const std::size_t written =
      export_training_file(examples, tmp.file("train.jsonl"));
  CHECK(written == 5);

  // Five lines, labeled target, no seller thought text anywhere.
  std::vector<std::string> seller_thoughts;
  for (const auto& t : original.turns) {
    if (t.role == Role::seller && t.thought) seller_thoughts.push_back(*t.thought);
  }
  const auto lines = read_jsonl(tmp.file("train.jsonl"));
  REQUIRE(lines.size() == 5);
  for (const auto& line : lines) {
    const std::string text = line.dump();
    for (const auto& thought : seller_thoughts) {
      CHECK(text.find(Json(thought).dump().substr(1, 12)) == std::string::npos);
    }
    const auto& final_message = line.at("messages").back();
    CHECK(final_message.at("role") == "assistant");
  }
  const std::string last_target =
      lines[4].at("messages").back().at("content").get<std::string>();
  CHECK(last_target.find("Thought: ") != std::string::npos);
  CHECK(last_target.find("Talk: ") != std::string::npos);
  CHECK(last_target.find("Action: [BUY] $480") != std::string::npos);

  // Manifest carries the recorded fine-tuning recipe.
  const Json manifest =
      testsupport::read_json_file(tmp.file("train.jsonl.manifest.json"));
  CHECK(manifest.at("examples") == 5);
  CHECK(manifest.at("recommended_finetune").at("learning_rate") == 2e-4);
  CHECK(manifest.at("recommended_finetune").at("lora_r") == 16);
  CHECK(manifest.at("recommended_finetune").at("lora_alpha") == 32);
  CHECK(manifest.at("recommended_finetune").at("lora_dropout") == 0.05);
  CHECK(manifest.at("source_dialogues")[0] == "camera-table8#42");

  // Lossless re-import.
  const auto reimported = import_training_file(tmp.file("train.jsonl"));
  REQUIRE(reimported.size() == examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    CHECK(reimported[i] == examples[i]);
  }
}

TEST_CASE("example count always equals the buyer-turn count") {
  bargain::SplitMix64 rng(606);
  for (int trial = 0; trial < 50; ++trial) {
    DialogueRecord record;
    record.scenario_id = "gen";
    const int buyer_turns = static_cast<int>(rng.uniform_int(1, 8));
    const bool ends_with_seller = rng.coin_flip();
    const int total = 2 * buyer_turns - (ends_with_seller ? 0 : 1);
    for (int i = 0; i < total; ++i) {
      Turn t;
      t.role = i % 2 == 0 ? Role::buyer : Role::seller;
      t.talk = "turn " + std::to_string(i);
      t.action = Action{
          t.role == Role::buyer ? ActionKind::buy : ActionKind::sell,
          dollars(rng.uniform_int(1, 900)), std::nullopt, std::nullopt};
      record.turns.push_back(t);
    }
    const auto examples = build_sft_examples(record, "SYS");
    CHECK(static_cast<int>(examples.size()) == buyer_turns);
    for (const auto& e : examples) {
      CHECK(static_cast<int>(e.history.size()) == e.turn_index);
    }
  }
}

TEST_CASE("training rows alternate assistant/user after the system prompt") {
  const DialogueRecord stripped =
      strip_seller_thoughts(testsupport::replay_camera_dialogue());
  const auto examples = build_sft_examples(stripped, "SYS");
  const Json j = sft_example_to_json(examples[3]);
  const auto& messages = j.at("messages");
  REQUIRE(messages.size() == 2 + 2 * 3);  // system + 3 (b, s) pairs + target
  CHECK(messages[0].at("role") == "system");
  for (std::size_t i = 1; i < messages.size(); ++i) {
    CHECK(messages[i].at("role") == (i % 2 == 1 ? "assistant" : "user"));
  }
}
