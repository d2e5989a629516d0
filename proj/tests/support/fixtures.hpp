#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "bargain/agents.hpp"
#include "bargain/errors.hpp"
#include "bargain/jsonl.hpp"
#include "bargain/protocol.hpp"
#include "bargain/scenario.hpp"

namespace testsupport {

inline std::filesystem::path repo_root() {
  return std::filesystem::path(BARGAIN_REPO_DIR);
}

inline std::filesystem::path fixture_path(const std::string& rel) {
  return repo_root() / "tests" / "fixtures" / rel;
}

inline std::filesystem::path data_path(const std::string& rel) {
  return repo_root() / "data" / rel;
}

inline bargain::Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw bargain::ValidationError("missing file: " + path.string());
  return bargain::Json::parse(in);
}

struct CameraDialogueFixture {
  bargain::Scenario scenario;
  std::vector<std::string> buyer_replies;
  std::vector<std::string> seller_replies;
};

inline CameraDialogueFixture load_camera_fixture() {
  const bargain::Json j = read_json_file(fixture_path("table8.json"));
  CameraDialogueFixture f;
  f.scenario = bargain::scenario_from_json(j.at("scenario"));
  for (const auto& r : j.at("buyer_replies")) {
    f.buyer_replies.push_back(r.get<std::string>());
  }
  for (const auto& r : j.at("seller_replies")) {
    f.seller_replies.push_back(r.get<std::string>());
  }
  return f;
}

// Replays the committed camera dialogue through the engine.
inline bargain::DialogueRecord replay_camera_dialogue(std::uint64_t seed = 42) {
  CameraDialogueFixture f = load_camera_fixture();
  bargain::ReplayAgent buyer(bargain::Role::buyer, f.buyer_replies);
  bargain::ReplayAgent seller(bargain::Role::seller, f.seller_replies);
  return bargain::run_negotiation(f.scenario, buyer, seller, seed);
}

// A second, shorter dialogue on the same scenario, distinct in content from
// the committed one (judge tests need two different transcripts).
inline bargain::DialogueRecord alternate_camera_dialogue(
    std::uint64_t seed = 2) {
  CameraDialogueFixture f = load_camera_fixture();
  bargain::ReplayAgent buyer(
      bargain::Role::buyer,
      {"Thought: Start low and see.\nTalk: Would you take $490?\n"
       "Action: [BUY] $490"});
  bargain::ReplayAgent seller(
      bargain::Role::seller,
      {"Thought: Anchor high.\nTalk: It's premium quality, $530.\n"
       "Action: [SELL] $530",
       "Thought: Good enough.\nTalk: Alright, $490 works.\n"
       "Action: [DEAL] $490"});
  return bargain::run_negotiation(f.scenario, buyer, seller, seed);
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" +
             std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
