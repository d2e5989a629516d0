#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "bargain/evaluation.hpp"
#include "bargain/jsonl.hpp"
#include "bargain/preference.hpp"
#include "bargain/protocol.hpp"
#include "cli.hpp"
#include "support/fixtures.hpp"
#include "support/synthetic.hpp"

using namespace bargain;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = bargain::cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string camera_scenario_path(testsupport::TempDir& tmp) {
  const auto fixture = testsupport::load_camera_fixture();
  save_scenarios(tmp.file("scenarios.jsonl"), {fixture.scenario});
  return tmp.file("scenarios.jsonl").string();
}

}  // namespace

TEST_CASE("validate: clean fixture exits 0, violations exit 1") {
  testsupport::TempDir tmp("cli-validate");
  const std::string good = camera_scenario_path(tmp);
  const CliResult ok = run_cli({"validate", "--scenarios", good});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("1 scenarios, 0 problems") != std::string::npos);

  {
    std::ofstream out(tmp.file("bad.jsonl"));
    out << R"({"id":"broken","market":{"regime":"vanilla","product_mode":"single"},"products":[{"id":"x","name":"X","cost":600,"wtp":550,"initial_price":700}],"desired_product":"x"})"
        << "\n";
  }
  const CliResult bad =
      run_cli({"validate", "--scenarios", tmp.file("bad.jsonl").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("cost < wtp") != std::string::npos);
}

TEST_CASE("run: offline negotiation per scenario, deterministic") {
  testsupport::TempDir tmp("cli-run");
  const std::string scenarios = camera_scenario_path(tmp);
  const std::vector<std::string> args{
      "run", "--scenarios", scenarios, "--buyer-strategy", "og-narrator",
      "--seller-strategy", "scripted-seller", "--seed", "5"};
  const CliResult first = run_cli(args);
  REQUIRE(first.code == 0);
  const CliResult second = run_cli(args);
  CHECK(first.out == second.out);

  const Json record = Json::parse(first.out.substr(0, first.out.find('\n')));
  CHECK(record.at("scenario_id") == "camera-table8");
  CHECK(record.at("outcome").at("kind") == "deal");
}

TEST_CASE("score: per-dialogue breakdown lines") {
  testsupport::TempDir tmp("cli-score");
  const std::string scenarios = camera_scenario_path(tmp);
  save_records(tmp.file("dialogues.jsonl"),
               {testsupport::replay_camera_dialogue()});

  const CliResult result = run_cli({"score", "--dialogues",
                                    tmp.file("dialogues.jsonl").string(),
                                    "--scenarios", scenarios,
                                    "--coeffs", "default"});
  REQUIRE(result.code == 0);
  const Json line = Json::parse(result.out.substr(0, result.out.find('\n')));
  CHECK(line.at("dealt") == true);
  CHECK(line.at("cs") == doctest::Approx(0.2));
  CHECK(line.at("merit").get<double>() > 0);
}

TEST_CASE("fit: synthetic pairs produce a scaled sum of three") {
  testsupport::TempDir tmp("cli-fit");
  const auto pairs =
      testsupport::synthetic_pairs({1.0139, 0.8812, 1.1049}, 1200, 42);
  save_preference_pairs(tmp.file("synthetic.jsonl"), pairs);

  const CliResult result =
      run_cli({"fit", "--pairs", tmp.file("synthetic.jsonl").string()});
  REQUIRE(result.code == 0);
  const Json j = Json::parse(result.out);
  CHECK(j.at("scaled_sum").get<double>() == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(j.at("converged") == true);

  const CliResult table =
      run_cli({"fit", "--pairs", tmp.file("synthetic.jsonl").string(),
               "--format", "table"});
  CHECK(table.out.find("(sum 3.000)") != std::string::npos);
}

TEST_CASE("campaign: table report with merit-over-rate cells, reruns identical") {
  testsupport::TempDir tmp("cli-campaign");
  const std::string scenarios = camera_scenario_path(tmp);
  const std::vector<std::string> args{
      "campaign", "--scenarios", scenarios, "--runs-per-item", "3",
      "--seed", "11", "--format", "table"};
  const CliResult first = run_cli(args);
  REQUIRE(first.code == 0);
  CHECK(first.out.find("vanilla/single") != std::string::npos);
  CHECK(first.out.find("og-narrator") != std::string::npos);
  CHECK(first.out.find('%') != std::string::npos);

  const CliResult second = run_cli(args);
  CHECK(first.out == second.out);
}

TEST_CASE("campaign: results directory layout") {
  testsupport::TempDir tmp("cli-campaign-out");
  const std::string scenarios = camera_scenario_path(tmp);
  const std::string out_dir = tmp.file("results").string();
  const CliResult result =
      run_cli({"campaign", "--scenarios", scenarios, "--runs-per-item", "2",
               "--seed", "3", "--out", out_dir});
  REQUIRE(result.code == 0);
  CHECK(std::filesystem::exists(out_dir + "/dialogues.jsonl"));
  CHECK(std::filesystem::exists(out_dir + "/summary.json"));
  CHECK(std::filesystem::exists(out_dir + "/report.json"));
  CHECK(load_records(out_dir + "/dialogues.jsonl").size() == 2);

  const CliResult table =
      run_cli({"campaign", "--scenarios", scenarios, "--runs-per-item", "2",
               "--seed", "3", "--out", out_dir, "--format", "table"});
  REQUIRE(table.code == 0);
  CHECK(std::filesystem::exists(out_dir + "/report.txt"));
}

TEST_CASE("audit: reversed concessions land in the output") {
  testsupport::TempDir tmp("cli-audit");
  save_records(tmp.file("dialogues.jsonl"),
               {testsupport::replay_camera_dialogue()});
  const CliResult result = run_cli(
      {"audit", "--dialogues", tmp.file("dialogues.jsonl").string()});
  REQUIRE(result.code == 0);
  const Json j = Json::parse(result.out.substr(0, result.out.find('\n')));
  REQUIRE(j.at("reversed_concessions").size() == 2);
  CHECK(j.at("reversed_concessions")[0].at("new_offer") == 475.0);
  CHECK(j.at("reversed_concessions")[1].at("new_offer") == 450.0);

  // The audit closes with the turn statistics.
  const auto last_line_start = result.out.rfind('\n', result.out.size() - 2);
  const Json stats = Json::parse(result.out.substr(last_line_start + 1));
  CHECK(stats.at("turn_statistics").at("mean_messages") == 9.0);
  CHECK(stats.at("turn_statistics").at("by_outcome").at("deal").at("count") ==
        1);
}

TEST_CASE("export-sft: writes the training file and manifest") {
  testsupport::TempDir tmp("cli-sft");
  const std::string scenarios = camera_scenario_path(tmp);
  save_records(tmp.file("dialogues.jsonl"),
               {testsupport::replay_camera_dialogue()});
  const std::string out = tmp.file("train.jsonl").string();
  const CliResult result =
      run_cli({"export-sft", "--dialogues", tmp.file("dialogues.jsonl").string(),
               "--scenarios", scenarios, "--out", out});
  REQUIRE(result.code == 0);
  CHECK(result.out.find("5 examples") != std::string::npos);
  CHECK(read_jsonl(out).size() == 5);
  CHECK(std::filesystem::exists(out + ".manifest.json"));
}

TEST_CASE("judge: replayed fixture produces a stable winner") {
  testsupport::TempDir tmp("cli-judge");
  testsupport::TempDir fixtures("cli-judge-fixtures");

  DialogueRecord a = testsupport::replay_camera_dialogue(1);
  DialogueRecord b = testsupport::alternate_camera_dialogue(2);
  save_records(tmp.file("dialogues.jsonl"), {a, b});

  // Seed the replay store with a reply for both presentation orders, both
  // naming dialogue A as the winner.
  ReplayClient store(fixtures.path());
  const Judge judge{&store, "judge-model", default_sampling("judge-model")};
  store.store(build_judge_request(a, b, judge), "{Q1:Negotiation1}");
  store.store(build_judge_request(b, a, judge), "{Q1:Negotiation2}");

  const CliResult result = run_cli(
      {"judge", "--dialogues", tmp.file("dialogues.jsonl").string(),
       "--model", "judge-model", "--replay-dir", fixtures.path().string(),
       "--seed", "0"});
  REQUIRE(result.code == 0);
  const Json verdict = Json::parse(result.out);
  CHECK(verdict.at("winner") == "A");
}

TEST_CASE("campaign: config file replaces the shape flags") {
  testsupport::TempDir tmp("cli-campaign-config");
  const std::string scenarios = camera_scenario_path(tmp);
  {
    std::ofstream out(tmp.file("campaign.json"));
    out << R"({"buyers": [{"strategy": "og-narrator"}],
               "seller": {"strategy": "scripted-seller"},
               "runs_per_item": 2, "seed": 9, "concurrency": 1})";
  }
  const CliResult result =
      run_cli({"campaign", "--scenarios", scenarios, "--config",
               tmp.file("campaign.json").string()});
  REQUIRE(result.code == 0);
  const Json summary = Json::parse(result.out);
  CHECK(summary.at("summaries")[0].at("trials") == 2);
}

TEST_CASE("campaign: market filter keeps only the named cells") {
  const std::string scenarios =
      testsupport::data_path("scenarios/benchmark.jsonl").string();
  const CliResult result =
      run_cli({"campaign", "--scenarios", scenarios, "--runs-per-item", "1",
               "--seed", "1", "--markets", "deceptive/multi"});
  REQUIRE(result.code == 0);
  const Json summary = Json::parse(result.out);
  REQUIRE(summary.at("summaries").size() == 1);
  CHECK(summary.at("summaries")[0].at("market").at("regime") == "deceptive");
  CHECK(summary.at("summaries")[0].at("item_means").size() == 9);
}

TEST_CASE("run: buyer-first anchoring variant opens with an offer") {
  const std::string scenarios =
      testsupport::data_path("scenarios/anchoring.jsonl").string();
  const CliResult result =
      run_cli({"run", "--scenarios", scenarios, "--seed", "4"});
  REQUIRE(result.code == 0);
  std::istringstream lines(result.out);
  std::string line;
  int buyer_first_records = 0;
  while (std::getline(lines, line)) {
    const Json record = Json::parse(line);
    const auto& first_turn = record.at("turns")[0];
    if (record.at("scenario_id").get<std::string>().find("buyer-first") !=
        std::string::npos) {
      ++buyer_first_records;
      CHECK(first_turn.at("action").at("kind") == "buy");
    } else {
      CHECK(first_turn.at("talk") == "Hi, I wanna buy a nice Camera.");
      CHECK_FALSE(first_turn.contains("action"));
    }
  }
  CHECK(buyer_first_records == 1);
}

TEST_CASE("score: custom coefficient files are honored") {
  testsupport::TempDir tmp("cli-coeffs");
  const std::string scenarios = camera_scenario_path(tmp);
  save_records(tmp.file("dialogues.jsonl"),
               {testsupport::replay_camera_dialogue()});
  {
    std::ofstream out(tmp.file("unit.json"));
    out << R"({"alpha": 1.0, "beta": 1.0, "gamma": 1.0})";
  }
  const CliResult result = run_cli(
      {"score", "--dialogues", tmp.file("dialogues.jsonl").string(),
       "--scenarios", scenarios, "--coeffs", tmp.file("unit.json").string()});
  REQUIRE(result.code == 0);
  const Json line = Json::parse(result.out.substr(0, result.out.find('\n')));
  const double merit = line.at("merit").get<double>();
  const double sum = line.at("cs").get<double>() + line.at("np").get<double>() +
                     line.at("ar").get<double>();
  CHECK(merit == doctest::Approx(sum).epsilon(1e-12));

  // The power clamp is a config toggle: a deal above the initial ask shows
  // a negative NP once the clamp is off.
  DialogueRecord overpay = testsupport::replay_camera_dialogue();
  overpay.outcome = DealOutcome{dollars(600), std::string("camera"), {}};
  save_records(tmp.file("overpay.jsonl"), {overpay});
  {
    std::ofstream out(tmp.file("unclamped.json"));
    out << R"({"alpha": 1.0, "beta": 1.0, "gamma": 1.0, "clamp_np": false})";
  }
  const CliResult unclamped = run_cli(
      {"score", "--dialogues", tmp.file("overpay.jsonl").string(),
       "--scenarios", scenarios, "--coeffs",
       tmp.file("unclamped.json").string()});
  REQUIRE(unclamped.code == 0);
  const Json row = Json::parse(unclamped.out.substr(0, unclamped.out.find('\n')));
  CHECK(row.at("np").get<double>() == doctest::Approx(-1.0 / 3.0));
  CHECK(row.at("cs").get<double>() == 0.0);
}

TEST_CASE("report: re-renders dialogues as csv") {
  testsupport::TempDir tmp("cli-report");
  const std::string scenarios = camera_scenario_path(tmp);
  save_records(tmp.file("dialogues.jsonl"),
               {testsupport::replay_camera_dialogue()});
  const CliResult result =
      run_cli({"report", "--dialogues", tmp.file("dialogues.jsonl").string(),
               "--scenarios", scenarios, "--format", "csv"});
  REQUIRE(result.code == 0);
  CHECK(result.out.rfind("buyer,regime,product_mode", 0) == 0);
}

TEST_CASE("replay mode without a fixture exits with the transport code") {
  testsupport::TempDir tmp("cli-replay-miss");
  testsupport::TempDir fixtures("cli-replay-miss-fixtures");
  const std::string scenarios = camera_scenario_path(tmp);
  const CliResult result = run_cli(
      {"run", "--scenarios", scenarios, "--buyer-strategy", "react",
       "--model", "test-model", "--replay-dir", fixtures.path().string()});
  CHECK(result.code == 2);
}

TEST_CASE("help text documents every flag of every command") {
  const std::map<std::string, std::vector<std::string>> expected{
      {"validate", {"--scenarios"}},
      {"run",
       {"--scenarios", "--buyer-strategy", "--seller-strategy", "--model",
        "--seed", "--replay-dir", "--record", "--base-url", "--out"}},
      {"campaign",
       {"--scenarios", "--buyer-strategy", "--seller-strategy", "--model",
        "--runs-per-item", "--seed", "--markets", "--concurrency",
        "--replay-dir", "--record", "--coeffs", "--format", "--out"}},
      {"score", {"--dialogues", "--scenarios", "--coeffs", "--format", "--out"}},
      {"fit", {"--pairs", "--format", "--out"}},
      {"judge", {"--dialogues", "--model", "--replay-dir", "--seed", "--out"}},
      {"audit", {"--dialogues", "--format", "--out"}},
      {"export-sft", {"--dialogues", "--scenarios", "--pairs", "--out"}},
      {"report", {"--dialogues", "--scenarios", "--coeffs", "--format", "--out"}},
  };
  for (const auto& [command, options] : expected) {
    const CliResult help = run_cli({command, "--help"});
    REQUIRE(help.code == 0);
    for (const auto& option : options) {
      INFO(command << " help is missing " << option);
      CHECK(help.out.find(option) != std::string::npos);
    }
  }

  const CliResult top = run_cli({"--help"});
  CHECK(top.code == 0);
  for (const auto& [command, options] : expected) {
    CHECK(top.out.find(command) != std::string::npos);
  }
}

TEST_CASE("unknown commands and flags exit 1 with usage") {
  const CliResult unknown = run_cli({"frobnicate"});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("Usage") != std::string::npos);

  const CliResult bad_flag = run_cli({"fit", "--pairs", "x.jsonl", "--bogus"});
  CHECK(bad_flag.code == 1);
}
