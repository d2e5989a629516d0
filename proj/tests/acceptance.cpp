// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code is the number of
// failing criteria. Everything here runs offline.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bargain/agents.hpp"
#include "bargain/client.hpp"
#include "bargain/errors.hpp"
#include "bargain/evaluation.hpp"
#include "bargain/metrics.hpp"
#include "bargain/preference.hpp"
#include "bargain/protocol.hpp"
#include "bargain/scenario.hpp"
#include "bargain/sft.hpp"
#include "support/fixtures.hpp"
#include "support/synthetic.hpp"

using namespace bargain;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool condition, const std::string& detail) {
  if (!condition) throw Failure(detail);
}

void expect_near(double actual, double wanted, double tolerance,
                 const std::string& what) {
  if (std::abs(actual - wanted) > tolerance) {
    std::ostringstream msg;
    msg << what << ": got " << actual << ", wanted " << wanted << " +/- "
        << tolerance;
    throw Failure(msg.str());
  }
}

// --- criterion 1: metric golden values -------------------------------------

void metric_golden_values() {
  expect_near(consumer_surplus(dollars(500), dollars(450), dollars(400)), 0.5,
              1e-4, "cs(500,450,400)");
  expect_near(negotiation_power(dollars(550), dollars(450), dollars(400)),
              0.6667, 1e-4, "np(550,450,400)");
  expect_near(consumer_surplus(dollars(500), dollars(450), dollars(350)),
              0.3333, 1e-4, "cs(500,450,350)");
  expect_near(negotiation_power(dollars(550), dollars(450), dollars(350)), 0.5,
              1e-4, "np(550,450,350)");
}

// --- criterion 2: shipped default coefficients ------------------------------

void default_coefficient_values() {
  const MeritCoefficients c = default_coefficients();
  expect(c.alpha == 1.0139, "alpha != 1.0139");
  expect(c.beta == 0.8812, "beta != 0.8812");
  expect(c.gamma == 1.1049, "gamma != 1.1049");
  expect_near(c.sum(), 3.0, 1e-3, "coefficient sum");
}

// --- criterion 3: acquisition-ratio table fidelity --------------------------

void ar_table_fidelity() {
  const std::map<std::string, std::map<std::string, double>> expected{
      {"camera",
       {{"digital-camera", 0.7783},
        {"film-camera", 0.5748},
        {"dslr-camera", 1.0000},
        {"action-camera", 0.5867}}},
      {"smartphone",
       {{"flagship-smartphone", 1.0000},
        {"mid-range-smartphone", 0.7886},
        {"budget-smartphone", 0.7746},
        {"gaming-smartphone", 0.7399}}},
      {"shoes",
       {{"designer-shoes", 1.0000},
        {"casual-shoes", 0.6474},
        {"athletic-shoes", 0.6505},
        {"sandals", 0.5953}}},
      {"bicycle",
       {{"mountain-bike", 1.0000},
        {"road-bike", 0.7819},
        {"hybrid-bike", 0.6950},
        {"folding-bike", 0.6043}}},
      {"drone",
       {{"professional-drone", 1.0000},
        {"recreational-drone", 0.7905},
        {"racing-drone", 0.7725},
        {"mini-drone", 0.7350}}},
      {"soccer-ball",
       {{"premium-soccer-ball", 1.0000},
        {"training-soccer-ball", 0.7015},
        {"recreational-soccer-ball", 0.7154},
        {"mini-soccer-ball", 0.6609}}},
      {"bag",
       {{"leather-bag", 1.0000},
        {"backpack", 0.6217},
        {"tote-bag", 0.6175},
        {"drawstring-bag", 0.6222}}},
      {"wine",
       {{"premium-wine", 1.0000},
        {"red-wine", 0.7406},
        {"white-wine", 0.6230},
        {"sparkling-wine", 0.5618}}},
      {"cup",
       {{"ceramic-cup", 1.0000},
        {"glass-cup", 0.7451},
        {"travel-cup", 0.6377},
        {"plastic-cup", 0.6371}}},
  };

  const auto scenarios =
      load_scenarios(testsupport::data_path("scenarios/benchmark.jsonl"));
  int rows_checked = 0;
  for (const auto& [category, values] : expected) {
    const std::string scenario_id = "deceptive-multi-" + category;
    const Scenario* scenario = nullptr;
    for (const auto& s : scenarios) {
      if (s.id == scenario_id) scenario = &s;
    }
    expect(scenario != nullptr, "missing scenario " + scenario_id);
    expect(scenario->products.size() == 4,
           scenario_id + " does not carry 4 products");
    for (const auto& [product, value] : values) {
      const double got = acquisition_ratio_lookup(product, *scenario);
      expect(got == value, scenario_id + "/" + product + ": got " +
                               std::to_string(got) + ", wanted exactly " +
                               std::to_string(value));
      ++rows_checked;
    }
    expect(acquisition_ratio_lookup(scenario->desired_product, *scenario) ==
               1.0,
           scenario_id + ": desired product must return 1.0000");
  }
  expect(rows_checked == 36,
         "expected 36 table rows, checked " + std::to_string(rows_checked));
}

// --- criterion 4: price-schedule buyer -------------------------------------

void og_narrator_schedule() {
  const Cents expected[] = {dollars(250), dollars(300), dollars(350),
                            dollars(400), dollars(450), dollars(500)};
  for (int k = 0; k < 6; ++k) {
    const Cents offer = og_narrator_offer(dollars(500), k, 6);
    expect(offer == expected[k],
           "offer " + std::to_string(k) + " = " + format_money(offer));
  }
}

// --- criterion 5: synthetic coefficient recovery ----------------------------

void bradley_terry_recovery() {
  const Eigen::Vector3d generator{1.0139, 0.8812, 1.1049};
  const auto pairs = testsupport::synthetic_pairs(generator, 5000, 41);
  const FitResult fit = fit_bradley_terry(pairs);
  expect(fit.converged, "fit did not converge");
  for (int i = 0; i < 3; ++i) {
    expect_near(fit.scaled[i], generator[i], 0.05,
                "scaled coefficient " + std::to_string(i));
  }

  // Gradient check at 1e-5 relative error.
  SplitMix64 rng(7);
  const double h = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Vector3d point{rng.uniform(-2, 2), rng.uniform(-2, 2),
                                rng.uniform(-2, 2)};
    const Eigen::Vector3d analytic = nll_gradient(point, pairs);
    for (int axis = 0; axis < 3; ++axis) {
      Eigen::Vector3d up = point, down = point;
      up[axis] += h;
      down[axis] -= h;
      const double numeric = (nll(up, pairs) - nll(down, pairs)) / (2 * h);
      const double relative =
          std::abs(analytic[axis] - numeric) / std::max(1.0, std::abs(numeric));
      expect(relative < 1e-5, "gradient check axis " + std::to_string(axis));
    }
  }

  // Substitute property for the unavailable human-survey numbers: on
  // held-out synthetic preferences the fitted score must strictly beat a
  // surplus-only score whenever the generator weighs all components.
  const auto held_out = testsupport::synthetic_pairs(generator, 3000, 4242);
  std::vector<double> merit_scores, cs_scores;
  std::vector<int> labels;
  for (const auto& p : held_out) {
    const Eigen::Vector3d d = feature_delta(p);
    merit_scores.push_back(fit.scaled.dot(d));
    cs_scores.push_back(d[0]);
    labels.push_back(p.choice == 1 ? 1 : 0);
  }
  const double merit_auc = roc_auc(merit_scores, labels);
  const double cs_auc = roc_auc(cs_scores, labels);
  expect(merit_auc > cs_auc,
         "merit auc " + std::to_string(merit_auc) +
             " does not beat surplus-only auc " + std::to_string(cs_auc));
}

// --- criterion 6: committed dialogue replay ----------------------------------

void protocol_replay() {
  const DialogueRecord record = testsupport::replay_camera_dialogue();
  expect(!record.aborted, "replay aborted");
  expect(record.outcome.has_value(), "no outcome");
  const auto* deal = std::get_if<DealOutcome>(&*record.outcome);
  expect(deal != nullptr, "outcome is not a deal");
  expect(deal->price == dollars(480),
         "deal price " + format_money(deal->price));
  expect(message_count(record) == 9,
         "message count " + std::to_string(message_count(record)));

  const auto flags = detect_unstable_anchoring(record);
  expect(flags.size() == 2,
         "flag count " + std::to_string(flags.size()));
  expect(flags[0].new_offer == dollars(475), "first flag is not 475");
  expect(flags[1].new_offer == dollars(450), "second flag is not 450");
}

// --- criterion 7: evaluation protocol ---------------------------------------

void evaluation_protocol() {
  CampaignConfig config;
  config.scenarios = {testsupport::load_camera_fixture().scenario};
  AgentDescriptor buyer;
  buyer.strategy = Strategy::replay;
  config.buyers = {buyer};
  config.seller.strategy = Strategy::scripted_seller;
  config.runs_per_item = 10;
  config.base_seed = 77;

  const AgentFactory factory =
      [](const AgentDescriptor&, const Scenario&, Role role, int trial,
         std::uint64_t) -> std::unique_ptr<Agent> {
    if (role == Role::seller) return std::make_unique<ScriptedSeller>();
    if (trial == 9) {
      return std::make_unique<ReplayAgent>(
          Role::buyer,
          std::vector<std::string>{"Talk: forget it.\nAction: [QUIT]"});
    }
    return std::make_unique<ReplayAgent>(
        Role::buyer, std::vector<std::string>(
                         12, "Talk: $480 is my offer.\nAction: [BUY] $480"));
  };

  const CampaignResult result = run_campaign(config, factory);
  expect(result.records.size() == 10, "expected 10 records");
  const auto summaries =
      aggregate(result.records, config.scenarios, default_coefficients());
  expect(summaries.size() == 1, "expected one summary cell");
  const MarketSummary& s = summaries[0];

  expect(s.deals == 9, "expected 9 deals, got " + std::to_string(s.deals));
  expect_near(s.deal_rate, 0.9, 1e-12, "deal rate");

  // Hand-computed zero-imputed mean: nine deals at $480 on the
  // (wtp 500, cost 400, initial 550) band plus one quit at zero.
  const double deal_merit =
      1.0139 * 0.2 + 0.8812 * (7000.0 / 15000.0) + 1.1049 * 1.0;
  expect_near(s.mean_merit, 9.0 * deal_merit / 10.0, 1e-9,
              "zero-imputed mean merit");

  const std::string table =
      render_report(summaries, ReportFormat::table);
  expect(table.find("(90.0%)") != std::string::npos,
         "report does not render the 90.0% deal rate");
}

// --- criterion 8: offline end-to-end campaign -------------------------------

void offline_campaign() {
  CampaignConfig config;
  config.scenarios =
      load_scenarios(testsupport::data_path("scenarios/benchmark.jsonl"));
  expect(config.scenarios.size() == 81, "benchmark set is not 81 scenarios");
  AgentDescriptor buyer;
  buyer.strategy = Strategy::og_narrator;
  config.buyers = {buyer};
  config.seller.strategy = Strategy::scripted_seller;
  config.runs_per_item = 10;
  config.base_seed = 2024;
  config.concurrency = 2;

  // No transport client exists at all, so any network touch would throw.
  const auto factory = default_agent_factory(nullptr);
  const auto started = std::chrono::steady_clock::now();
  const CampaignResult first = run_campaign(config, factory);
  const CampaignResult second = run_campaign(config, factory);
  const auto elapsed = std::chrono::duration_cast<std::chrono::seconds>(
      std::chrono::steady_clock::now() - started);

  expect(first.records.size() == 810, "expected 810 records");
  expect(first.aborted == 0, "offline campaign aborted runs");
  expect(elapsed.count() < 60, "campaign exceeded one minute");

  const auto summaries =
      aggregate(first.records, config.scenarios, default_coefficients());
  expect(summaries.size() == 9, "expected 9 market cells");
  std::size_t item_cells = 0;
  for (const auto& s : summaries) item_cells += s.item_means.size();
  expect(item_cells == 81,
         "expected 81 item cells, got " + std::to_string(item_cells));
  expect(summaries_to_json(aggregate(second.records, config.scenarios,
                                     default_coefficients()))
                 .dump() == summaries_to_json(summaries).dump(),
         "campaign rerun differs");

  const std::string table = render_report(summaries, ReportFormat::table);
  for (const auto& market : all_markets()) {
    expect(table.find(market_label(market)) != std::string::npos,
           "report missing column " + market_label(market));
  }
  // Merit-over-deal-rate cells.
  expect(table.find('%') != std::string::npos, "report has no rate cells");
  for (const auto& s : summaries) {
    expect(s.deal_rate > 0.0, "no deals at all in " + market_label(s.market));
    expect(s.mean_merit <= default_coefficients().sum() * s.deal_rate + 1e-9,
           "zero-imputation bound violated");
  }
}

// --- criterion 9: training-data export --------------------------------------

void sft_export() {
  const DialogueRecord record = testsupport::replay_camera_dialogue();
  const DialogueRecord stripped = strip_seller_thoughts(record);
  const auto examples =
      build_sft_examples(stripped, render_system_prompt(
                                       testsupport::load_camera_fixture().scenario,
                                       Role::buyer));
  expect(examples.size() == 5,
         "expected 5 examples, got " + std::to_string(examples.size()));

  testsupport::TempDir tmp("acceptance-sft");
  const std::size_t written =
      export_training_file(examples, tmp.file("train.jsonl"));
  expect(written == 5, "expected 5 lines written");

  std::vector<std::string> seller_thoughts;
  for (const auto& t : record.turns) {
    if (t.role == Role::seller && t.thought) {
      seller_thoughts.push_back(*t.thought);
    }
  }
  expect(seller_thoughts.size() == 5, "fixture lost its seller thoughts");
  std::ifstream in(tmp.file("train.jsonl"));
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string exported = buffer.str();
  for (const auto& thought : seller_thoughts) {
    expect(exported.find(Json(thought).dump().substr(1, 16)) ==
               std::string::npos,
           "exported file contains seller thought text");
  }

  const auto reimported = import_training_file(tmp.file("train.jsonl"));
  expect(reimported.size() == examples.size(), "re-import count differs");
  for (std::size_t i = 0; i < examples.size(); ++i) {
    expect(reimported[i] == examples[i],
           "example " + std::to_string(i) + " does not round-trip");
  }
}

// --- criterion 10: judge protocol -------------------------------------------

void judge_protocol() {
  const DialogueRecord a = testsupport::replay_camera_dialogue(1);
  const DialogueRecord b = testsupport::alternate_camera_dialogue(2);

  ReplayClient client(testsupport::fixture_path("judge"));
  const Judge judge{&client, "judge-model", default_sampling("judge-model")};

  // Committed fixtures answer both presentation orders, always favoring the
  // same underlying dialogue, so the A/B winner must not depend on the seed.
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const JudgeVerdict verdict = judge_pair(a, b, judge, seed);
    expect(verdict.winner == 'A',
           "winner changed under seed " + std::to_string(seed));
  }

  // Order unmapping: a reply naming Negotiation2 under presented order
  // (B, A) is dialogue A.
  struct FixedClient : ChatClient {
    std::string complete(const ChatRequest&) override {
      return "{Q1:Negotiation2}";
    }
    Eigen::VectorXd embed(const std::string&, const std::string&) override {
      return Eigen::VectorXd::Ones(2);
    }
  } fixed;
  std::uint64_t swapped_seed = 0;
  while (!SplitMix64(swapped_seed).coin_flip()) ++swapped_seed;
  const Judge fixed_judge{&fixed, "judge-model", {}};
  const JudgeVerdict verdict = judge_pair(a, b, fixed_judge, swapped_seed);
  expect(verdict.presented_order[0] == 'B' && verdict.presented_order[1] == 'A',
         "seed did not produce the (B, A) order");
  expect(verdict.winner == 'A', "Negotiation2 under (B, A) must map to A");
}

struct Criterion {
  int id;
  const char* name;
  std::function<void()> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "metric golden values", metric_golden_values},
      {2, "default coefficients", default_coefficient_values},
      {3, "acquisition-ratio table fidelity", ar_table_fidelity},
      {4, "price-schedule buyer offers", og_narrator_schedule},
      {5, "coefficient recovery from synthetic preferences",
       bradley_terry_recovery},
      {6, "committed dialogue replay", protocol_replay},
      {7, "evaluation protocol zero-imputation", evaluation_protocol},
      {8, "offline end-to-end campaign", offline_campaign},
      {9, "training-data export", sft_export},
      {10, "judge protocol", judge_protocol},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    try {
      criterion.body();
      std::printf("PASS criterion %2d: %s\n", criterion.id, criterion.name);
    } catch (const std::exception& e) {
      ++failures;
      std::printf("FAIL criterion %2d: %s: %s\n", criterion.id, criterion.name,
                  e.what());
    }
  }
  if (failures > 0) {
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  } else {
    std::printf("all %zu criteria passed\n", criteria.size());
  }
  return failures;
}
