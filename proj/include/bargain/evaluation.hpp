#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bargain/agents.hpp"
#include "bargain/client.hpp"
#include "bargain/metrics.hpp"
#include "bargain/protocol.hpp"

namespace bargain {

struct CampaignConfig {
  std::vector<AgentDescriptor> buyers;
  AgentDescriptor seller;
  std::vector<Scenario> scenarios;
  std::vector<MarketRegime> markets;  // filter; empty keeps every scenario
  int runs_per_item = 10;
  std::uint64_t base_seed = 0;
  int concurrency = 1;
  int abort_retries = 2;  // re-runs granted to an aborted trial
};

// Builds the two agents for one trial. Injectable so tests can script
// per-trial behavior; the default factory dispatches on the descriptor.
using AgentFactory = std::function<std::unique_ptr<Agent>(
    const AgentDescriptor& desc, const Scenario& s, Role role, int trial,
    std::uint64_t seed)>;

AgentFactory default_agent_factory(ChatClient* client);

// Campaign settings as a config file: {"buyers": [{"strategy": ...}],
// "seller": {...}, "markets": ["deceptive/multi"], "runs_per_item": 10,
// "seed": 0, "concurrency": 1}. Scenarios always come from their own file.
CampaignConfig campaign_config_from_json(const Json& j);
CampaignConfig load_campaign_config(const std::filesystem::path& path);

struct CampaignResult {
  std::vector<DialogueRecord> records;
  int aborted = 0;  // records excluded from scoring, after re-runs
};

// runs_per_item negotiations per (buyer, scenario), each with a seed derived
// from (base seed, buyer, market, item, trial) so any cell reruns in
// isolation. Record order is deterministic and independent of concurrency.
CampaignResult run_campaign(const CampaignConfig& config,
                            const AgentFactory& factory);

struct MarketSummary {
  std::string buyer_label;
  MarketRegime market;
  double mean_merit = 0;    // unweighted mean of item means
  double stddev_merit = 0;  // sample standard deviation across item means
  double deal_rate = 0;
  double mean_messages = 0;
  std::map<std::string, double> item_means;
  int trials = 0;
  int deals = 0;
};

// Per-trial merit via score_dialogue with impasse scored zero; item means
// over trials; market means over item means. Aborted records are skipped.
std::vector<MarketSummary> aggregate(std::span<const DialogueRecord> records,
                                     std::span<const Scenario> scenarios,
                                     const MeritCoefficients& c,
                                     const MeritOptions& options = {});

struct TurnStats {
  std::map<int, int> histogram;  // messages -> dialogue count
  double mean = 0;
  double median = 0;
  struct PerOutcome {
    int count = 0;
    double mean = 0;
  };
  std::map<std::string, PerOutcome> by_outcome;
};

TurnStats turn_statistics(std::span<const DialogueRecord> records);

// A dialogue rendered for pairwise judging, seller thoughts included.
std::string render_transcript(const DialogueRecord& record);

struct Judge {
  ChatClient* client = nullptr;
  std::string model_id;
  Sampling sampling;
};

struct JudgeVerdict {
  char winner = 'A';                      // which input dialogue won
  std::array<char, 2> presented_order{};  // e.g. {'B','A'}
  std::string raw_reply;
};

// The exact request judge_pair sends for a given presentation order;
// exposed so replay fixture stores can be seeded.
ChatRequest build_judge_request(const DialogueRecord& first,
                                const DialogueRecord& second,
                                const Judge& judge);

// Presents the two transcripts in seed-randomized order, asks the pairwise
// question, parses the mandated "{Q1:NegotiationX}" reply (tolerating
// whitespace, quoting and code fences), and maps the pick back to A/B.
// One re-prompt on an unparseable reply, then ParseError.
JudgeVerdict judge_pair(const DialogueRecord& a, const DialogueRecord& b,
                        const Judge& judge, std::uint64_t seed);

enum class ReportFormat { table, csv, machine };
ReportFormat report_format_from_string(std::string_view s);

// table: market columns with "merit (rate%)" cells, best/second markers when
// several buyers compete. csv and machine are lossless.
std::string render_report(std::span<const MarketSummary> summaries,
                          ReportFormat format);

std::vector<MarketSummary> parse_report_csv(std::string_view csv);

Json summaries_to_json(std::span<const MarketSummary> summaries);
std::vector<MarketSummary> summaries_from_json(const Json& j);

}  // namespace bargain
