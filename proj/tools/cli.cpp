#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>

#include <CLI11.hpp>

#include "bargain/agents.hpp"
#include "bargain/client.hpp"
#include "bargain/errors.hpp"
#include "bargain/evaluation.hpp"
#include "bargain/jsonl.hpp"
#include "bargain/metrics.hpp"
#include "bargain/preference.hpp"
#include "bargain/protocol.hpp"
#include "bargain/rng.hpp"
#include "bargain/scenario.hpp"
#include "bargain/sft.hpp"

namespace bargain::cli {

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string scenarios;
  std::string dialogues;
  std::string pairs;
  std::string coeffs = "default";
  std::vector<std::string> buyer_strategies;
  std::string seller_strategy = "scripted-seller";
  std::string model;
  std::string replay_dir;
  bool record = false;
  int runs_per_item = 10;
  std::uint64_t seed = 0;
  std::vector<std::string> markets;
  int concurrency = 1;
  std::string format = "machine";
  std::string out;
  std::string base_url;
  std::string config;
};

// Keeps the live client alive underneath the recorder.
struct ClientBundle {
  std::unique_ptr<ChatClient> live;
  std::unique_ptr<ChatClient> client;

  ChatClient* get() const { return client.get(); }
};

ClientBundle make_client(const CommonFlags& flags) {
  ClientBundle bundle;
  if (!flags.replay_dir.empty() && !flags.record) {
    bundle.client = std::make_unique<ReplayClient>(flags.replay_dir);
    return bundle;
  }
  HttpClientConfig config;
  if (!flags.base_url.empty()) config.base_url = flags.base_url;
  bundle.live = std::make_unique<HttpChatClient>(config);
  if (flags.record) {
    if (flags.replay_dir.empty()) {
      throw ValidationError("--record needs --replay-dir for the fixture store");
    }
    bundle.client =
        std::make_unique<RecordingClient>(*bundle.live, flags.replay_dir);
  } else {
    bundle.client = std::move(bundle.live);
  }
  return bundle;
}

AgentDescriptor make_descriptor(const std::string& strategy,
                                const std::string& model) {
  AgentDescriptor desc;
  desc.strategy = strategy_from_string(strategy);
  if (strategy_needs_model(desc.strategy)) {
    if (model.empty()) {
      throw ValidationError("strategy '" + strategy + "' requires --model");
    }
    desc.model_id = model;
    desc.sampling = default_sampling(model);
  }
  return desc;
}

MeritConfig resolve_merit_config(const std::string& selector) {
  if (selector == "default") return MeritConfig{};
  return load_merit_config(selector);
}

std::vector<MarketRegime> resolve_markets(const std::vector<std::string>& labels) {
  std::vector<MarketRegime> markets;
  for (const auto& label : labels) markets.push_back(market_from_label(label));
  return markets;
}

void emit(const std::string& text, const std::string& out_path,
          std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    write_text_atomic(out_path, text);
  }
}

std::string dialogue_identity(const DialogueRecord& record) {
  return record.scenario_id + "#" + std::to_string(record.seed);
}

int cmd_validate(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  int scenario_count = 0;
  int problem_count = 0;
  for_each_jsonl(flags.scenarios, [&](std::size_t line, const Json& j) {
    ++scenario_count;
    Scenario s;
    try {
      s = scenario_from_json(j);
    } catch (const ParseError& e) {
      ++problem_count;
      err << "line " << line << ": " << e.what() << "\n";
      return;
    }
    for (const auto& violation : validate_scenario(s)) {
      ++problem_count;
      err << "scenario '" << s.id << "' (line " << line << "): " << violation
          << "\n";
    }
  });
  out << scenario_count << " scenarios, " << problem_count << " problems\n";
  return problem_count == 0 ? 0 : 1;
}

int cmd_run(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const auto scenarios = load_scenarios(flags.scenarios);
  const std::string buyer_strategy =
      flags.buyer_strategies.empty() ? "og-narrator" : flags.buyer_strategies[0];
  const AgentDescriptor buyer_desc = make_descriptor(buyer_strategy, flags.model);
  const AgentDescriptor seller_desc =
      make_descriptor(flags.seller_strategy, flags.model);

  ClientBundle bundle;
  if (strategy_needs_model(buyer_desc.strategy) ||
      strategy_needs_model(seller_desc.strategy)) {
    bundle = make_client(flags);
  }

  int aborted = 0;
  std::vector<std::string> lines;
  for (const auto& s : scenarios) {
    const std::uint64_t seed = derive_seed(flags.seed, {s.id});
    auto buyer = make_agent(buyer_desc, bundle.get());
    auto seller = make_agent(seller_desc, bundle.get());
    const DialogueRecord record = run_negotiation(s, *buyer, *seller, seed);
    if (record.aborted) {
      ++aborted;
      err << "warning: scenario '" << s.id << "' aborted: "
          << record.abort_reason << "\n";
    }
    lines.push_back(record_to_json(record).dump());
  }
  std::string text;
  for (const auto& line : lines) text += line + "\n";
  emit(text, flags.out, out);
  return aborted == 0 ? 0 : 2;
}

int cmd_campaign(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  CampaignConfig config;
  if (!flags.config.empty()) {
    // The config file supplies the whole campaign shape; scenarios, replay
    // and output stay on flags.
    config = load_campaign_config(flags.config);
    if (config.buyers.empty()) {
      throw ValidationError("campaign config names no buyers");
    }
  } else {
    const std::vector<std::string> buyer_strategies =
        flags.buyer_strategies.empty() ? std::vector<std::string>{"og-narrator"}
                                       : flags.buyer_strategies;
    for (const auto& strategy : buyer_strategies) {
      config.buyers.push_back(make_descriptor(strategy, flags.model));
    }
    config.seller = make_descriptor(flags.seller_strategy, flags.model);
    config.markets = resolve_markets(flags.markets);
    config.runs_per_item = flags.runs_per_item;
    config.base_seed = flags.seed;
    config.concurrency = flags.concurrency;
  }
  config.scenarios = load_scenarios(flags.scenarios);

  ClientBundle bundle;
  const bool remote =
      strategy_needs_model(config.seller.strategy) ||
      std::any_of(config.buyers.begin(), config.buyers.end(),
                  [](const AgentDescriptor& d) {
                    return strategy_needs_model(d.strategy);
                  });
  if (remote) bundle = make_client(flags);

  const CampaignResult result =
      run_campaign(config, default_agent_factory(bundle.get()));
  const MeritConfig merit = resolve_merit_config(flags.coeffs);
  const auto summaries = aggregate(result.records, config.scenarios,
                                   merit.coefficients, merit.options);
  const std::string report =
      render_report(summaries, report_format_from_string(flags.format));

  if (!flags.out.empty()) {
    fs::create_directories(flags.out);
    save_records(fs::path(flags.out) / "dialogues.jsonl", result.records);
    write_text_atomic(fs::path(flags.out) / "summary.json",
                      summaries_to_json(summaries).dump(2) + "\n");
    const char* report_name = flags.format == "csv"       ? "report.csv"
                              : flags.format == "machine" ? "report.json"
                                                          : "report.txt";
    write_text_atomic(fs::path(flags.out) / report_name, report);
  }
  out << report;

  // A cell with every trial aborted means that (buyer, item) produced no
  // scorable data at all.
  std::map<std::string, int> aborted_per_cell;
  for (const auto& record : result.records) {
    if (record.aborted) {
      ++aborted_per_cell[record.buyer.label() + "|" + record.scenario_id];
    }
  }
  for (const auto& [cell, count] : aborted_per_cell) {
    if (count >= config.runs_per_item) {
      err << "error: cell " << cell << " fully aborted\n";
      return 2;
    }
  }
  if (result.aborted > 0) {
    err << "warning: " << result.aborted << " aborted runs excluded\n";
  }
  return 0;
}

int cmd_score(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const auto scenarios = load_scenarios(flags.scenarios);
  std::map<std::string, const Scenario*> by_id;
  for (const auto& s : scenarios) by_id[s.id] = &s;
  const auto records = load_records(flags.dialogues);
  const MeritConfig merit = resolve_merit_config(flags.coeffs);

  const bool table = flags.format == "table";
  std::string text;
  for (const auto& record : records) {
    if (record.aborted) {
      err << "warning: skipping aborted dialogue " << dialogue_identity(record)
          << "\n";
      continue;
    }
    const auto it = by_id.find(record.scenario_id);
    if (it == by_id.end()) {
      throw ValidationError("dialogue references unknown scenario '" +
                            record.scenario_id + "'");
    }
    const MeritBreakdown breakdown =
        score_dialogue(record, *it->second, merit.coefficients, merit.options);
    if (table) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "%-32s merit %.4f  cs %.4f  np %.4f  ar %.4f  %s\n",
                    dialogue_identity(record).c_str(), breakdown.merit,
                    breakdown.cs, breakdown.np, breakdown.ar,
                    breakdown.dealt ? "deal" : "no deal");
      text += buf;
    } else {
      Json j = breakdown_to_json(breakdown);
      j["dialogue"] = dialogue_identity(record);
      j["scenario_id"] = record.scenario_id;
      text += j.dump() + "\n";
    }
  }
  emit(text, flags.out, out);
  return 0;
}

int cmd_fit(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const PairFile file = load_preference_pairs(flags.pairs);
  if (file.dropped_ties > 0) {
    err << "note: dropped " << file.dropped_ties
        << " pairs without a binary choice\n";
  }
  const FitResult result = fit_bradley_terry(file.pairs);
  Json j = fit_result_to_json(result);
  j["pairs"] = file.pairs.size();
  j["dropped_ties"] = file.dropped_ties;

  std::string text;
  if (flags.format == "table") {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "pairs %zu (dropped %d)\n"
                  "raw     alpha %.6f  beta %.6f  gamma %.6f\n"
                  "scaled  alpha %.4f  beta %.4f  gamma %.4f  (sum %.3f)\n"
                  "nll %.6f after %d iterations, %s%s\n",
                  file.pairs.size(), file.dropped_ties, result.raw[0],
                  result.raw[1], result.raw[2], result.scaled[0],
                  result.scaled[1], result.scaled[2], result.scaled.sum(),
                  result.final_nll, result.iterations,
                  result.converged ? "converged" : "not converged",
                  result.separable ? " (separable data)" : "");
    text = buf;
  } else {
    text = j.dump(2) + "\n";
  }
  emit(text, flags.out, out);
  return 0;
}

int cmd_judge(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const auto records = load_records(flags.dialogues);
  if (records.size() < 2 || records.size() % 2 != 0) {
    throw ValidationError("judge needs an even number of dialogues; got " +
                          std::to_string(records.size()));
  }
  if (flags.model.empty()) throw ValidationError("judge requires --model");
  ClientBundle bundle = make_client(flags);
  Judge judge{bundle.get(), flags.model, default_sampling(flags.model)};

  std::string text;
  for (std::size_t i = 0; i + 1 < records.size(); i += 2) {
    const std::uint64_t seed = derive_seed(flags.seed, {std::to_string(i / 2)});
    const JudgeVerdict verdict =
        judge_pair(records[i], records[i + 1], judge, seed);
    Json j;
    j["pair"] = i / 2;
    j["a"] = dialogue_identity(records[i]);
    j["b"] = dialogue_identity(records[i + 1]);
    j["winner"] = std::string(1, verdict.winner);
    j["presented_order"] = std::string() + verdict.presented_order[0] +
                           verdict.presented_order[1];
    text += j.dump() + "\n";
  }
  emit(text, flags.out, out);
  (void)err;
  return 0;
}

Json turn_stats_to_json(const TurnStats& stats) {
  Json histogram = Json::object();
  for (const auto& [messages, count] : stats.histogram) {
    histogram[std::to_string(messages)] = count;
  }
  Json by_outcome = Json::object();
  for (const auto& [label, per] : stats.by_outcome) {
    by_outcome[label] = {{"count", per.count}, {"mean_messages", per.mean}};
  }
  return Json{{"mean_messages", stats.mean},
              {"median_messages", stats.median},
              {"histogram", histogram},
              {"by_outcome", by_outcome}};
}

int cmd_audit(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const auto records = load_records(flags.dialogues);
  const bool table = flags.format == "table";
  std::string text;
  for (const auto& record : records) {
    const auto flags_found = detect_unstable_anchoring(record);
    const OarCount oar = count_opponent_aware_sentences(record);
    if (table) {
      text += dialogue_identity(record) + ": " +
              std::to_string(flags_found.size()) + " reversed concessions";
      for (const auto& f : flags_found) {
        text += "  [turn " + std::to_string(f.turn_index) + ": " +
                format_money(f.prior_offer) + " -> " +
                format_money(f.new_offer) + "]";
      }
      if (oar.total_sentences > 0) {
        char buf[80];
        std::snprintf(buf, sizeof(buf),
                      "; opponent-aware %d/%d buyer-thought sentences",
                      oar.oar_sentences, oar.total_sentences);
        text += buf;
      }
      text += "\n";
    } else {
      Json j;
      j["dialogue"] = dialogue_identity(record);
      Json reversals = Json::array();
      for (const auto& f : flags_found) {
        reversals.push_back({{"turn_index", f.turn_index},
                             {"prior_offer", to_dollars(f.prior_offer)},
                             {"new_offer", to_dollars(f.new_offer)}});
      }
      j["reversed_concessions"] = reversals;
      j["buyer_thought_sentences"] = oar.total_sentences;
      j["opponent_aware_sentences"] = oar.oar_sentences;
      text += j.dump() + "\n";
    }
  }

  const TurnStats stats = turn_statistics(records);
  if (table) {
    char buf[120];
    std::snprintf(buf, sizeof(buf),
                  "turns: mean %.2f, median %.1f over %zu dialogues\n",
                  stats.mean, stats.median, records.size());
    text += buf;
    for (const auto& [label, per] : stats.by_outcome) {
      std::snprintf(buf, sizeof(buf), "  %-8s %4d dialogues, mean %.2f turns\n",
                    label.c_str(), per.count, per.mean);
      text += buf;
    }
  } else {
    text += Json{{"turn_statistics", turn_stats_to_json(stats)}}.dump() + "\n";
  }
  emit(text, flags.out, out);
  (void)err;
  return 0;
}

int cmd_export_sft(const CommonFlags& flags, std::ostream& out,
                   std::ostream& err) {
  if (flags.out.empty()) throw ValidationError("export-sft requires --out");
  const auto scenarios = load_scenarios(flags.scenarios);
  std::map<std::string, const Scenario*> by_id;
  for (const auto& s : scenarios) by_id[s.id] = &s;
  auto records = load_records(flags.dialogues);

  std::optional<std::set<std::string>> preferred;
  if (!flags.pairs.empty()) {
    const PairFile file = load_preference_pairs(flags.pairs);
    std::set<std::string> known;
    for (const auto& r : records) known.insert(dialogue_identity(r));
    preferred = filter_preferred(file.pairs, {}, &known);
  }

  std::vector<SftExample> examples;
  int skipped = 0;
  for (const auto& record : records) {
    if (record.aborted) {
      ++skipped;
      continue;
    }
    if (preferred && !preferred->count(dialogue_identity(record))) continue;
    const auto it = by_id.find(record.scenario_id);
    if (it == by_id.end()) {
      throw ValidationError("dialogue references unknown scenario '" +
                            record.scenario_id + "'");
    }
    const DialogueRecord stripped = strip_seller_thoughts(record);
    auto built = build_sft_examples(stripped, *it->second);
    for (auto& e : built) e.dialogue_id = dialogue_identity(record);
    examples.insert(examples.end(), built.begin(), built.end());
  }
  const std::size_t written = export_training_file(examples, flags.out);
  out << written << " examples written to " << flags.out << "\n";
  if (skipped > 0) err << "warning: " << skipped << " aborted dialogues skipped\n";
  return 0;
}

int cmd_report(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const auto scenarios = load_scenarios(flags.scenarios);
  const auto records = load_records(flags.dialogues);
  const MeritConfig merit = resolve_merit_config(flags.coeffs);
  const auto summaries =
      aggregate(records, scenarios, merit.coefficients, merit.options);
  emit(render_report(summaries, report_format_from_string(flags.format)),
       flags.out, out);
  (void)err;
  return 0;
}

struct Command {
  CLI::App* app = nullptr;
  int (*handler)(const CommonFlags&, std::ostream&, std::ostream&) = nullptr;
};

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"negotiation simulation and evaluation engine"};
  app.name("bargain");
  app.require_subcommand(1);

  CommonFlags flags;
  std::vector<Command> commands;

  auto add_common = [&](CLI::App* cmd, std::initializer_list<const char*> names) {
    const std::set<std::string> wanted(names.begin(), names.end());
    auto want = [&](const char* n) { return wanted.count(n) > 0; };
    if (want("scenarios")) {
      cmd->add_option("--scenarios", flags.scenarios,
                      "scenario file (line-delimited records)")
          ->required();
    }
    if (want("dialogues")) {
      cmd->add_option("--dialogues", flags.dialogues,
                      "dialogue file (line-delimited records)")
          ->required();
    }
    if (want("pairs")) {
      cmd->add_option("--pairs", flags.pairs,
                      "preference pair file (line-delimited records)");
    }
    if (want("pairs-required")) {
      cmd->add_option("--pairs", flags.pairs, "preference pair file")
          ->required();
    }
    if (want("coeffs")) {
      cmd->add_option("--coeffs", flags.coeffs,
                      "merit coefficients: 'default' or a JSON file path");
    }
    if (want("buyer-strategy")) {
      cmd->add_option("--buyer-strategy", flags.buyer_strategies,
                      "buyer strategy (repeatable): react, icl-mf, "
                      "icl-mf+oar, react+oar, og-narrator");
    }
    if (want("seller-strategy")) {
      cmd->add_option("--seller-strategy", flags.seller_strategy,
                      "seller strategy: scripted-seller, react");
    }
    if (want("model")) {
      cmd->add_option("--model", flags.model,
                      "model id for remote strategies or the judge");
    }
    if (want("replay-dir")) {
      cmd->add_option("--replay-dir", flags.replay_dir,
                      "fixture directory for offline replay (or recording)");
      cmd->add_flag("--record", flags.record,
                    "capture live responses into --replay-dir");
      cmd->add_option("--base-url", flags.base_url,
                      "provider base URL for live mode");
    }
    if (want("runs-per-item")) {
      cmd->add_option("--runs-per-item", flags.runs_per_item,
                      "negotiations per (buyer, market, item) cell");
    }
    if (want("seed")) {
      cmd->add_option("--seed", flags.seed, "base seed for derived run seeds");
    }
    if (want("markets")) {
      cmd->add_option("--markets", flags.markets,
                      "market filter (repeatable), e.g. deceptive/multi");
    }
    if (want("concurrency")) {
      cmd->add_option("--concurrency", flags.concurrency,
                      "concurrent negotiations");
    }
    if (want("format")) {
      cmd->add_option("--format", flags.format,
                      "output format: machine, table, csv");
    }
    if (want("out")) {
      cmd->add_option("--out", flags.out, "output path (default: stdout)");
    }
    if (want("out-dir")) {
      cmd->add_option("--out", flags.out, "results directory");
    }
    if (want("config")) {
      cmd->add_option("--config", flags.config,
                      "campaign config file (replaces the buyer/seller/"
                      "markets/runs/seed/concurrency flags)");
    }
  };

  auto add = [&](const char* name, const char* description,
                 int (*handler)(const CommonFlags&, std::ostream&, std::ostream&),
                 std::initializer_list<const char*> opts) {
    CLI::App* cmd = app.add_subcommand(name, description);
    add_common(cmd, opts);
    commands.push_back({cmd, handler});
  };

  add("validate", "check a scenario file against the market invariants",
      cmd_validate, {"scenarios"});
  add("run", "run one negotiation per scenario", cmd_run,
      {"scenarios", "buyer-strategy", "seller-strategy", "model", "seed",
       "replay-dir", "out"});
  add("campaign", "run a full benchmark campaign and aggregate it",
      cmd_campaign,
      {"scenarios", "buyer-strategy", "seller-strategy", "model",
       "runs-per-item", "seed", "markets", "concurrency", "replay-dir",
       "coeffs", "format", "out-dir", "config"});
  add("score", "score dialogues against their scenarios", cmd_score,
      {"dialogues", "scenarios", "coeffs", "format", "out"});
  add("fit", "fit merit coefficients from preference pairs", cmd_fit,
      {"pairs-required", "format", "out"});
  add("judge", "pairwise judge consecutive dialogue pairs", cmd_judge,
      {"dialogues", "model", "replay-dir", "seed", "out"});
  add("audit", "flag reversed concessions and count opponent-aware reasoning",
      cmd_audit, {"dialogues", "format", "out"});
  add("export-sft", "export preferred dialogues as a chat-format training file",
      cmd_export_sft, {"dialogues", "scenarios", "pairs", "out"});
  add("report", "aggregate scored dialogues into the market table", cmd_report,
      {"dialogues", "scenarios", "coeffs", "format", "out"});

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    for (const auto& command : commands) {
      if (command.app->parsed()) {
        out << command.app->help();
        return 0;
      }
    }
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    for (const auto& command : commands) {
      if (command.app->parsed()) return command.handler(flags, out, err);
    }
    err << app.help();
    return 1;
  } catch (const TransportError& e) {
    err << "transport error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace bargain::cli
