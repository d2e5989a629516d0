#include "bargain/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "bargain/errors.hpp"
#include "bargain/rng.hpp"

namespace bargain {

AgentFactory default_agent_factory(ChatClient* client) {
  return [client](const AgentDescriptor& desc, const Scenario&, Role, int,
                  std::uint64_t) { return make_agent(desc, client); };
}

namespace {

AgentDescriptor descriptor_from_config(const Json& j) {
  AgentDescriptor d;
  d.strategy = strategy_from_string(j.value("strategy", "og-narrator"));
  if (j.contains("model_id") && !j.at("model_id").is_null()) {
    d.model_id = j.at("model_id").get<std::string>();
    d.sampling = default_sampling(*d.model_id);
  }
  if (j.contains("sampling")) {
    d.sampling.temperature = j.at("sampling").value("temperature", 1.0);
    d.sampling.top_p = j.at("sampling").value("top_p", 1.0);
  }
  return d;
}

}  // namespace

CampaignConfig campaign_config_from_json(const Json& j) {
  CampaignConfig config;
  for (const auto& b : j.value("buyers", Json::array())) {
    config.buyers.push_back(descriptor_from_config(b));
  }
  if (j.contains("seller")) {
    config.seller = descriptor_from_config(j.at("seller"));
  } else {
    config.seller.strategy = Strategy::scripted_seller;
  }
  for (const auto& label : j.value("markets", Json::array())) {
    config.markets.push_back(market_from_label(label.get<std::string>()));
  }
  config.runs_per_item = j.value("runs_per_item", 10);
  config.base_seed = j.value("seed", 0ULL);
  config.concurrency = j.value("concurrency", 1);
  config.abort_retries = j.value("abort_retries", 2);
  return config;
}

CampaignConfig load_campaign_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open campaign config: " + path.string());
  }
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw ParseError("malformed campaign config: " + path.string());
  }
  return campaign_config_from_json(j);
}

namespace {

struct Task {
  std::size_t buyer_index;
  std::size_t scenario_index;
  int trial;
  std::uint64_t seed;
};

}  // namespace

CampaignResult run_campaign(const CampaignConfig& config,
                            const AgentFactory& factory) {
  if (config.buyers.empty()) throw ValidationError("campaign needs a buyer");
  if (config.runs_per_item < 1) {
    throw ValidationError("runs_per_item must be >= 1");
  }

  std::vector<std::size_t> scenario_indices;
  for (std::size_t i = 0; i < config.scenarios.size(); ++i) {
    const auto& s = config.scenarios[i];
    if (config.markets.empty() ||
        std::find(config.markets.begin(), config.markets.end(), s.market) !=
            config.markets.end()) {
      scenario_indices.push_back(i);
    }
  }

  std::vector<Task> tasks;
  for (std::size_t b = 0; b < config.buyers.size(); ++b) {
    for (std::size_t si : scenario_indices) {
      const Scenario& s = config.scenarios[si];
      for (int trial = 0; trial < config.runs_per_item; ++trial) {
        const std::uint64_t seed = derive_seed(
            config.base_seed,
            {config.buyers[b].label(), market_label(s.market), s.id,
             std::to_string(trial)});
        tasks.push_back({b, si, trial, seed});
      }
    }
  }

  std::vector<DialogueRecord> records(tasks.size());
  std::atomic<std::size_t> next_task{0};
  std::atomic<int> aborted{0};

  auto worker = [&] {
    while (true) {
      const std::size_t index = next_task.fetch_add(1);
      if (index >= tasks.size()) return;
      const Task& task = tasks[index];
      const Scenario& scenario = config.scenarios[task.scenario_index];
      const AgentDescriptor& buyer_desc = config.buyers[task.buyer_index];

      DialogueRecord record;
      for (int attempt = 0; attempt <= config.abort_retries; ++attempt) {
        const std::uint64_t seed =
            attempt == 0 ? task.seed
                         : derive_seed(task.seed, {"retry",
                                                   std::to_string(attempt)});
        try {
          auto buyer =
              factory(buyer_desc, scenario, Role::buyer, task.trial, seed);
          auto seller =
              factory(config.seller, scenario, Role::seller, task.trial, seed);
          record = run_negotiation(scenario, *buyer, *seller, seed);
        } catch (const std::exception& e) {
          // A throwing task must not take the worker thread down with it;
          // configuration problems also do not heal on retry.
          record = DialogueRecord{};
          record.scenario_id = scenario.id;
          record.buyer = buyer_desc;
          record.seller = config.seller;
          record.seed = seed;
          record.aborted = true;
          record.abort_reason = e.what();
          break;
        }
        if (!record.aborted) break;
      }
      if (record.aborted) {
        aborted.fetch_add(1);
        std::fprintf(stderr,
                     "warning: trial %d of scenario '%s' aborted and is "
                     "excluded: %s\n",
                     task.trial, scenario.id.c_str(),
                     record.abort_reason.c_str());
      }
      records[index] = std::move(record);
    }
  };

  const int threads = std::max(1, config.concurrency);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  return {std::move(records), aborted.load()};
}

std::vector<MarketSummary> aggregate(std::span<const DialogueRecord> records,
                                     std::span<const Scenario> scenarios,
                                     const MeritCoefficients& c,
                                     const MeritOptions& options) {
  std::map<std::string, const Scenario*> by_id;
  for (const auto& s : scenarios) by_id[s.id] = &s;

  struct ItemCell {
    std::vector<double> merits;
    std::vector<int> messages;
    int deals = 0;
  };
  // buyer -> market -> item -> trials
  std::map<std::string, std::map<MarketRegime, std::map<std::string, ItemCell>>>
      cells;

  for (const auto& record : records) {
    if (record.aborted) continue;
    const auto it = by_id.find(record.scenario_id);
    if (it == by_id.end()) {
      throw ValidationError("record references unknown scenario '" +
                            record.scenario_id + "'");
    }
    const Scenario& s = *it->second;
    const MeritBreakdown breakdown = score_dialogue(record, s, c, options);
    ItemCell& cell = cells[record.buyer.label()][s.market][s.id];
    cell.merits.push_back(breakdown.merit);
    cell.messages.push_back(message_count(record));
    if (breakdown.dealt) ++cell.deals;
  }

  std::vector<MarketSummary> summaries;
  for (const auto& [buyer_label, markets] : cells) {
    for (const auto& [market, items] : markets) {
      MarketSummary summary;
      summary.buyer_label = buyer_label;
      summary.market = market;

      std::vector<double> item_means;
      double message_sum = 0;
      for (const auto& [item_id, cell] : items) {
        double merit_sum = 0;
        for (double m : cell.merits) merit_sum += m;
        const double item_mean =
            merit_sum / static_cast<double>(cell.merits.size());
        summary.item_means[item_id] = item_mean;
        item_means.push_back(item_mean);
        summary.trials += static_cast<int>(cell.merits.size());
        summary.deals += cell.deals;
        for (int m : cell.messages) message_sum += m;
      }
      const double n_items = static_cast<double>(item_means.size());
      double mean = 0;
      for (double m : item_means) mean += m;
      mean /= n_items;
      summary.mean_merit = mean;
      if (item_means.size() > 1) {
        double ss = 0;
        for (double m : item_means) ss += (m - mean) * (m - mean);
        summary.stddev_merit = std::sqrt(ss / (n_items - 1.0));
      }
      summary.deal_rate =
          static_cast<double>(summary.deals) / static_cast<double>(summary.trials);
      summary.mean_messages = message_sum / static_cast<double>(summary.trials);

      // Zero-imputation bound: every deal scores at most alpha+beta+gamma,
      // every non-deal exactly zero.
      if (summary.mean_merit > c.sum() * summary.deal_rate + 1e-9) {
        throw ValidationError("aggregation bound violated for buyer '" +
                              buyer_label + "' in " + market_label(market));
      }
      summaries.push_back(std::move(summary));
    }
  }

  // Canonical order: buyer label, then report-column market order.
  const auto& order = all_markets();
  auto market_rank = [&](MarketRegime m) {
    return std::distance(order.begin(),
                         std::find(order.begin(), order.end(), m));
  };
  std::sort(summaries.begin(), summaries.end(),
            [&](const MarketSummary& a, const MarketSummary& b) {
              if (a.buyer_label != b.buyer_label) {
                return a.buyer_label < b.buyer_label;
              }
              return market_rank(a.market) < market_rank(b.market);
            });
  return summaries;
}

TurnStats turn_statistics(std::span<const DialogueRecord> records) {
  TurnStats stats;
  std::vector<int> counts;
  std::map<std::string, std::pair<int, double>> outcome_sums;
  for (const auto& record : records) {
    if (record.aborted) continue;
    const int messages = message_count(record);
    counts.push_back(messages);
    ++stats.histogram[messages];
    if (record.outcome) {
      auto& [n, sum] = outcome_sums[outcome_label(*record.outcome)];
      ++n;
      sum += messages;
    }
  }
  if (counts.empty()) return stats;
  double total = 0;
  for (int c : counts) total += c;
  stats.mean = total / static_cast<double>(counts.size());
  std::sort(counts.begin(), counts.end());
  const std::size_t mid = counts.size() / 2;
  stats.median = counts.size() % 2 == 1
                     ? counts[mid]
                     : (counts[mid - 1] + counts[mid]) / 2.0;
  for (const auto& [label, acc] : outcome_sums) {
    stats.by_outcome[label] = {acc.first, acc.second / acc.first};
  }
  return stats;
}

std::string render_transcript(const DialogueRecord& record) {
  std::ostringstream out;
  for (const auto& t : record.turns) {
    out << (t.role == Role::buyer ? "Buyer: " : "Seller: ");
    if (!t.action && !t.thought) {
      out << t.talk << "\n";
      continue;
    }
    bool first = true;
    auto line = [&](const std::string& text) {
      if (!first) out << "\n";
      out << text;
      first = false;
    };
    if (t.thought) line("Thought: " + *t.thought);
    if (!t.talk.empty() || !t.thought) line("Talk: " + t.talk);
    if (t.action) line("Action: " + format_action(*t.action));
    out << "\n";
  }
  return out.str();
}

namespace {

constexpr const char* kJudgeSystemPrompt =
    "You are a fair and impartial judge tasked with objectively evaluating "
    "negotiation dialogues. Respond ONLY with JSON like {Q1:NegotiationX}.";

constexpr const char* kJudgeQuestion =
    "Q1: Which negotiation seems more favorable in buyer perspective? "
    "(considering outcome, budget adherence, features)";

std::string strip_fences(std::string text) {
  auto trim = [](std::string s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return std::string();
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  };
  text = trim(text);
  if (text.rfind("```", 0) == 0) {
    const auto first_newline = text.find('\n');
    const auto last_fence = text.rfind("```");
    if (first_newline != std::string::npos && last_fence > first_newline) {
      text = trim(text.substr(first_newline + 1, last_fence - first_newline - 1));
    }
  }
  return text;
}

// Accepts {Q1:Negotiation2}, { "Q1" : "Negotiation1" }, etc. Free text is a
// parse error: the protocol mandates the JSON-like shape.
int parse_judge_choice(const std::string& reply) {
  const std::string text = strip_fences(reply);
  if (text.empty() || text.front() != '{' || text.back() != '}') {
    throw ParseError("judge reply is not the mandated {Q1:NegotiationX} shape");
  }
  std::string inner = text.substr(1, text.size() - 2);
  std::string cleaned;
  for (char c : inner) {
    if (c == '"' || c == '\'' || std::isspace(static_cast<unsigned char>(c))) {
      continue;
    }
    cleaned += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  const std::string want = "q1:negotiation";
  if (cleaned.rfind(want, 0) != 0 || cleaned.size() != want.size() + 1) {
    throw ParseError("judge reply is not the mandated {Q1:NegotiationX} shape");
  }
  const char pick = cleaned.back();
  if (pick != '1' && pick != '2') {
    throw ParseError("judge reply names neither Negotiation1 nor Negotiation2");
  }
  return pick - '0';
}

}  // namespace

ChatRequest build_judge_request(const DialogueRecord& first,
                                const DialogueRecord& second,
                                const Judge& judge) {
  ChatRequest req;
  req.model_id = judge.model_id;
  req.sampling = judge.sampling;
  req.messages.push_back({"system", kJudgeSystemPrompt});
  req.messages.push_back(
      {"user", "Negotiation1: \n" + render_transcript(first) +
                   "\nNegotiation2: \n" + render_transcript(second) + "\n" +
                   kJudgeQuestion});
  return req;
}

JudgeVerdict judge_pair(const DialogueRecord& a, const DialogueRecord& b,
                        const Judge& judge, std::uint64_t seed) {
  if (!judge.client) throw ValidationError("judge has no transport client");

  SplitMix64 rng(seed);
  const bool swapped = rng.coin_flip();
  const DialogueRecord& first = swapped ? b : a;
  const DialogueRecord& second = swapped ? a : b;

  JudgeVerdict verdict;
  verdict.presented_order = {swapped ? 'B' : 'A', swapped ? 'A' : 'B'};

  const ChatRequest req = build_judge_request(first, second, judge);
  std::string reply = judge.client->complete(req);
  int pick = 0;
  try {
    pick = parse_judge_choice(reply);
  } catch (const ParseError&) {
    // One re-prompt with the format reminder, then give up.
    ChatRequest retry = req;
    retry.messages.push_back({"assistant", reply});
    retry.messages.push_back(
        {"user", "Respond ONLY with JSON like {Q1:NegotiationX}."});
    reply = judge.client->complete(retry);
    pick = parse_judge_choice(reply);
  }

  verdict.raw_reply = reply;
  verdict.winner = verdict.presented_order[static_cast<std::size_t>(pick - 1)];
  return verdict;
}

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "table") return ReportFormat::table;
  if (s == "csv") return ReportFormat::csv;
  if (s == "machine") return ReportFormat::machine;
  throw ValidationError("unknown report format: " + std::string(s));
}

namespace {

std::string format_cell(const MarketSummary& s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f (%.1f%%)", s.mean_merit,
                s.deal_rate * 100.0);
  return buf;
}

std::string escape_csv(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

std::string render_table(std::span<const MarketSummary> summaries) {
  std::vector<std::string> buyers;
  for (const auto& s : summaries) {
    if (std::find(buyers.begin(), buyers.end(), s.buyer_label) == buyers.end()) {
      buyers.push_back(s.buyer_label);
    }
  }
  const auto& markets = all_markets();

  auto find_summary = [&](const std::string& buyer,
                          MarketRegime market) -> const MarketSummary* {
    for (const auto& s : summaries) {
      if (s.buyer_label == buyer && s.market == market) return &s;
    }
    return nullptr;
  };

  // Best and second-best merit per market column, marked * and +.
  std::map<std::string, char> markers;
  if (buyers.size() > 1) {
    for (const auto& market : markets) {
      std::vector<std::pair<double, std::string>> column;
      for (const auto& buyer : buyers) {
        if (const auto* s = find_summary(buyer, market)) {
          column.emplace_back(s->mean_merit, buyer);
        }
      }
      std::sort(column.rbegin(), column.rend());
      if (!column.empty()) {
        markers[market_label(market) + "|" + column[0].second] = '*';
      }
      if (column.size() > 1) {
        markers[market_label(market) + "|" + column[1].second] = '+';
      }
    }
  }

  std::size_t name_width = std::string("buyer").size();
  for (const auto& b : buyers) name_width = std::max(name_width, b.size());

  std::ostringstream out;
  out << "merit (deal rate); std dev across item means; * best, + second "
         "best\n";
  out << std::string(name_width, ' ') << "  ";
  for (const auto& market : markets) out << market_label(market) << "  ";
  out << "avg\n";
  for (const auto& buyer : buyers) {
    out << buyer << std::string(name_width - buyer.size(), ' ') << "  ";
    double total = 0;
    int cells = 0;
    for (const auto& market : markets) {
      const auto* s = find_summary(buyer, market);
      const std::size_t width = market_label(market).size();
      std::string cell = s ? format_cell(*s) : "-";
      if (s) {
        const auto marker = markers.find(market_label(market) + "|" + buyer);
        if (marker != markers.end()) cell += marker->second;
      }
      if (s) {
        total += s->mean_merit;
        ++cells;
      }
      out << cell;
      if (cell.size() < width) out << std::string(width - cell.size(), ' ');
      out << "  ";
    }
    if (cells > 0) {
      char avg[32];
      std::snprintf(avg, sizeof(avg), "%.3f", total / cells);
      out << avg;
    }
    out << "\n";
  }
  return out.str();
}

std::string render_csv(std::span<const MarketSummary> summaries) {
  std::ostringstream out;
  out << "buyer,regime,product_mode,mean_merit,stddev_merit,deal_rate,"
         "mean_messages,trials,deals,item_means\n";
  for (const auto& s : summaries) {
    std::string items;
    for (const auto& [id, mean] : s.item_means) {
      if (!items.empty()) items += ";";
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s=%.17g", id.c_str(), mean);
      items += buf;
    }
    char row[256];
    std::snprintf(row, sizeof(row), ",%s,%s,%.17g,%.17g,%.17g,%.17g,%d,%d,",
                  std::string(to_string(s.market.regime)).c_str(),
                  std::string(to_string(s.market.product_mode)).c_str(),
                  s.mean_merit, s.stddev_merit, s.deal_rate, s.mean_messages,
                  s.trials, s.deals);
    out << escape_csv(s.buyer_label) << row << escape_csv(items) << "\n";
  }
  return out.str();
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(current);
  return fields;
}

}  // namespace

std::string render_report(std::span<const MarketSummary> summaries,
                          ReportFormat format) {
  switch (format) {
    case ReportFormat::table: return render_table(summaries);
    case ReportFormat::csv: return render_csv(summaries);
    case ReportFormat::machine: return summaries_to_json(summaries).dump(2) + "\n";
  }
  return {};
}

std::vector<MarketSummary> parse_report_csv(std::string_view csv) {
  std::vector<MarketSummary> summaries;
  std::istringstream in{std::string(csv)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto fields = split_csv_row(line);
    if (fields.size() != 10) {
      throw ParseError("csv row has " + std::to_string(fields.size()) +
                       " fields; expected 10");
    }
    MarketSummary s;
    s.buyer_label = fields[0];
    s.market.regime = regime_from_string(fields[1]);
    s.market.product_mode = product_mode_from_string(fields[2]);
    s.mean_merit = std::stod(fields[3]);
    s.stddev_merit = std::stod(fields[4]);
    s.deal_rate = std::stod(fields[5]);
    s.mean_messages = std::stod(fields[6]);
    s.trials = std::stoi(fields[7]);
    s.deals = std::stoi(fields[8]);
    if (!fields[9].empty()) {
      std::istringstream items(fields[9]);
      std::string entry;
      while (std::getline(items, entry, ';')) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos) throw ParseError("bad item_means entry");
        s.item_means[entry.substr(0, eq)] = std::stod(entry.substr(eq + 1));
      }
    }
    summaries.push_back(std::move(s));
  }
  return summaries;
}

Json summaries_to_json(std::span<const MarketSummary> summaries) {
  Json rows = Json::array();
  for (const auto& s : summaries) {
    Json row;
    row["buyer"] = s.buyer_label;
    row["market"] = {{"regime", to_string(s.market.regime)},
                     {"product_mode", to_string(s.market.product_mode)}};
    row["mean_merit"] = s.mean_merit;
    row["stddev_merit"] = s.stddev_merit;
    row["deal_rate"] = s.deal_rate;
    row["mean_messages"] = s.mean_messages;
    row["trials"] = s.trials;
    row["deals"] = s.deals;
    Json items = Json::object();
    for (const auto& [id, mean] : s.item_means) items[id] = mean;
    row["item_means"] = items;
    rows.push_back(std::move(row));
  }
  return Json{{"stddev_population", "item_means"}, {"summaries", rows}};
}

std::vector<MarketSummary> summaries_from_json(const Json& j) {
  std::vector<MarketSummary> out;
  for (const auto& row : j.at("summaries")) {
    MarketSummary s;
    s.buyer_label = row.value("buyer", "");
    s.market.regime = regime_from_string(row.at("market").value("regime", ""));
    s.market.product_mode =
        product_mode_from_string(row.at("market").value("product_mode", ""));
    s.mean_merit = row.value("mean_merit", 0.0);
    s.stddev_merit = row.value("stddev_merit", 0.0);
    s.deal_rate = row.value("deal_rate", 0.0);
    s.mean_messages = row.value("mean_messages", 0.0);
    s.trials = row.value("trials", 0);
    s.deals = row.value("deals", 0);
    if (row.contains("item_means")) {
      for (const auto& [id, mean] : row.at("item_means").items()) {
        s.item_means[id] = mean.get<double>();
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace bargain
