#include "bargain/preference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bargain/errors.hpp"

namespace bargain {

std::string_view to_string(PairKind k) {
  return k == PairKind::same_product ? "same_product" : "different_product";
}

PairKind pair_kind_from_string(std::string_view s) {
  if (s == "same_product") return PairKind::same_product;
  if (s == "different_product") return PairKind::different_product;
  throw ValidationError("unknown pair kind: " + std::string(s));
}

Eigen::Vector3d feature_delta(const PreferencePair& p) {
  return {p.b1.cs - p.b2.cs, p.b1.np - p.b2.np, p.b1.ar - p.b2.ar};
}

namespace {

// log(1 + e^x) without overflow.
double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double nll(const Eigen::Vector3d& coeffs, std::span<const PreferencePair> pairs,
           double l2) {
  if (pairs.empty()) throw ValidationError("nll over an empty pair set");
  double total = 0.0;
  for (const auto& p : pairs) {
    const double score = coeffs.dot(feature_delta(p));
    // -log p for choice 1, -log(1-p) for choice 2.
    total += p.choice == 1 ? softplus(-score) : softplus(score);
  }
  if (l2 > 0) total += l2 * coeffs.squaredNorm();
  return total;
}

Eigen::Vector3d nll_gradient(const Eigen::Vector3d& coeffs,
                             std::span<const PreferencePair> pairs, double l2) {
  if (pairs.empty()) throw ValidationError("gradient over an empty pair set");
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  for (const auto& p : pairs) {
    const Eigen::Vector3d delta = feature_delta(p);
    const double prob = sigmoid(coeffs.dot(delta));
    const double label = p.choice == 1 ? 1.0 : 0.0;
    grad += (prob - label) * delta;
  }
  if (l2 > 0) grad += 2.0 * l2 * coeffs;
  return grad;
}

FitResult fit_bradley_terry(std::span<const PreferencePair> pairs,
                            const FitOptions& options) {
  if (pairs.empty()) throw ValidationError("cannot fit an empty pair set");
  for (const auto& p : pairs) {
    if (p.choice != 1 && p.choice != 2) {
      throw ValidationError("preference choice must be 1 or 2");
    }
  }
  const bool any_delta = std::any_of(
      pairs.begin(), pairs.end(),
      [](const PreferencePair& p) { return feature_delta(p).norm() > 0; });
  if (!any_delta) {
    throw ValidationError("all pair deltas are zero; coefficients are "
                          "unidentifiable");
  }

  constexpr double kBlowupNorm = 100.0;
  constexpr int kCheckEvery = 100;
  constexpr int kPatience = 5;

  const double n = static_cast<double>(pairs.size());
  FitResult result;
  Eigen::Vector3d coeffs = Eigen::Vector3d::Ones();
  double last_checked_nll = nll(coeffs, pairs, options.l2);
  int bad_checks = 0;

  int iter = 0;
  for (; iter < options.max_iters; ++iter) {
    const Eigen::Vector3d grad = nll_gradient(coeffs, pairs, options.l2) / n;
    if (grad.cwiseAbs().maxCoeff() < options.tol) {
      result.converged = true;
      break;
    }
    coeffs -= options.lr * grad;

    if (coeffs.cwiseAbs().maxCoeff() > kBlowupNorm) {
      // Separable data: the likelihood improves without bound.
      result.separable = true;
      result.blowup_direction = coeffs.normalized();
      break;
    }
    if ((iter + 1) % kCheckEvery == 0) {
      const double current = nll(coeffs, pairs, options.l2);
      if (current > last_checked_nll + 1e-12) {
        if (++bad_checks >= kPatience) {
          throw FitError("fit diverged: nll increasing across " +
                         std::to_string(kPatience) + " checks");
        }
      } else {
        bad_checks = 0;
      }
      last_checked_nll = current;
    }
  }

  result.raw = coeffs;
  result.iterations = iter;
  result.final_nll = nll(coeffs, pairs, options.l2);

  // Separable data with no penalty: the optimum sits at infinity, the
  // coefficients drift outward forever (often only logarithmically, so the
  // norm guard alone cannot catch it), and the per-pair loss collapses to
  // zero. Report the escape direction instead of pretending convergence.
  if (!result.converged && !result.separable &&
      nll(coeffs, pairs, 0.0) / n < 1e-3) {
    result.separable = true;
    result.blowup_direction = coeffs.normalized();
  }

  const double sum = coeffs.sum();
  if (sum <= 0) {
    throw FitError("fitted coefficients sum to a nonpositive value; data is "
                   "inconsistent with the model");
  }
  result.scaled = coeffs * (3.0 / sum);
  return result;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ValidationError("scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::size_t positives = 0;
  for (int label : labels) {
    if (label != 0 && label != 1) {
      throw ValidationError("labels must be 0 or 1");
    }
    positives += static_cast<std::size_t>(label);
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw ValidationError("roc auc needs both classes present");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tied scores, 1-based.
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg_rank;
    i = j + 1;
  }

  double positive_rank_sum = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[k] == 1) positive_rank_sum += ranks[k];
  }
  const double np = static_cast<double>(positives);
  const double nn = static_cast<double>(negatives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<std::string> attention_filter(
    std::span<const AnnotatorChecks> annotators) {
  std::vector<std::string> kept;
  for (const auto& a : annotators) {
    if (a.checks.size() != 10) {
      throw ValidationError("annotator '" + a.annotator_id + "' has " +
                            std::to_string(a.checks.size()) +
                            " check items; expected 10");
    }
    const auto agreed = std::count(a.checks.begin(), a.checks.end(), true);
    if (agreed >= 7) kept.push_back(a.annotator_id);
  }
  return kept;
}

namespace {

MeritComponents components_from_json(const Json& j) {
  MeritComponents c;
  c.cs = j.at("cs").get<double>();
  c.np = j.at("np").get<double>();
  c.ar = j.at("ar").get<double>();
  return c;
}

Json components_to_json(const MeritComponents& c) {
  return Json{{"cs", c.cs}, {"np", c.np}, {"ar", c.ar}};
}

}  // namespace

Json pair_to_json(const PreferencePair& p) {
  Json j;
  j["b1"] = components_to_json(p.b1);
  j["b2"] = components_to_json(p.b2);
  j["choice"] = p.choice;
  if (!p.annotator_id.empty()) j["annotator_id"] = p.annotator_id;
  if (!p.product_category.empty()) j["product_category"] = p.product_category;
  j["pair_kind"] = to_string(p.kind);
  if (!p.dialogues[0].empty() || !p.dialogues[1].empty()) {
    j["dialogues"] = Json::array({p.dialogues[0], p.dialogues[1]});
  }
  return j;
}

PreferencePair pair_from_json(const Json& j) {
  PreferencePair p;
  p.b1 = components_from_json(j.at("b1"));
  p.b2 = components_from_json(j.at("b2"));
  p.choice = j.value("choice", 0);
  p.annotator_id = j.value("annotator_id", "");
  p.product_category = j.value("product_category", "");
  if (j.contains("pair_kind")) {
    p.kind = pair_kind_from_string(j.at("pair_kind").get<std::string>());
  }
  if (j.contains("dialogues") && j.at("dialogues").is_array() &&
      j.at("dialogues").size() == 2) {
    p.dialogues[0] = j.at("dialogues")[0].get<std::string>();
    p.dialogues[1] = j.at("dialogues")[1].get<std::string>();
  }
  return p;
}

PairFile load_preference_pairs(const std::filesystem::path& path) {
  PairFile out;
  for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    PreferencePair p;
    try {
      p = pair_from_json(j);
    } catch (const Json::exception& e) {
      throw ParseError(path.filename().string() + " line " +
                       std::to_string(line) + ": " + e.what());
    }
    // The survey forces a binary choice; imported data may carry ties or
    // abstentions, which are dropped with a count.
    if (p.choice != 1 && p.choice != 2) {
      ++out.dropped_ties;
      return;
    }
    out.pairs.push_back(std::move(p));
  });
  return out;
}

void save_preference_pairs(const std::filesystem::path& path,
                           std::span<const PreferencePair> pairs) {
  std::vector<std::string> lines;
  lines.reserve(pairs.size());
  for (const auto& p : pairs) lines.push_back(pair_to_json(p).dump());
  write_lines_atomic(path, lines);
}

Json fit_result_to_json(const FitResult& r) {
  Json j;
  j["raw"] = {{"alpha", r.raw[0]}, {"beta", r.raw[1]}, {"gamma", r.raw[2]}};
  j["scaled"] = {{"alpha", r.scaled[0]},
                 {"beta", r.scaled[1]},
                 {"gamma", r.scaled[2]}};
  j["scaled_sum"] = r.scaled.sum();
  j["final_nll"] = r.final_nll;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["separable"] = r.separable;
  if (r.separable) {
    j["blowup_direction"] = {r.blowup_direction[0], r.blowup_direction[1],
                             r.blowup_direction[2]};
  }
  return j;
}

}  // namespace bargain
