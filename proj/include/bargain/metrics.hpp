#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "bargain/money.hpp"
#include "bargain/protocol.hpp"
#include "bargain/scenario.hpp"

namespace bargain {

// Weights fitted from pairwise human preferences and rescaled to sum to 3.
struct MeritCoefficients {
  double alpha = 1.0139;  // consumer surplus
  double beta = 0.8812;   // negotiation power
  double gamma = 1.1049;  // acquisition ratio

  double sum() const { return alpha + beta + gamma; }
};

MeritCoefficients default_coefficients();
MeritCoefficients coefficients_from_json(const Json& j);
MeritCoefficients load_coefficients(const std::filesystem::path& path);
Json coefficients_to_json(const MeritCoefficients& c);

struct MeritOptions {
  // Whether negotiation power clamps into [0, 1] like consumer surplus
  // does; only the lower end is forced by construction.
  bool clamp_np = true;
};

// Coefficients plus scoring options, as stored in a coefficients file:
// {"alpha": ..., "beta": ..., "gamma": ..., "clamp_np": true}.
struct MeritConfig {
  MeritCoefficients coefficients;
  MeritOptions options;
};

MeritConfig merit_config_from_json(const Json& j);
MeritConfig load_merit_config(const std::filesystem::path& path);

// (wtp - deal) / (wtp - cost), clamped to [0, 1]. Throws ValidationError on
// a degenerate band (cost >= wtp).
double consumer_surplus(Cents wtp, Cents deal, Cents cost);

// (initial - deal) / (initial - cost). Clamped to [0, 1] by default; the
// clamp is a toggle because only the lower bound is forced by construction.
double negotiation_power(Cents initial, Cents deal, Cents cost,
                         bool clamp = true);

// Cosine similarity of the two embeddings, clamped below at 0. Throws
// ValidationError on a zero vector.
double acquisition_ratio(const Eigen::VectorXd& acquired,
                         const Eigen::VectorXd& desired);

using EmbedFn = std::function<Eigen::VectorXd(const std::string&)>;

// AR for a purchased product: 1 for the desired product, else the product's
// precomputed ar_to_desired, else a live embedding comparison when an
// embedder is supplied. Throws ValidationError otherwise.
double acquisition_ratio_lookup(const std::string& acquired_id,
                                const Scenario& s,
                                const EmbedFn& embed = nullptr);

struct MeritComponents {
  double cs = 0;
  double np = 0;
  double ar = 0;
};

struct MeritBreakdown {
  bool dealt = false;
  double cs = 0;  // meaningful only when dealt
  double np = 0;
  double ar = 0;
  double merit = 0;
  std::optional<Cents> deal_price;
  std::optional<std::string> product;

  MeritComponents components() const { return {cs, np, ar}; }
};

// Scores one terminal dialogue. Impasse and quit score 0, the opportunity
// cost of walking away. Deals compute CS/NP from the dealt product's own
// wtp/cost/initial; AR is 1 in single mode and a lookup in multi mode.
MeritBreakdown score_dialogue(const DialogueRecord& record, const Scenario& s,
                              const MeritCoefficients& c,
                              const MeritOptions& options = {},
                              const EmbedFn& embed = nullptr);

Json breakdown_to_json(const MeritBreakdown& b);
MeritBreakdown breakdown_from_json(const Json& j);

}  // namespace bargain
