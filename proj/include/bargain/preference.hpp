#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bargain/metrics.hpp"

namespace bargain {

enum class PairKind { same_product, different_product };

std::string_view to_string(PairKind k);
PairKind pair_kind_from_string(std::string_view s);

// One pairwise comparison: the metric components of two scored dialogues and
// which one the annotator chose.
struct PreferencePair {
  MeritComponents b1;
  MeritComponents b2;
  int choice = 1;  // 1 | 2
  std::string annotator_id;
  std::string product_category;
  PairKind kind = PairKind::same_product;
  std::array<std::string, 2> dialogues{};  // optional dialogue references
};

// (dCS, dNP, dAR): first side minus second.
Eigen::Vector3d feature_delta(const PreferencePair& p);

// Negative log-likelihood of the observed choices under the logistic model
// p = sigmoid(alpha*dCS + beta*dNP + gamma*dAR), summed over pairs, plus an
// optional l2 * ||coeffs||^2 penalty. Numerically stable for large scores.
double nll(const Eigen::Vector3d& coeffs, std::span<const PreferencePair> pairs,
           double l2 = 0.0);

Eigen::Vector3d nll_gradient(const Eigen::Vector3d& coeffs,
                             std::span<const PreferencePair> pairs,
                             double l2 = 0.0);

struct FitOptions {
  // The step applies to the average per-pair gradient, so one learning rate
  // works at any dataset size.
  double lr = 0.1;
  int max_iters = 50000;
  double tol = 1e-8;  // on the gradient max-norm
  double l2 = 0.0;
};

struct FitResult {
  Eigen::Vector3d raw = Eigen::Vector3d::Ones();
  Eigen::Vector3d scaled = Eigen::Vector3d::Ones();  // rescaled to sum to 3
  double final_nll = 0.0;
  int iterations = 0;
  bool converged = false;
  // Perfectly separable data with l2 = 0 sends the coefficients to infinity;
  // the fit stops and reports the direction of blow-up instead.
  bool separable = false;
  Eigen::Vector3d blowup_direction = Eigen::Vector3d::Zero();
};

// Full-batch gradient descent from (1,1,1). Throws FitError on divergence
// (nll increasing across a patience window) and ValidationError on empty or
// all-zero-delta input.
FitResult fit_bradley_terry(std::span<const PreferencePair> pairs,
                            const FitOptions& options = {});

// Rank-based AUC with ties counted half. Throws ValidationError unless both
// classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct AnnotatorChecks {
  std::string annotator_id;
  std::vector<bool> checks;  // the 10 attention items, in order
};

// Keeps annotators who agreed with the expected option on at least 7 of the
// 10 check items. Throws ValidationError if an annotator's items are not
// exactly 10.
std::vector<std::string> attention_filter(
    std::span<const AnnotatorChecks> annotators);

struct PairFile {
  std::vector<PreferencePair> pairs;
  int dropped_ties = 0;  // records without a binary choice
};

PairFile load_preference_pairs(const std::filesystem::path& path);
void save_preference_pairs(const std::filesystem::path& path,
                           std::span<const PreferencePair> pairs);
Json pair_to_json(const PreferencePair& p);
PreferencePair pair_from_json(const Json& j);

Json fit_result_to_json(const FitResult& r);

}  // namespace bargain
