#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "songpop/common.hpp"

namespace songpop {

// Score dimensions of a battle side. The first seven are base scores, the
// last three are derived from them.
enum class Dimension {
  kStreams,
  kLikes,
  kCoherence,
  kMusicality,
  kMemorability,
  kClarity,
  kNaturalness,
  kCombinedPopularity,
  kCombinedSongeval,
  kCombinedOverall,
};

inline constexpr int kBaseDimensions = 7;
inline constexpr int kDimensions = 10;
inline constexpr int kFeatureCount = 3 * kDimensions + 1;

inline constexpr std::array<std::string_view, kDimensions> kDimensionNames = {
    "streams",   "likes",       "coherence",           "musicality",        "memorability",
    "clarity",   "naturalness", "combined_popularity", "combined_songeval", "combined_overall"};

std::string_view to_string(Dimension d);
Dimension parse_dimension(std::string_view s);

using BaseScores = std::array<double, kBaseDimensions>;

/// (streams + likes) / 2, mean aesthetic, and the mean of all seven scores
/// after mapping each onto [0, 1]. Throws DomainError on out-of-range input.
std::array<double, 3> combined_scores(const BaseScores& base);

class ScoreVector {
 public:
  ScoreVector() = default;
  explicit ScoreVector(const BaseScores& base);

  const BaseScores& base() const { return base_; }
  double operator[](Dimension d) const { return values_[static_cast<std::size_t>(d)]; }

 private:
  BaseScores base_{};
  std::array<double, kDimensions> values_{};
};

enum class Winner { kA, kB };

struct Battle {
  std::string battle_id;
  ScoreVector a;
  ScoreVector b;
  bool instrumental = false;
  Winner winner = Winner::kA;
};

/// Label used by the classifiers: 1 when A won.
inline int label_of(const Battle& b) { return b.winner == Winner::kA ? 1 : 0; }

/// Dimension-major layout: for dimension f (in Dimension order) the columns
/// 3f, 3f+1, 3f+2 hold delta, ratio and delta times the instrumental flag.
/// The last column is the flag itself.
using FeatureRow = std::array<double, kFeatureCount>;

FeatureRow battle_features(const Battle& b, double epsilon = 1e-9);
std::string feature_name(int column);

/// Feature columns belonging to `dims`, in ascending order, plus the
/// instrumental flag column.
std::vector<int> feature_columns(std::span<const Dimension> dims);

/// Rows of battle_features restricted to `columns`.
MatrixXd feature_matrix(std::span<const Battle> battles, std::span<const int> columns);

struct NaiveDecision {
  Winner winner;
  bool tie;
};

/// Sums the selected dimensions per side; exact ties go to A.
NaiveDecision naive_rule(const Battle& b, std::span<const Dimension> dims);

enum class ClassWeights { kBalanced, kNone };

struct LogRegOptions {
  double C = 0.1;
  ClassWeights class_weights = ClassWeights::kBalanced;
  int max_iter = 1000;
  double tolerance = 1e-6;  // on the gradient norm
};

struct LogRegModel {
  VectorXd beta;
  double intercept = 0.0;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
};

/// 0.5 |beta|^2 + C sum_i w_i log(1 + exp(-y_i (x_i . beta + b0))), y in {-1, +1}.
double logreg_objective(const MatrixXd& X, std::span<const int> y, const VectorXd& beta,
                        double intercept, const LogRegOptions& options);

/// Full-batch gradient descent with Armijo backtracking. The trial step
/// starts from the Barzilai-Borwein estimate. Returns the best iterate;
/// `converged` is false when max_iter was hit first.
LogRegModel logreg_fit(const MatrixXd& X, std::span<const int> y, const LogRegOptions& options = {});

VectorXd logreg_predict(const LogRegModel& model, const MatrixXd& X);

/// Pluggable binary classifier; `predict_proba` gives P(label = 1).
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const MatrixXd& X, std::span<const int> y) = 0;
  virtual VectorXd predict_proba(const MatrixXd& X) const = 0;
  /// Optional diagnostic recorded in the report (e.g. non-convergence).
  virtual std::optional<std::string> warning() const { return std::nullopt; }
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

class LogisticRegression : public Classifier {
 public:
  explicit LogisticRegression(LogRegOptions options = {}) : options_(options) {}
  void fit(const MatrixXd& X, std::span<const int> y) override;
  VectorXd predict_proba(const MatrixXd& X) const override;
  std::optional<std::string> warning() const override;
  const LogRegModel& model() const { return model_; }

 private:
  LogRegOptions options_;
  LogRegModel model_;
};

struct Standardizer {
  VectorXd mean;
  VectorXd scale;  // std, floored at 1e-12

  static Standardizer fit(const MatrixXd& X);
  MatrixXd apply(const MatrixXd& X) const;
};

/// Fold index per row. Each class is shuffled and dealt round-robin; the
/// second class continues where the first left off so fold sizes stay
/// balanced.
std::vector<int> stratified_kfold(std::span<const int> y, int k, std::uint64_t seed);

struct ClassificationMetrics {
  std::size_t n = 0;
  std::optional<double> auc;  // absent when only one class is present
  double f1 = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
};

/// Threshold 0.5 on the probabilities; positive class is "A won".
ClassificationMetrics classification_metrics(std::span<const double> probabilities,
                                             std::span<const int> labels);

struct FeatureSet {
  std::string name;
  std::vector<Dimension> dims;
};

FeatureSet popularity_feature_set();
FeatureSet full_feature_set();

struct CrossValReport {
  std::string feature_set;
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<ClassificationMetrics> folds;
  double mean_auc = 0.0;
  double mean_f1 = 0.0;
  double mean_macro_f1 = 0.0;
  /// Pooled out-of-fold predictions split by the instrumental flag.
  ClassificationMetrics instrumental;
  ClassificationMetrics vocal;
  std::vector<std::string> warnings;
};

CrossValReport cross_validate(std::span<const Battle> battles, const FeatureSet& features,
                              int k = 10, std::uint64_t seed = 0,
                              const ClassifierFactory& make_classifier = {});

struct NaiveRuleResult {
  FeatureSet features;
  ClassificationMetrics metrics;  // AUC scored by the sum difference
  std::size_t ties = 0;
};

NaiveRuleResult evaluate_naive_rule(std::span<const Battle> battles, const FeatureSet& features);

/// Single dimensions plus the popularity, aesthetic and all-base groups.
std::vector<FeatureSet> naive_rule_feature_sets();

struct PreferenceReport {
  std::size_t n_battles = 0;
  std::size_t n_positive = 0;
  std::vector<CrossValReport> cross_validation;
  std::vector<NaiveRuleResult> naive_rules;
};

/// Cross-validated logistic regression on the popularity-only and full
/// feature sets, plus the naive-rule table.
PreferenceReport preference_report(std::span<const Battle> battles, int k, std::uint64_t seed);
std::string format_preference_report(const PreferenceReport& report);

/// Line-delimited JSON with the seven base fields per side.
std::vector<Battle> parse_battles(std::string_view text);
std::string format_battles(std::span<const Battle> battles);
std::vector<Battle> load_battles(const std::filesystem::path& path);

}  // namespace songpop
