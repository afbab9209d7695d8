#pragma once

#include <optional>
#include <span>
#include <vector>

#include "songpop/common.hpp"

namespace songpop {

/// Per-dimension mean of a song's per-segment predictions (tasks x segments).
VectorXd aggregate_song_predictions(const Eigen::Ref<const MatrixXd>& per_segment);

struct ErrorPair {
  double mse;
  double mae;
};

ErrorPair mse_mae(std::span<const double> preds, std::span<const double> targets);

/// Sample correlation. Throws DomainError when either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average-tie ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// Mann-Whitney AUC: P(s+ > s-) + 0.5 P(s+ == s-). Labels are 0/1.
double auc(std::span<const double> scores, std::span<const int> labels);

/// F1 for `positive_class`; 0 when precision + recall is 0.
double f1(std::span<const int> predictions, std::span<const int> labels, int positive_class = 1);

/// Unweighted mean of the class-0 and class-1 F1 scores.
double macro_f1(std::span<const int> predictions, std::span<const int> labels);

struct RegressionMetrics {
  double mse = 0.0;
  double mae = 0.0;
  /// Absent when undefined (constant predictions or targets).
  std::optional<double> pearson;
  std::optional<double> spearman;
};

RegressionMetrics regression_metrics(std::span<const double> preds,
                                     std::span<const double> targets);

}  // namespace songpop
