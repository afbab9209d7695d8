#include "songpop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "songpop/ranks.hpp"

namespace songpop {

VectorXd aggregate_song_predictions(const Eigen::Ref<const MatrixXd>& per_segment) {
  if (per_segment.cols() == 0) {
    throw DimensionError("aggregate_song_predictions: no segments");
  }
  return per_segment.rowwise().mean();
}

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, std::size_t min_size,
                const char* what) {
  if (x.size() != y.size()) {
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(x.size()) +
                         " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < min_size) {
    throw DimensionError(std::string(what) + ": need at least " + std::to_string(min_size) +
                         " values");
  }
}

}  // namespace

ErrorPair mse_mae(std::span<const double> preds, std::span<const double> targets) {
  check_pair(preds, targets, 1, "mse_mae");
  double se = 0.0, ae = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    se += d * d;
    ae += std::abs(d);
  }
  const auto n = static_cast<double>(preds.size());
  return {se / n, ae / n};
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2, "pearson");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw DomainError("pearson: correlation undefined for constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2, "spearman");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  return pearson(rx, ry);
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimensionError("auc: length mismatch");
  const std::vector<double> ranks = average_ranks(scores);
  double n_pos = 0.0, n_neg = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      n_pos += 1.0;
      rank_sum += ranks[i];
    } else if (labels[i] == 0) {
      n_neg += 1.0;
    } else {
      throw DomainError("auc: labels must be 0 or 1");
    }
  }
  if (n_pos == 0.0 || n_neg == 0.0) throw DomainError("auc: both classes must be present");
  return (rank_sum - 0.5 * n_pos * (n_pos + 1.0)) / (n_pos * n_neg);
}

double f1(std::span<const int> predictions, std::span<const int> labels, int positive_class) {
  if (predictions.size() != labels.size()) throw DimensionError("f1: length mismatch");
  if (predictions.empty()) throw DimensionError("f1: empty input");
  double tp = 0.0, fp = 0.0, fn = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred_pos = predictions[i] == positive_class;
    const bool true_pos = labels[i] == positive_class;
    if (pred_pos && true_pos) tp += 1.0;
    if (pred_pos && !true_pos) fp += 1.0;
    if (!pred_pos && true_pos) fn += 1.0;
  }
  const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double macro_f1(std::span<const int> predictions, std::span<const int> labels) {
  return 0.5 * (f1(predictions, labels, 1) + f1(predictions, labels, 0));
}

RegressionMetrics regression_metrics(std::span<const double> preds,
                                     std::span<const double> targets) {
  const ErrorPair e = mse_mae(preds, targets);
  RegressionMetrics m{e.mse, e.mae, std::nullopt, std::nullopt};
  if (preds.size() >= 2) {
    try {
      m.pearson = pearson(preds, targets);
      m.spearman = spearman(preds, targets);
    } catch (const DomainError&) {
      // undefined correlation stays absent
    }
  }
  return m;
}

}  // namespace songpop
