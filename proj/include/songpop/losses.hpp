#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "songpop/common.hpp"

namespace songpop {

enum class LossKind { kEqual, kWeighted, kUncertainty };

std::string_view to_string(LossKind k);
LossKind parse_loss_kind(std::string_view s);

struct LossStrategy {
  LossKind kind = LossKind::kEqual;
  /// Used by kWeighted; one weight per task.
  std::vector<double> manual_weights;

  /// 5.0 for streams and likes, 1.0 for each aesthetic task.
  static std::vector<double> default_weights(int n_tasks);
  static LossStrategy make(LossKind kind, int n_tasks);
};

struct TaskLoss {
  double loss;
  VectorXd grad;  // d loss / d prediction
};

/// Mean squared error over the batch and its gradient 2 (pred - target) / B.
TaskLoss task_mse(const Eigen::Ref<const VectorXd>& pred,
                  const Eigen::Ref<const VectorXd>& target);

struct CombinedLoss {
  double total = 0.0;
  /// Multiplier on each task's prediction gradients.
  VectorXd task_scale;
  /// Present for the uncertainty strategy only.
  std::optional<VectorXd> dtotal_deta;
};

/// Combines per-task losses.
///
///   equal:       sum L_i
///   weighted:    sum w_i L_i
///   uncertainty: sum 0.5 exp(-eta_i) L_i + 0.5 eta_i, with eta = log sigma^2
///
/// `log_variance` must be given exactly when the strategy is uncertainty.
CombinedLoss combine_losses(const Eigen::Ref<const VectorXd>& losses,
                            const LossStrategy& strategy,
                            const VectorXd* log_variance = nullptr);

}  // namespace songpop
