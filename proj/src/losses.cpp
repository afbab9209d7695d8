#include "songpop/losses.hpp"

#include <cmath>
#include <string>

namespace songpop {

std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::kEqual: return "equal";
    case LossKind::kWeighted: return "weighted";
    case LossKind::kUncertainty: return "uncertainty";
  }
  return "equal";
}

LossKind parse_loss_kind(std::string_view s) {
  if (s == "equal") return LossKind::kEqual;
  if (s == "weighted") return LossKind::kWeighted;
  if (s == "uncertainty") return LossKind::kUncertainty;
  throw ValidationError("unknown loss strategy '" + std::string(s) +
                        "' (expected equal|weighted|uncertainty)");
}

std::vector<double> LossStrategy::default_weights(int n_tasks) {
  std::vector<double> w(static_cast<std::size_t>(n_tasks), 1.0);
  for (int t = 0; t < n_tasks && t < 2; ++t) w[static_cast<std::size_t>(t)] = 5.0;
  return w;
}

LossStrategy LossStrategy::make(LossKind kind, int n_tasks) {
  return {kind, default_weights(n_tasks)};
}

TaskLoss task_mse(const Eigen::Ref<const VectorXd>& pred,
                  const Eigen::Ref<const VectorXd>& target) {
  if (pred.size() != target.size()) {
    throw DimensionError("task_mse: length mismatch (" + std::to_string(pred.size()) + " vs " +
                         std::to_string(target.size()) + ")");
  }
  if (pred.size() == 0) throw DimensionError("task_mse: empty batch");
  const auto b = static_cast<double>(pred.size());
  const VectorXd diff = pred - target;
  return {diff.squaredNorm() / b, (2.0 / b) * diff};
}

CombinedLoss combine_losses(const Eigen::Ref<const VectorXd>& losses,
                            const LossStrategy& strategy, const VectorXd* log_variance) {
  const Eigen::Index n = losses.size();
  const bool uncertainty = strategy.kind == LossKind::kUncertainty;
  if (uncertainty && log_variance == nullptr) {
    throw ValidationError("uncertainty loss needs log-variance parameters");
  }
  if (!uncertainty && log_variance != nullptr) {
    throw ValidationError(std::string(to_string(strategy.kind)) +
                          " loss takes no log-variance parameters");
  }
  CombinedLoss out;
  out.task_scale.resize(n);
  switch (strategy.kind) {
    case LossKind::kEqual:
      for (Eigen::Index i = 0; i < n; ++i) {
        out.total += losses(i);
        out.task_scale(i) = 1.0;
      }
      break;
    case LossKind::kWeighted:
      if (static_cast<Eigen::Index>(strategy.manual_weights.size()) != n) {
        throw DimensionError("weighted loss: " + std::to_string(strategy.manual_weights.size()) +
                             " weights for " + std::to_string(n) + " tasks");
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        const double w = strategy.manual_weights[static_cast<std::size_t>(i)];
        if (!(w > 0.0)) throw DomainError("weighted loss: weights must be positive");
        out.total += w * losses(i);
        out.task_scale(i) = w;
      }
      break;
    case LossKind::kUncertainty: {
      if (log_variance->size() != n) {
        throw DimensionError("uncertainty loss: " + std::to_string(log_variance->size()) +
                             " log-variances for " + std::to_string(n) + " tasks");
      }
      VectorXd d_eta(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double eta = (*log_variance)(i);
        const double precision_half = 0.5 * std::exp(-eta);
        out.total += precision_half * losses(i) + 0.5 * eta;
        out.task_scale(i) = precision_half;
        d_eta(i) = -precision_half * losses(i) + 0.5;
      }
      out.dtotal_deta = std::move(d_eta);
      break;
    }
  }
  return out;
}

}  // namespace songpop
