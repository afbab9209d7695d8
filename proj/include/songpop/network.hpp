#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "songpop/common.hpp"

namespace songpop {

enum class TrunkDepth { kTwo, kThree };
enum class TaskMode { kPopularity, kFull };
enum class Phase { kTrain, kEval };

inline constexpr std::array<std::string_view, 7> kTaskNames = {
    "streams", "likes", "coherence", "musicality", "memorability", "clarity", "naturalness"};
inline constexpr int kPopularityTasks = 2;
inline constexpr int kLayerCount = 4;

std::string_view to_string(TrunkDepth d);
std::string_view to_string(TaskMode m);
TrunkDepth parse_depth(std::string_view s);
TaskMode parse_task_mode(std::string_view s);
int task_count(TaskMode m);

/// Layer widths and regularization of the shared trunk and task heads.
///
/// The standard configurations use 768-dim inputs; reduced configurations
/// with the same structure are used for gradient checks.
struct ArchConfig {
  int input_dim = 768;
  std::vector<int> trunk_widths = {512, 256};
  /// Hidden widths of every head; a final width-1 output layer follows.
  std::vector<int> head_widths = {128, 64};
  double trunk_dropout = 0.3;
  double head_dropout = 0.1;
  TaskMode tasks = TaskMode::kFull;

  static ArchConfig standard(TrunkDepth depth, TaskMode tasks);

  int n_tasks() const { return task_count(tasks); }
  int trunk_output_dim() const { return trunk_widths.back(); }
  void validate() const;
  bool operator==(const ArchConfig&) const = default;
};

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Learnable part of one layer. The plain output layer of each head has
/// empty `gain`/`shift`.
template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weight;  // out x in
  Vector<Scalar> bias;
  Vector<Scalar> gain;
  Vector<Scalar> shift;

  bool normalized() const { return gain.size() > 0; }
};

template <typename Scalar>
struct NormStats {
  Vector<Scalar> mean;
  Vector<Scalar> var;
};

/// Every learnable value of the model. Gradients use the same type.
template <typename Scalar>
struct Params {
  Vector<Scalar> agg_weights;  // one per encoder layer
  Vector<Scalar> agg_bias;     // size 1
  std::vector<DenseLayer<Scalar>> trunk;
  /// heads[t] = hidden layers followed by the 1-unit output layer.
  std::vector<std::vector<DenseLayer<Scalar>>> heads;
  /// Per-task eta = log(sigma^2) for the uncertainty loss.
  Vector<Scalar> log_variance;
};

template <typename Scalar>
struct Model {
  ArchConfig arch;
  Params<Scalar> params;
  std::vector<NormStats<Scalar>> trunk_stats;
  std::vector<std::vector<NormStats<Scalar>>> head_stats;  // hidden layers only
};

/// Non-owning handle on one parameter tensor.
template <typename Scalar>
struct TensorSlot {
  std::string name;
  Scalar* data;
  Eigen::Index size;
  /// Whether decoupled weight decay applies (linear weights and biases).
  bool decay;
};

/// Tensors in canonical order: aggregation weights, aggregation bias,
/// trunk layers (weight, bias, gain, shift), head layers by task, then
/// the log-variances.
template <typename Scalar>
std::vector<TensorSlot<Scalar>> tensors(Params<Scalar>& p);

template <typename Scalar>
Params<Scalar> zeros_like(const Params<Scalar>& p);

template <typename Scalar>
Eigen::Index parameter_count(const Params<Scalar>& p);

/// Weights ~ U(-sqrt(1/fan_in), sqrt(1/fan_in)), drawn in canonical tensor
/// order; biases and shifts 0; gains 1; running mean 0, var 1;
/// aggregation weights 0.25 and bias 0; log-variances 0.
template <typename Scalar>
Model<Scalar> init_model(const ArchConfig& arch, std::uint64_t seed);

template <typename To, typename From>
Model<To> cast_model(const Model<From>& m);

/// out_d = sum_l weights_l * segment(d, l) + bias for a dim x 4 segment.
template <typename Scalar>
Vector<Scalar> aggregate_layers(const Eigen::Ref<const Matrix<Scalar>>& segment,
                                const Eigen::Ref<const Vector<Scalar>>& weights,
                                Scalar bias);

/// B samples; layers[l] is input_dim x B.
template <typename Scalar>
struct Batch {
  std::array<Matrix<Scalar>, kLayerCount> layers;

  Eigen::Index size() const { return layers[0].cols(); }
};

/// Stacks dim x 4 samples into a batch.
template <typename Scalar>
Batch<Scalar> make_batch(std::span<const Matrix<Scalar>> samples);

/// Scaled keep masks (0 or 1/(1-p)) in order: trunk layers, then hidden
/// layers of each head by task.
template <typename Scalar>
struct DropoutMasks {
  std::vector<Matrix<Scalar>> masks;
};

template <typename Scalar>
struct LayerCache {
  Matrix<Scalar> input;
  Matrix<Scalar> normalized;  // xhat
  Matrix<Scalar> pre_activation;  // gain * xhat + shift
  Vector<Scalar> inv_std;
  Vector<Scalar> batch_mean;
  Vector<Scalar> batch_var;
  Matrix<Scalar> logits;  // output layers only
};

template <typename Scalar>
struct ForwardCache {
  Phase phase = Phase::kEval;
  ArchConfig arch;
  std::array<Matrix<Scalar>, kLayerCount> inputs;
  std::vector<LayerCache<Scalar>> trunk;
  std::vector<std::vector<LayerCache<Scalar>>> heads;
  DropoutMasks<Scalar> dropout;
};

template <typename Scalar>
struct ForwardResult {
  /// n_tasks x B in natural units: popularity tasks in (0, 100),
  /// aesthetic tasks in (1, 5).
  Matrix<Scalar> predictions;
  ForwardCache<Scalar> cache;
};

/// Full forward pass. Train phase uses batch statistics and draws dropout
/// masks from `rng` unless `fixed_masks` is given; running statistics are
/// not touched (see commit_batch_statistics). Eval phase ignores rng.
template <typename Scalar>
ForwardResult<Scalar> forward(const Model<Scalar>& model, const Batch<Scalar>& batch,
                              Phase phase, Rng* rng = nullptr,
                              const DropoutMasks<Scalar>* fixed_masks = nullptr);

/// running <- (1 - momentum) * running + momentum * batch, for every
/// normalized layer, using the batch statistics held in a train cache.
template <typename Scalar>
void commit_batch_statistics(Model<Scalar>& model, const ForwardCache<Scalar>& cache);

/// Exact gradients of sum(loss_grads .* predictions) with respect to every
/// parameter, given dL/dprediction (n_tasks x B). Batch-norm gradients flow
/// through the batch statistics. log_variance gradients are left at zero.
template <typename Scalar>
Params<Scalar> backward(const Model<Scalar>& model, const ForwardCache<Scalar>& cache,
                        const Matrix<Scalar>& loss_grads);

/// Eval-phase predictions (n_tasks x N) for dim x 4 samples, in chunks.
template <typename Scalar>
Matrix<Scalar> predict(const Model<Scalar>& model, std::span<const Matrix<Scalar>> samples,
                       Eigen::Index chunk = 1024);

// ---------------------------------------------------------------------------
// Checkpoints

template <typename Scalar>
std::string encode_checkpoint(const Model<Scalar>& model);
template <typename Scalar>
Model<Scalar> decode_checkpoint(std::string_view bytes);

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const Model<Scalar>& model);
template <typename Scalar>
Model<Scalar> load_checkpoint(const std::filesystem::path& path);

}  // namespace songpop
