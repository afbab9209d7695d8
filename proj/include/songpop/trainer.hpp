#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "songpop/datamodel.hpp"
#include "songpop/losses.hpp"
#include "songpop/metrics.hpp"
#include "songpop/network.hpp"
#include "songpop/scores.hpp"

namespace songpop {

enum class InputMode { kSegment, kSong };

std::string_view to_string(InputMode m);
InputMode parse_input_mode(std::string_view s);

/// One cell of the experimental grid plus optimizer settings.
struct TrainConfig {
  LossKind loss = LossKind::kUncertainty;
  TrunkDepth depth = TrunkDepth::kTwo;
  InputMode mode = InputMode::kSong;
  TaskMode tasks = TaskMode::kFull;
  double lr0 = 1e-4;
  double weight_decay = 1e-4;
  int batch_size = 512;
  int max_epochs = 100;
  int patience = 10;
  std::uint64_t seed = 0;
  double lr_min = 0.0;
  double trunk_dropout = 0.3;
  double head_dropout = 0.1;
  /// Overrides the default 5/5/1/1/1/1/1 weights of the weighted strategy.
  std::optional<std::vector<double>> manual_weights;

  void validate() const;
  ArchConfig arch() const;
  LossStrategy strategy() const;
};

/// Flat JSON object; every key optional, unknown keys rejected.
TrainConfig parse_train_config(std::string_view json_text);
std::string format_train_config(const TrainConfig& cfg);

struct LabeledSong {
  std::string song_id;
  SegmentEmbeddingSet embeddings;
  LabelVector labels;
};

using Dataset = std::vector<LabeledSong>;

/// Segment mode: one dim x 4 input per segment. Song mode: a single input,
/// the per-layer mean over segments. Every input carries weight 1.
std::vector<MatrixXd> build_inputs(const SegmentEmbeddingSet& emb, InputMode mode);

/// lr_min + 0.5 (lr0 - lr_min)(1 + cos(pi t / T)); t > T clamps to lr_min.
double cosine_lr(double t, double total, double lr0, double lr_min);

struct OptimizerState {
  Params<double> m;
  Params<double> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimizerState for_params(const Params<double>& params);
};

/// One AdamW update with decoupled decay on the tensors flagged `decay`.
/// Throws NumericError (leaving params and state untouched) on non-finite
/// gradients.
void adamw_step(Params<double>& params, const Params<double>& grads, OptimizerState& state,
                double lr, double weight_decay);

/// Eval-phase predictions per song (tasks x songs). Segment mode averages
/// per-segment predictions over each song.
MatrixXd predict_songs(const Model<double>& model, const Dataset& songs, InputMode mode);

/// Song-level targets (tasks x songs). Throws ValidationError when the
/// task mode needs aesthetic labels a song lacks.
MatrixXd song_targets(const Dataset& songs, TaskMode tasks);

struct EvalReport {
  std::size_t n_songs = 0;
  /// Keyed by task name.
  std::map<std::string, RegressionMetrics> tasks;
};

EvalReport evaluate(const Model<double>& model, const Dataset& songs, InputMode mode);

enum class StopReason { kPatience, kMaxEpochs };

struct TrainReport {
  std::vector<double> train_losses;  // per epoch, sample-weighted mean of batch totals
  std::vector<double> val_losses;    // per epoch, combined loss on song-level predictions
  int best_epoch = 0;                // 1-based
  StopReason stop_reason = StopReason::kMaxEpochs;
  std::optional<EvalReport> test;
};

struct TrainResult {
  Model<double> model;
  TrainReport report;
};

/// Called after every epoch with (epoch, train loss, val loss).
using EpochCallback = std::function<void(int, double, double)>;

TrainResult train(const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct GridAxes {
  std::vector<LossKind> losses = {LossKind::kEqual, LossKind::kWeighted, LossKind::kUncertainty};
  std::vector<TrunkDepth> depths = {TrunkDepth::kTwo, TrunkDepth::kThree};
  std::vector<InputMode> modes = {InputMode::kSegment, InputMode::kSong};
  std::vector<TaskMode> tasks = {TaskMode::kPopularity, TaskMode::kFull};
};

/// Cartesian product in (loss, depth, mode, task) order, loss outermost.
/// Each cell's seed is derived from `base.seed` and the cell's own axis
/// values, so it does not depend on grid composition or execution order.
std::vector<TrainConfig> enumerate_grid(const GridAxes& axes, const TrainConfig& base);

struct GridDatasets {
  Dataset train;
  Dataset val;
  Dataset test;
};

struct GridCell {
  TrainConfig config;
  std::optional<TrainReport> report;
  std::string error;  // non-empty when the cell failed
};

/// Trains and evaluates every cell. Results are in enumeration order
/// regardless of `execution_order` (a permutation of cell indices) or the
/// worker count. A failing cell records its error; the rest still run.
std::vector<GridCell> run_grid(const GridDatasets& data, const GridAxes& axes,
                               const TrainConfig& base, int workers = 1,
                               std::span<const std::size_t> execution_order = {});

/// Joins records with their embeddings (parallel spans) and splits them.
/// Scores come from the record when it already carries them, otherwise from
/// percentiles against the training split's count populations.
GridDatasets assemble_datasets(std::span<const SongRecord> records,
                               std::span<const SegmentEmbeddingSet> embeddings,
                               const DatasetSplit& split, const ScoreTransformConfig& cfg = {});

std::string format_train_report_json(const TrainConfig& config, const TrainReport& report);
std::string format_loss_csv(const TrainReport& report);
std::string format_eval_json(const EvalReport& report);
std::string format_grid_json(std::span<const GridCell> cells);

}  // namespace songpop
