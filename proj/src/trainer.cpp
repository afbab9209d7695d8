#include "songpop/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

namespace songpop {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(InputMode m) { return m == InputMode::kSegment ? "segment" : "song"; }

InputMode parse_input_mode(std::string_view s) {
  if (s == "segment") return InputMode::kSegment;
  if (s == "song") return InputMode::kSong;
  throw ValidationError("unknown input mode '" + std::string(s) + "' (expected segment|song)");
}

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ValidationError("config: lr0 must be > 0");
  if (!(lr_min >= 0.0) || lr_min > lr0) throw ValidationError("config: lr_min must be in [0, lr0]");
  if (!(weight_decay >= 0.0)) throw ValidationError("config: weight_decay must be >= 0");
  if (batch_size < 2) throw ValidationError("config: batch_size must be >= 2");
  if (max_epochs < 1) throw ValidationError("config: max_epochs must be >= 1");
  if (patience < 1) throw ValidationError("config: patience must be >= 1");
  arch().validate();
  if (manual_weights) {
    if (static_cast<int>(manual_weights->size()) != task_count(tasks)) {
      throw ValidationError("config: manual_weights needs one weight per task");
    }
    for (double w : *manual_weights) {
      if (!(w > 0.0)) throw ValidationError("config: manual_weights must be positive");
    }
  }
}

ArchConfig TrainConfig::arch() const {
  ArchConfig a = ArchConfig::standard(depth, tasks);
  a.trunk_dropout = trunk_dropout;
  a.head_dropout = head_dropout;
  return a;
}

LossStrategy TrainConfig::strategy() const {
  LossStrategy s = LossStrategy::make(loss, task_count(tasks));
  if (manual_weights) s.manual_weights = *manual_weights;
  return s;
}

namespace {

template <typename T>
T get_as(const ordered_json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("config: bad value for '" + key + "'");
  }
}

std::string value_string(const ordered_json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ValidationError("config: bad value for '" + key + "'");
}

}  // namespace

TrainConfig parse_train_config(std::string_view json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  TrainConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "loss") c.loss = parse_loss_kind(value_string(v, key));
    else if (key == "depth") c.depth = parse_depth(value_string(v, key));
    else if (key == "mode") c.mode = parse_input_mode(value_string(v, key));
    else if (key == "tasks") c.tasks = parse_task_mode(value_string(v, key));
    else if (key == "lr0") c.lr0 = get_as<double>(v, key);
    else if (key == "weight_decay") c.weight_decay = get_as<double>(v, key);
    else if (key == "batch_size") c.batch_size = get_as<int>(v, key);
    else if (key == "max_epochs") c.max_epochs = get_as<int>(v, key);
    else if (key == "patience") c.patience = get_as<int>(v, key);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
    else if (key == "lr_min") c.lr_min = get_as<double>(v, key);
    else if (key == "trunk_dropout") c.trunk_dropout = get_as<double>(v, key);
    else if (key == "head_dropout") c.head_dropout = get_as<double>(v, key);
    else if (key == "manual_weights") c.manual_weights = get_as<std::vector<double>>(v, key);
    else throw ValidationError("config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

namespace {

ordered_json config_json(const TrainConfig& c) {
  ordered_json j;
  j["loss"] = std::string(to_string(c.loss));
  j["depth"] = c.depth == TrunkDepth::kTwo ? 2 : 3;
  j["mode"] = std::string(to_string(c.mode));
  j["tasks"] = std::string(to_string(c.tasks));
  j["lr0"] = c.lr0;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["lr_min"] = c.lr_min;
  j["trunk_dropout"] = c.trunk_dropout;
  j["head_dropout"] = c.head_dropout;
  if (c.manual_weights) j["manual_weights"] = *c.manual_weights;
  return j;
}

}  // namespace

std::string format_train_config(const TrainConfig& cfg) { return config_json(cfg).dump(); }

// ---------------------------------------------------------------------------
// Inputs, schedule, optimizer

std::vector<MatrixXd> build_inputs(const SegmentEmbeddingSet& emb, InputMode mode) {
  const Eigen::Index n = emb.n_segments();
  if (n < 1) throw DimensionError("build_inputs: no segments for " + emb.song_id);
  std::vector<MatrixXd> out;
  if (mode == InputMode::kSegment) {
    out.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index s = 0; s < n; ++s) out.emplace_back(emb.segment(s));
    return out;
  }
  MatrixXd mean = emb.segment(0);
  for (Eigen::Index s = 1; s < n; ++s) mean += emb.segment(s);
  mean /= static_cast<double>(n);
  out.push_back(std::move(mean));
  return out;
}

double cosine_lr(double t, double total, double lr0, double lr_min) {
  if (!(total >= 1.0)) throw DomainError("cosine_lr: total epochs must be >= 1");
  if (t < 0.0) throw DomainError("cosine_lr: negative epoch index");
  if (t >= total) return lr_min;
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(std::numbers::pi * t / total));
}

OptimizerState OptimizerState::for_params(const Params<double>& params) {
  OptimizerState s;
  s.m = zeros_like(params);
  s.v = zeros_like(params);
  return s;
}

void adamw_step(Params<double>& params, const Params<double>& grads, OptimizerState& state,
                double lr, double weight_decay) {
  if (!(lr >= 0.0)) throw DomainError("adamw_step: lr must be >= 0");
  Params<double> g_copy = grads;
  auto p = tensors(params);
  auto g = tensors(g_copy);
  auto m = tensors(state.m);
  auto v = tensors(state.v);
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size()) {
    throw DimensionError("adamw_step: parameter/gradient/state structure mismatch");
  }
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (p[s].size != g[s].size || p[s].size != m[s].size || p[s].size != v[s].size) {
      throw DimensionError("adamw_step: shape mismatch in " + p[s].name);
    }
    for (Eigen::Index i = 0; i < g[s].size; ++i) {
      if (!std::isfinite(g[s].data[i])) {
        throw NumericError("adamw_step: non-finite gradient in " + g[s].name);
      }
    }
  }
  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t s = 0; s < p.size(); ++s) {
    const double decay = p[s].decay ? lr * weight_decay : 0.0;
    for (Eigen::Index i = 0; i < p[s].size; ++i) {
      const double gi = g[s].data[i];
      double& mi = m[s].data[i];
      double& vi = v[s].data[i];
      mi = b1 * mi + (1.0 - b1) * gi;
      vi = b2 * vi + (1.0 - b2) * gi * gi;
      const double m_hat = mi / bc1;
      const double v_hat = vi / bc2;
      double& theta = p[s].data[i];
      theta = theta - lr * m_hat / (std::sqrt(v_hat) + state.eps) - decay * theta;
    }
  }
}

// ---------------------------------------------------------------------------
// Prediction and evaluation

namespace {

struct PreparedInputs {
  std::vector<MatrixXd> samples;
  std::vector<std::size_t> song_of;  // sample -> song index
  std::size_t n_songs = 0;
};

PreparedInputs prepare(const Dataset& songs, InputMode mode) {
  PreparedInputs p;
  p.n_songs = songs.size();
  for (std::size_t i = 0; i < songs.size(); ++i) {
    for (MatrixXd& s : build_inputs(songs[i].embeddings, mode)) {
      p.samples.push_back(std::move(s));
      p.song_of.push_back(i);
    }
  }
  return p;
}

MatrixXd predict_prepared(const Model<double>& model, const PreparedInputs& in) {
  const MatrixXd per_sample = predict<double>(model, in.samples);
  MatrixXd out(per_sample.rows(), static_cast<Eigen::Index>(in.n_songs));
  std::size_t start = 0;
  for (std::size_t song = 0; song < in.n_songs; ++song) {
    std::size_t end = start;
    while (end < in.song_of.size() && in.song_of[end] == song) ++end;
    out.col(static_cast<Eigen::Index>(song)) = aggregate_song_predictions(
        per_sample.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start)));
    start = end;
  }
  return out;
}

double combined_loss_of(const MatrixXd& preds, const MatrixXd& targets,
                        const LossStrategy& strategy, const Model<double>& model) {
  VectorXd losses(preds.rows());
  for (Eigen::Index t = 0; t < preds.rows(); ++t) {
    losses(t) = task_mse(preds.row(t).transpose(), targets.row(t).transpose()).loss;
  }
  const bool uncertainty = strategy.kind == LossKind::kUncertainty;
  return combine_losses(losses, strategy, uncertainty ? &model.params.log_variance : nullptr).total;
}

Batch<double> gather(const std::vector<MatrixXd>& samples, std::span<const std::size_t> idx) {
  const Eigen::Index dim = samples.front().rows();
  const auto b = static_cast<Eigen::Index>(idx.size());
  Batch<double> batch;
  for (auto& layer : batch.layers) layer.resize(dim, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const MatrixXd& s = samples[idx[static_cast<std::size_t>(j)]];
    for (int l = 0; l < kLayerCount; ++l) batch.layers[l].col(j) = s.col(l);
  }
  return batch;
}

}  // namespace

MatrixXd predict_songs(const Model<double>& model, const Dataset& songs, InputMode mode) {
  if (songs.empty()) return MatrixXd(model.arch.n_tasks(), 0);
  return predict_prepared(model, prepare(songs, mode));
}

MatrixXd song_targets(const Dataset& songs, TaskMode tasks) {
  const int n_tasks = task_count(tasks);
  MatrixXd out(n_tasks, static_cast<Eigen::Index>(songs.size()));
  for (std::size_t i = 0; i < songs.size(); ++i) {
    const LabelVector& l = songs[i].labels;
    const auto col = static_cast<Eigen::Index>(i);
    out(0, col) = l.streams_score;
    out(1, col) = l.likes_score;
    if (tasks == TaskMode::kFull) {
      if (!l.aesthetics) {
        throw ValidationError("song " + songs[i].song_id +
                              " has no aesthetic labels but the task mode is full");
      }
      for (int k = 0; k < 5; ++k) out(2 + k, col) = (*l.aesthetics)[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

EvalReport evaluate(const Model<double>& model, const Dataset& songs, InputMode mode) {
  const MatrixXd preds = predict_songs(model, songs, mode);
  const MatrixXd targets = song_targets(songs, model.arch.tasks);
  EvalReport r;
  r.n_songs = songs.size();
  for (Eigen::Index t = 0; t < preds.rows(); ++t) {
    const VectorXd p = preds.row(t).transpose();
    const VectorXd y = targets.row(t).transpose();
    r.tasks[std::string(kTaskNames[static_cast<std::size_t>(t)])] =
        regression_metrics(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                           std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Training

TrainResult train(const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty() || val_set.empty()) throw ValidationError("train: empty train or val split");

  const ArchConfig arch = config.arch();
  const LossStrategy strategy = config.strategy();
  const bool uncertainty = strategy.kind == LossKind::kUncertainty;

  const PreparedInputs train_in = prepare(train_set, config.mode);
  const PreparedInputs val_in = prepare(val_set, config.mode);
  const MatrixXd train_song_targets = song_targets(train_set, config.tasks);
  const MatrixXd val_targets = song_targets(val_set, config.tasks);
  const std::size_t n = train_in.samples.size();
  if (n < 2) throw ValidationError("train: need at least 2 training samples");
  for (const auto& s : train_in.samples) {
    if (s.rows() != arch.input_dim) {
      throw DimensionError("train: embeddings have dim " + std::to_string(s.rows()) +
                           ", model expects " + std::to_string(arch.input_dim));
    }
  }
  MatrixXd sample_targets(train_song_targets.rows(), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    sample_targets.col(static_cast<Eigen::Index>(i)) =
        train_song_targets.col(static_cast<Eigen::Index>(train_in.song_of[i]));
  }

  TrainResult result{init_model<double>(arch, derive_seed(config.seed, 0)), {}};
  Model<double>& model = result.model;
  Rng shuffle_rng(derive_seed(config.seed, 1));
  Rng dropout_rng(derive_seed(config.seed, 2));
  OptimizerState opt = OptimizerState::for_params(model.params);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  Model<double> best = model;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  TrainReport& report = result.report;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const double lr = cosine_lr(epoch, config.max_epochs, config.lr0, config.lr_min);
    shuffle_rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    std::size_t start = 0;
    int step = 0;
    while (start < n) {
      std::size_t end = std::min(n, start + batch_size);
      // A trailing batch of one cannot be batch-normalized; fold it in.
      if (n - end == 1) end = n;
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      try {
        const Batch<double> batch = gather(train_in.samples, idx);
        const auto fwd = forward(model, batch, Phase::kTrain, &dropout_rng);
        const auto b = static_cast<Eigen::Index>(idx.size());
        MatrixXd targets(sample_targets.rows(), b);
        for (Eigen::Index j = 0; j < b; ++j) {
          targets.col(j) = sample_targets.col(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));
        }
        VectorXd losses(targets.rows());
        MatrixXd loss_grads(targets.rows(), b);
        for (Eigen::Index t = 0; t < targets.rows(); ++t) {
          TaskLoss tl = task_mse(fwd.predictions.row(t).transpose(), targets.row(t).transpose());
          losses(t) = tl.loss;
          loss_grads.row(t) = tl.grad.transpose();
        }
        const CombinedLoss combined =
            combine_losses(losses, strategy, uncertainty ? &model.params.log_variance : nullptr);
        loss_grads.array().colwise() *= combined.task_scale.array();
        Params<double> grads = backward(model, fwd.cache, loss_grads);
        if (combined.dtotal_deta) grads.log_variance = *combined.dtotal_deta;
        adamw_step(model.params, grads, opt, lr, config.weight_decay);
        commit_batch_statistics(model, fwd.cache);
        epoch_loss += combined.total * static_cast<double>(b);
      } catch (const Error& e) {
        throw RuntimeFailure("train: epoch " + std::to_string(epoch + 1) + " step " +
                             std::to_string(step + 1) + ": " + e.what());
      }
      start = end;
      ++step;
    }
    epoch_loss /= static_cast<double>(n);

    const MatrixXd val_pred = predict_prepared(model, val_in);
    const double val_loss = combined_loss_of(val_pred, val_targets, strategy, model);
    if (!std::isfinite(val_loss)) {
      throw NumericError("train: non-finite validation loss at epoch " + std::to_string(epoch + 1));
    }
    report.train_losses.push_back(epoch_loss);
    report.val_losses.push_back(val_loss);
    if (on_epoch) on_epoch(epoch + 1, epoch_loss, val_loss);

    if (val_loss < best_val) {
      best_val = val_loss;
      best = model;
      report.best_epoch = epoch + 1;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      report.stop_reason = StopReason::kPatience;
      break;
    }
  }
  model = std::move(best);
  return result;
}

// ---------------------------------------------------------------------------
// Grid

std::vector<TrainConfig> enumerate_grid(const GridAxes& axes, const TrainConfig& base) {
  if (axes.losses.empty() || axes.depths.empty() || axes.modes.empty() || axes.tasks.empty()) {
    throw ValidationError("grid: every axis needs at least one value");
  }
  std::vector<TrainConfig> out;
  for (LossKind loss : axes.losses) {
    for (TrunkDepth depth : axes.depths) {
      for (InputMode mode : axes.modes) {
        for (TaskMode tasks : axes.tasks) {
          TrainConfig c = base;
          c.loss = loss;
          c.depth = depth;
          c.mode = mode;
          c.tasks = tasks;
          if (c.manual_weights && static_cast<int>(c.manual_weights->size()) != task_count(tasks)) {
            c.manual_weights.reset();
          }
          const auto cell_code = static_cast<std::uint64_t>(
              ((static_cast<int>(loss) * 2 + static_cast<int>(depth)) * 2 + static_cast<int>(mode)) * 2 +
              static_cast<int>(tasks));
          c.seed = derive_seed(base.seed, 1000 + cell_code);
          out.push_back(std::move(c));
        }
      }
    }
  }
  return out;
}

std::vector<GridCell> run_grid(const GridDatasets& data, const GridAxes& axes,
                               const TrainConfig& base, int workers,
                               std::span<const std::size_t> execution_order) {
  const std::vector<TrainConfig> configs = enumerate_grid(axes, base);
  std::vector<std::size_t> order;
  if (execution_order.empty()) {
    order.resize(configs.size());
    std::iota(order.begin(), order.end(), 0);
  } else {
    order.assign(execution_order.begin(), execution_order.end());
    std::vector<std::size_t> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted.size() != configs.size() || sorted[i] != i) {
        throw ValidationError("run_grid: execution order is not a permutation of the cells");
      }
    }
  }

  std::vector<GridCell> cells(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) cells[i].config = configs[i];

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < order.size(); k = next++) {
      GridCell& cell = cells[order[k]];
      try {
        TrainResult r = train(data.train, data.val, cell.config);
        r.report.test = evaluate(r.model, data.test, cell.config.mode);
        cell.report = std::move(r.report);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(order.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  return cells;
}

GridDatasets assemble_datasets(std::span<const SongRecord> records,
                               std::span<const SegmentEmbeddingSet> embeddings,
                               const DatasetSplit& split, const ScoreTransformConfig& cfg) {
  if (records.size() != embeddings.size()) {
    throw DimensionError("assemble_datasets: records and embeddings differ in length");
  }
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) index.emplace(records[i].song_id, i);
  auto lookup = [&](const std::string& id) {
    const auto it = index.find(id);
    if (it == index.end()) throw ValidationError("split names unknown song_id " + id);
    return it->second;
  };

  std::vector<std::uint64_t> streams, likes;
  for (const std::string& id : split.train_ids) {
    const SongRecord& r = records[lookup(id)];
    streams.push_back(r.streams);
    likes.push_back(r.likes);
  }
  if (streams.size() < 2) throw ValidationError("assemble_datasets: training split needs >= 2 songs");
  const PercentileReference streams_ref(streams);
  const PercentileReference likes_ref(likes);

  auto build = [&](const std::vector<std::string>& ids) {
    Dataset out;
    out.reserve(ids.size());
    for (const std::string& id : ids) {
      const std::size_t i = lookup(id);
      const SongRecord& r = records[i];
      LabelVector labels = build_labels(r, streams_ref.percentile(r.streams),
                                        likes_ref.percentile(r.likes), cfg);
      if (r.streams_score) labels.streams_score = *r.streams_score;
      if (r.likes_score) labels.likes_score = *r.likes_score;
      out.push_back({r.song_id, embeddings[i], std::move(labels)});
    }
    return out;
  };
  return {build(split.train_ids), build(split.val_ids), build(split.test_ids)};
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

ordered_json metrics_json(const RegressionMetrics& m) {
  ordered_json j;
  j["mse"] = m.mse;
  j["mae"] = m.mae;
  j["pearson"] = m.pearson ? ordered_json(*m.pearson) : ordered_json(nullptr);
  j["spearman"] = m.spearman ? ordered_json(*m.spearman) : ordered_json(nullptr);
  return j;
}

ordered_json eval_json(const EvalReport& r) {
  ordered_json j;
  j["n_songs"] = r.n_songs;
  ordered_json tasks = ordered_json::object();
  // task order, not alphabetical
  for (std::string_view name : kTaskNames) {
    const auto it = r.tasks.find(std::string(name));
    if (it != r.tasks.end()) tasks[std::string(name)] = metrics_json(it->second);
  }
  j["tasks"] = std::move(tasks);
  return j;
}

std::string_view to_string(StopReason r) {
  return r == StopReason::kPatience ? "patience" : "max_epochs";
}

ordered_json report_json(const TrainReport& r) {
  ordered_json j;
  j["epochs_run"] = r.train_losses.size();
  j["best_epoch"] = r.best_epoch;
  j["best_val_loss"] = r.best_epoch > 0 ? ordered_json(r.val_losses[static_cast<std::size_t>(r.best_epoch - 1)])
                                        : ordered_json(nullptr);
  j["stop_reason"] = std::string(to_string(r.stop_reason));
  j["train_losses"] = r.train_losses;
  j["val_losses"] = r.val_losses;
  j["test"] = r.test ? eval_json(*r.test) : ordered_json(nullptr);
  return j;
}

}  // namespace

std::string format_train_report_json(const TrainConfig& config, const TrainReport& report) {
  ordered_json j;
  j["config"] = config_json(config);
  j["report"] = report_json(report);
  return j.dump(2) + "\n";
}

std::string format_loss_csv(const TrainReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss,val_loss\n";
  for (std::size_t i = 0; i < report.train_losses.size(); ++i) {
    out << i + 1 << ',' << report.train_losses[i] << ',' << report.val_losses[i] << '\n';
  }
  return out.str();
}

std::string format_eval_json(const EvalReport& report) { return eval_json(report).dump(2) + "\n"; }

std::string format_grid_json(std::span<const GridCell> cells) {
  ordered_json rows = ordered_json::array();
  for (const GridCell& c : cells) {
    ordered_json row;
    row["loss"] = std::string(to_string(c.config.loss));
    row["depth"] = c.config.depth == TrunkDepth::kTwo ? 2 : 3;
    row["mode"] = std::string(to_string(c.config.mode));
    row["tasks"] = std::string(to_string(c.config.tasks));
    row["seed"] = c.config.seed;
    if (c.report) {
      row["report"] = report_json(*c.report);
    } else {
      row["report"] = nullptr;
    }
    row["error"] = c.error.empty() ? ordered_json(nullptr) : ordered_json(c.error);
    rows.push_back(std::move(row));
  }
  ordered_json j;
  j["cells"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace songpop
