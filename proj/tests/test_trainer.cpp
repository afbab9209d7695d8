#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "songpop/trainer.hpp"
#include "support/fixtures.hpp"

using namespace songpop;
using songpop::testing::synth_splits;

namespace {

SegmentEmbeddingSet random_set(int n_segments, std::uint64_t seed) {
  Rng rng(seed);
  SegmentEmbeddingSet s{"s", MatrixXd(kEmbeddingDim, n_segments * kEmbeddingLayers)};
  for (Eigen::Index i = 0; i < s.values.size(); ++i) s.values.data()[i] = rng.normal();
  return s;
}

// Single-scalar parameter set: only the aggregation weight vector, length 1.
Params<double> scalar_params(double theta) {
  Params<double> p;
  p.agg_weights = VectorXd::Constant(1, theta);
  p.agg_bias = VectorXd::Zero(0);
  p.log_variance = VectorXd::Zero(0);
  return p;
}

TrainConfig small_config() {
  TrainConfig c;
  c.tasks = TaskMode::kPopularity;
  c.batch_size = 16;
  c.max_epochs = 4;
  c.lr0 = 1e-3;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("build_inputs: one segment gives the same input in both modes") {
  const auto set = random_set(1, 1);
  const auto seg = build_inputs(set, InputMode::kSegment);
  const auto song = build_inputs(set, InputMode::kSong);
  REQUIRE(seg.size() == 1);
  REQUIRE(song.size() == 1);
  CHECK(seg[0] == song[0]);
}

TEST_CASE("build_inputs: opposite segments average to zero") {
  auto set = random_set(1, 2);
  MatrixXd both(set.values.rows(), 8);
  both << set.values, -set.values;
  set.values = both;
  const auto song = build_inputs(set, InputMode::kSong);
  REQUIRE(song.size() == 1);
  CHECK(song[0].cwiseAbs().maxCoeff() == 0.0);
  CHECK(build_inputs(set, InputMode::kSegment).size() == 2);
}

TEST_CASE("build_inputs: song mode matches a per-element mean") {
  const auto set = random_set(5, 3);
  const auto song = build_inputs(set, InputMode::kSong);
  const auto seg = build_inputs(set, InputMode::kSegment);
  REQUIRE(seg.size() == 5);
  double worst = 0.0;
  for (int d = 0; d < static_cast<int>(kEmbeddingDim); ++d) {
    for (int l = 0; l < 4; ++l) {
      double s = 0.0;
      for (int k = 0; k < 5; ++k) s += set.values(d, k * 4 + l);
      worst = std::max(worst, std::abs(s / 5.0 - song[0](d, l)));
      CHECK(seg[2](d, l) == set.values(d, 2 * 4 + l));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("cosine_lr endpoints and midpoint") {
  CHECK(cosine_lr(0, 100, 1e-4, 0.0) == doctest::Approx(1e-4).epsilon(1e-15));
  CHECK(std::abs(cosine_lr(100, 100, 1e-4, 0.0)) < 1e-20);
  CHECK(cosine_lr(50, 100, 1e-4, 2e-5) == doctest::Approx(6e-5).epsilon(1e-12));
  CHECK(cosine_lr(150, 100, 1e-4, 2e-5) == 2e-5);
  for (int t = 1; t <= 100; ++t) CHECK(cosine_lr(t, 100, 1e-4, 0) <= cosine_lr(t - 1, 100, 1e-4, 0));
}

TEST_CASE("adamw_step single-step closed forms") {
  {
    auto p = scalar_params(1.0);
    auto g = scalar_params(1.0);
    auto st = OptimizerState::for_params(p);
    adamw_step(p, g, st, 0.1, 0.0);
    CHECK(p.agg_weights(0) == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));
    CHECK(st.step == 1);
  }
  {
    auto p = scalar_params(1.0);
    auto g = scalar_params(1.0);
    auto st = OptimizerState::for_params(p);
    adamw_step(p, g, st, 0.1, 0.01);
    CHECK(p.agg_weights(0) == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8) - 0.001).epsilon(1e-15));
    CHECK(p.agg_weights(0) == doctest::Approx(0.899).epsilon(1e-7));
  }
  {
    auto p = scalar_params(1.0);
    auto g = scalar_params(0.0);
    auto st = OptimizerState::for_params(p);
    adamw_step(p, g, st, 0.1, 0.0);
    CHECK(p.agg_weights(0) == 1.0);
  }
}

TEST_CASE("adamw_step decays only linear weights and biases") {
  const ArchConfig arch = ArchConfig::standard(TrunkDepth::kTwo, TaskMode::kPopularity);
  auto model = init_model<double>(arch, 3);
  model.params.log_variance.setConstant(0.7);
  const Params<double> before = model.params;
  const Params<double> grads = zeros_like(model.params);
  auto st = OptimizerState::for_params(model.params);
  adamw_step(model.params, grads, st, 0.1, 0.5);

  auto after_slots = tensors(model.params);
  Params<double> before_copy = before;
  auto before_slots = tensors(before_copy);
  for (std::size_t s = 0; s < after_slots.size(); ++s) {
    const std::string& name = after_slots[s].name;
    const bool expect_decay = name.find("gain") == std::string::npos &&
                              name.find("shift") == std::string::npos && name != "log_variance";
    CHECK_MESSAGE(after_slots[s].decay == expect_decay, name);
    for (Eigen::Index i = 0; i < after_slots[s].size; ++i) {
      const double want = expect_decay ? before_slots[s].data[i] * (1.0 - 0.05) : before_slots[s].data[i];
      if (after_slots[s].data[i] != doctest::Approx(want).epsilon(1e-14)) {
        FAIL_CHECK(name << "[" << i << "]");
        break;
      }
    }
  }
}

TEST_CASE("adamw_step with zero decay is bitwise Adam") {
  const ArchConfig arch = ArchConfig::standard(TrunkDepth::kTwo, TaskMode::kPopularity);
  auto model = init_model<double>(arch, 9);
  Params<double> reference = model.params;
  auto st = OptimizerState::for_params(model.params);

  Params<double> m = zeros_like(reference), v = zeros_like(reference);
  Rng rng(4);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 3e-3;
  for (int step = 1; step <= 5; ++step) {
    Params<double> g = zeros_like(reference);
    for (auto& slot : tensors(g)) {
      for (Eigen::Index i = 0; i < slot.size; ++i) slot.data[i] = rng.normal();
    }
    adamw_step(model.params, g, st, lr, 0.0);

    auto ps = tensors(reference);
    auto gs = tensors(g);
    auto ms = tensors(m);
    auto vs = tensors(v);
    for (std::size_t s = 0; s < ps.size(); ++s) {
      for (Eigen::Index i = 0; i < ps[s].size; ++i) {
        ms[s].data[i] = b1 * ms[s].data[i] + (1.0 - b1) * gs[s].data[i];
        vs[s].data[i] = b2 * vs[s].data[i] + (1.0 - b2) * gs[s].data[i] * gs[s].data[i];
        const double mh = ms[s].data[i] / (1.0 - std::pow(b1, step));
        const double vh = vs[s].data[i] / (1.0 - std::pow(b2, step));
        ps[s].data[i] = ps[s].data[i] - lr * mh / (std::sqrt(vh) + eps);
      }
    }
  }
  auto a = tensors(model.params);
  auto b = tensors(reference);
  bool identical = true;
  for (std::size_t s = 0; s < a.size(); ++s) {
    for (Eigen::Index i = 0; i < a[s].size; ++i) identical &= a[s].data[i] == b[s].data[i];
  }
  CHECK(identical);
}

TEST_CASE("adamw_step refuses non-finite gradients without side effects") {
  auto p = scalar_params(1.0);
  auto g = scalar_params(std::nan(""));
  auto st = OptimizerState::for_params(p);
  CHECK_THROWS_AS(adamw_step(p, g, st, 0.1, 0.0), NumericError);
  CHECK(p.agg_weights(0) == 1.0);
  CHECK(st.step == 0);
  CHECK(st.m.agg_weights(0) == 0.0);
}

TEST_CASE("train config parsing") {
  const TrainConfig c = parse_train_config(
      R"({"loss":"weighted","depth":3,"mode":"segment","tasks":"popularity","batch_size":64,"seed":9})");
  CHECK(c.loss == LossKind::kWeighted);
  CHECK(c.depth == TrunkDepth::kThree);
  CHECK(c.mode == InputMode::kSegment);
  CHECK(c.tasks == TaskMode::kPopularity);
  CHECK(c.batch_size == 64);
  CHECK(c.seed == 9);
  CHECK(c.lr0 == 1e-4);
  CHECK(c.weight_decay == 1e-4);
  CHECK(c.max_epochs == 100);
  CHECK(c.patience == 10);

  const TrainConfig back = parse_train_config(format_train_config(c));
  CHECK(format_train_config(back) == format_train_config(c));

  CHECK_THROWS_AS(parse_train_config(R"({"learning_rate":0.1})"), ValidationError);
  CHECK_THROWS_AS(parse_train_config(R"({"batch_size":1})"), ValidationError);
  CHECK_THROWS_AS(parse_train_config(R"({"patience":0})"), ValidationError);
  CHECK_THROWS_AS(parse_train_config(R"({"lr0":0})"), ValidationError);
  CHECK_THROWS_AS(parse_train_config(R"({"loss":"focal"})"), ValidationError);
  CHECK_THROWS_AS(parse_train_config("[1]"), ValidationError);
}

TEST_CASE("assemble_datasets labels against the training split") {
  SynthSpec spec;
  spec.n_songs = 40;
  spec.seed = 2;
  auto data = synth_dataset(spec);
  data.records[0].streams_score = 12.5;
  data.records[0].likes_score = 7.0;
  const DatasetSplit split = stratified_split(data.records, kDefaultSplitFractions, 10, 3);
  const GridDatasets ds = assemble_datasets(data.records, data.embeddings, split);
  CHECK(ds.train.size() == split.train_ids.size());
  CHECK(ds.val.size() == split.val_ids.size());
  CHECK(ds.test.size() == split.test_ids.size());

  std::vector<std::uint64_t> train_streams;
  for (const auto& id : split.train_ids) {
    for (const auto& r : data.records) {
      if (r.song_id == id) train_streams.push_back(r.streams);
    }
  }
  for (const auto& song : ds.train) {
    const auto& r = *std::find_if(data.records.begin(), data.records.end(),
                                  [&](const SongRecord& x) { return x.song_id == song.song_id; });
    if (r.streams_score) {
      CHECK(song.labels.streams_score == 12.5);
      CHECK(song.labels.likes_score == 7.0);
      continue;
    }
    // Percentile of the count among training counts, by brute force.
    double less = 0, equal = 0;
    for (auto s : train_streams) {
      less += s < r.streams;
      equal += s == r.streams;
    }
    const double p = 100.0 * (less + 0.5 * (equal - 1.0)) / (train_streams.size() - 1.0);
    CHECK(song.labels.streams_score == doctest::Approx(power_transform(p)).epsilon(1e-12));
    REQUIRE(song.labels.aesthetics.has_value());
  }
}

TEST_CASE("train is deterministic for a fixed seed") {
  const GridDatasets ds = synth_splits(60, 1);
  const TrainConfig c = small_config();
  const auto a = train(ds.train, ds.val, c);
  const auto b = train(ds.train, ds.val, c);
  CHECK(a.report.train_losses == b.report.train_losses);
  CHECK(a.report.val_losses == b.report.val_losses);
  CHECK(encode_checkpoint(a.model) == encode_checkpoint(b.model));

  TrainConfig other = c;
  other.seed = 6;
  CHECK(train(ds.train, ds.val, other).report.train_losses != a.report.train_losses);
}

TEST_CASE("early stopping returns the best recorded epoch") {
  const GridDatasets ds = synth_splits(60, 4);
  TrainConfig c = small_config();
  c.patience = 1;
  c.max_epochs = 12;
  c.lr0 = 3e-2;  // large enough to make validation loss bounce
  const auto r = train(ds.train, ds.train, c);
  const auto& val = r.report.val_losses;
  REQUIRE(!val.empty());
  const auto argmin = std::min_element(val.begin(), val.end()) - val.begin();
  CHECK(r.report.best_epoch == argmin + 1);
  CHECK(r.report.best_epoch <= static_cast<int>(val.size()));
  if (r.report.stop_reason == StopReason::kPatience) {
    CHECK(val.size() == static_cast<std::size_t>(r.report.best_epoch + 1));
  } else {
    CHECK(val.size() == 12);
  }

  // The returned parameters reproduce the best epoch's validation loss.
  const MatrixXd pred = predict_songs(r.model, ds.train, c.mode);
  const MatrixXd target = song_targets(ds.train, c.tasks);
  VectorXd losses(pred.rows());
  for (Eigen::Index t = 0; t < pred.rows(); ++t) {
    losses(t) = (pred.row(t) - target.row(t)).squaredNorm() / static_cast<double>(pred.cols());
  }
  const double eta0 = r.model.params.log_variance(0), eta1 = r.model.params.log_variance(1);
  const double total = 0.5 * std::exp(-eta0) * losses(0) + 0.5 * eta0 +
                       0.5 * std::exp(-eta1) * losses(1) + 0.5 * eta1;
  CHECK(total == doctest::Approx(val[static_cast<std::size_t>(argmin)]).epsilon(1e-9));
}

TEST_CASE("training loss decreases monotonically early on a noiseless problem") {
  const GridDatasets ds = synth_splits(64, 8, SignalKind::kLinear, 1, 1);
  TrainConfig c;
  c.tasks = TaskMode::kPopularity;
  c.loss = LossKind::kEqual;
  c.batch_size = 64;
  c.max_epochs = 10;
  c.patience = 10;
  c.trunk_dropout = 0.0;
  c.head_dropout = 0.0;
  c.seed = 3;
  const auto r = train(ds.train, ds.val, c);
  REQUIRE(r.report.train_losses.size() == 10);
  for (std::size_t e = 1; e < 10; ++e) {
    CHECK_MESSAGE(r.report.train_losses[e] < r.report.train_losses[e - 1], "epoch " << e + 1);
  }
}

TEST_CASE("train fits a noiseless linear target") {
  // Targets are an affine function of the song-mean, layer-averaged embedding.
  GridDatasets ds = synth_splits(400, 12, SignalKind::kLinear, 1, 2);
  Rng rng(77);
  VectorXd direction(kEmbeddingDim);
  for (Eigen::Index i = 0; i < direction.size(); ++i) direction(i) = rng.normal();
  auto raw = [&](const LabeledSong& s) {
    const MatrixXd mean = build_inputs(s.embeddings, InputMode::kSong)[0];
    return direction.dot(mean.rowwise().mean());
  };
  double mu = 0.0, sq = 0.0;
  for (const auto& s : ds.train) {
    const double v = raw(s);
    mu += v;
    sq += v * v;
  }
  mu /= ds.train.size();
  const double sd = std::sqrt(sq / ds.train.size() - mu * mu);
  for (Dataset* set : {&ds.train, &ds.val, &ds.test}) {
    for (auto& s : *set) {
      s.labels.streams_score = std::clamp(50.0 + 12.0 * (raw(s) - mu) / sd, 0.0, 100.0);
      s.labels.likes_score = std::clamp(50.0 - 12.0 * (raw(s) - mu) / sd, 0.0, 100.0);
    }
  }
  TrainConfig c;
  c.tasks = TaskMode::kPopularity;
  c.batch_size = 32;
  c.lr0 = 1e-3;
  c.max_epochs = 50;
  c.seed = 1;
  const auto r = train(ds.train, ds.val, c);
  Dataset held_out = ds.test;
  held_out.insert(held_out.end(), ds.val.begin(), ds.val.end());
  const EvalReport ev = evaluate(r.model, held_out, c.mode);
  REQUIRE(ev.tasks.at("streams").pearson.has_value());
  MESSAGE("held-out streams pearson " << *ev.tasks.at("streams").pearson);
  CHECK(*ev.tasks.at("streams").pearson >= 0.99);
}

TEST_CASE("segment mode validates on song-aggregated predictions") {
  const GridDatasets ds = synth_splits(40, 5, SignalKind::kLinear, 2, 3);
  TrainConfig c = small_config();
  c.mode = InputMode::kSegment;
  c.max_epochs = 2;
  const auto r = train(ds.train, ds.val, c);
  const MatrixXd pred = predict_songs(r.model, ds.val, InputMode::kSegment);
  CHECK(pred.cols() == static_cast<Eigen::Index>(ds.val.size()));
  // Column j is the mean of the per-segment predictions of song j.
  const auto inputs = build_inputs(ds.val[0].embeddings, InputMode::kSegment);
  const MatrixXd per_seg = predict<double>(r.model, inputs);
  CHECK((per_seg.rowwise().mean() - pred.col(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("train rejects full tasks without aesthetic labels") {
  GridDatasets ds = synth_splits(30, 6);
  ds.train[0].labels.aesthetics.reset();
  TrainConfig c = small_config();
  c.tasks = TaskMode::kFull;
  CHECK_THROWS_AS(train(ds.train, ds.val, c), ValidationError);
}

TEST_CASE("grid enumeration covers the product exactly once") {
  const auto cells = enumerate_grid(GridAxes{}, TrainConfig{});
  CHECK(cells.size() == 24);
  std::set<std::tuple<LossKind, TrunkDepth, InputMode, TaskMode>> keys;
  std::set<std::uint64_t> seeds;
  for (const auto& c : cells) {
    keys.emplace(c.loss, c.depth, c.mode, c.tasks);
    seeds.insert(c.seed);
  }
  CHECK(keys.size() == 24);
  CHECK(seeds.size() == 24);
  CHECK(cells.front().loss == LossKind::kEqual);
  CHECK(cells.back().loss == LossKind::kUncertainty);
  CHECK(cells[1].tasks == TaskMode::kFull);  // task axis varies fastest

  GridAxes single;
  single.losses = {LossKind::kWeighted};
  single.depths = {TrunkDepth::kThree};
  single.modes = {InputMode::kSong};
  single.tasks = {TaskMode::kFull};
  const auto one = enumerate_grid(single, TrainConfig{});
  REQUIRE(one.size() == 1);
  const auto match = std::find_if(cells.begin(), cells.end(), [](const TrainConfig& c) {
    return c.loss == LossKind::kWeighted && c.depth == TrunkDepth::kThree &&
           c.mode == InputMode::kSong && c.tasks == TaskMode::kFull;
  });
  CHECK(match->seed == one[0].seed);

  GridAxes empty;
  empty.modes.clear();
  CHECK_THROWS_AS(enumerate_grid(empty, TrainConfig{}), ValidationError);
}

TEST_CASE("grid cells do not depend on execution order") {
  const GridDatasets ds = synth_splits(30, 10, SignalKind::kLinear, 1, 2);
  TrainConfig base;
  base.batch_size = 8;
  base.max_epochs = 1;
  base.seed = 21;
  GridAxes axes;
  axes.losses = {LossKind::kEqual, LossKind::kUncertainty};
  const auto forward_cells = run_grid(ds, axes, base, 1);
  std::vector<std::size_t> order(forward_cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
  const auto reversed = run_grid(ds, axes, base, 2, order);
  REQUIRE(forward_cells.size() == 16);
  REQUIRE(reversed.size() == 16);
  CHECK(format_grid_json(forward_cells) == format_grid_json(reversed));
  for (const auto& c : forward_cells) {
    CHECK(c.error.empty());
    REQUIRE(c.report.has_value());
    CHECK(c.report->test.has_value());
  }
}

TEST_CASE("a failing grid cell is recorded and the rest still run") {
  GridDatasets ds = synth_splits(30, 11);
  for (auto& s : ds.train) s.labels.aesthetics.reset();
  TrainConfig base;
  base.batch_size = 8;
  base.max_epochs = 1;
  GridAxes axes;
  axes.losses = {LossKind::kEqual};
  axes.depths = {TrunkDepth::kTwo};
  axes.modes = {InputMode::kSong};
  const auto cells = run_grid(ds, axes, base, 1);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].config.tasks == TaskMode::kPopularity);
  CHECK(cells[0].report.has_value());
  CHECK(cells[1].config.tasks == TaskMode::kFull);
  CHECK_FALSE(cells[1].report.has_value());
  CHECK(cells[1].error.find("aesthetic") != std::string::npos);
}

TEST_CASE("loss CSV has one row per epoch") {
  TrainReport r;
  r.train_losses = {3.0, 2.0};
  r.val_losses = {3.5, 2.5};
  r.best_epoch = 2;
  CHECK(format_loss_csv(r) == "epoch,train_loss,val_loss\n1,3,3.5\n2,2,2.5\n");
}
