#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "songpop/datamodel.hpp"
#include "songpop/io.hpp"
#include "songpop/network.hpp"
#include "songpop/preference.hpp"
#include "songpop/scores.hpp"
#include "songpop/synth.hpp"
#include "songpop/trainer.hpp"

namespace songpop::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Shared helpers

struct Context {
  std::ostream& out;
  std::ostream& err;
};

void log_config(const Context& ctx, std::string_view command, const ordered_json& config) {
  ctx.err << "songpop " << command << ": " << config.dump() << '\n';
}

void ensure_parent(const fs::path& path) {
  const fs::path parent = path.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw IoError("cannot create " + parent.string() + ": " + ec.message());
}

void emit(const Context& ctx, const std::string& target, const std::string& text) {
  if (target.empty()) {
    ctx.out << text;
    return;
  }
  ensure_parent(target);
  write_file_atomic(target, text);
}

fs::path embedding_store(const std::string& manifest, const std::string& embeddings) {
  if (!embeddings.empty()) return embeddings;
  return fs::path(manifest).parent_path();
}

struct Songs {
  std::vector<SongRecord> records;
  std::vector<SegmentEmbeddingSet> embeddings;
};

Songs load_songs(const std::string& manifest, const fs::path& store) {
  Songs s;
  s.records = load_manifest(manifest);
  s.embeddings.reserve(s.records.size());
  for (const SongRecord& r : s.records) s.embeddings.push_back(load_embeddings(store, r));
  return s;
}

DatasetSplit resolve_split(const std::vector<SongRecord>& records, const std::string& split_path,
                           std::uint64_t split_seed) {
  if (!split_path.empty()) return parse_split_json(read_file(split_path));
  return stratified_split(records, kDefaultSplitFractions, kDefaultStrata, split_seed);
}

// Applies whichever axis flags were given on top of a config.
struct AxisFlags {
  std::string loss, depth, mode, tasks;
  CLI::Option* loss_opt = nullptr;
  CLI::Option* depth_opt = nullptr;
  CLI::Option* mode_opt = nullptr;
  CLI::Option* tasks_opt = nullptr;

  void add_to(CLI::App* app) {
    loss_opt = app->add_option("--loss", loss, "Loss strategy: equal|weighted|uncertainty");
    depth_opt = app->add_option("--depth", depth, "Trunk depth: 2|3");
    mode_opt = app->add_option("--mode", mode, "Input mode: segment|song");
    tasks_opt = app->add_option("--tasks", tasks, "Task set: popularity|full");
  }

  void apply(TrainConfig& c) const {
    if (loss_opt->count()) c.loss = parse_loss_kind(loss);
    if (depth_opt->count()) c.depth = parse_depth(depth);
    if (mode_opt->count()) c.mode = parse_input_mode(mode);
    if (tasks_opt->count()) c.tasks = parse_task_mode(tasks);
  }
};

// ---------------------------------------------------------------------------
// ingest

struct IngestArgs {
  std::string manifest;
  std::string embeddings;
  std::string out;
  std::string report;
  bool drop_zero_streams = false;
  std::string dedup;
  std::string cutoff;
};

void cmd_ingest(const Context& ctx, const IngestArgs& a) {
  FilterRules rules;
  rules.drop_zero_streams = a.drop_zero_streams;
  if (a.dedup == "song_id") rules.dedup = DedupKey::kSongId;
  else if (a.dedup == "audio_hash") rules.dedup = DedupKey::kAudioHash;
  else if (!a.dedup.empty()) throw ValidationError("unknown dedup key '" + a.dedup + "' (expected song_id|audio_hash)");
  if (!a.cutoff.empty()) rules.recency_cutoff = parse_iso8601(a.cutoff);
  const fs::path store = embedding_store(a.manifest, a.embeddings);

  ordered_json cfg;
  cfg["manifest"] = a.manifest;
  cfg["embeddings"] = store.string();
  cfg["drop_zero_streams"] = a.drop_zero_streams;
  cfg["dedup"] = a.dedup.empty() ? ordered_json(nullptr) : ordered_json(a.dedup);
  cfg["recency_cutoff"] = a.cutoff.empty() ? ordered_json(nullptr) : ordered_json(a.cutoff);
  cfg["out"] = a.out;
  log_config(ctx, "ingest", cfg);

  const std::vector<SongRecord> records = load_manifest(a.manifest);
  const std::vector<SongRecord> kept = filter_songs(records, rules);
  std::size_t segments = 0;
  std::size_t with_aesthetics = 0;
  std::map<std::string, std::size_t> platforms;
  for (const SongRecord& r : kept) {
    segments += static_cast<std::size_t>(load_embeddings(store, r).n_segments());
    if (r.aesthetics) ++with_aesthetics;
    ++platforms[std::string(to_string(r.platform))];
  }

  ordered_json summary;
  summary["n_records"] = records.size();
  summary["n_kept"] = kept.size();
  summary["n_segments"] = segments;
  summary["n_with_aesthetics"] = with_aesthetics;
  summary["platforms"] = platforms;
  if (!a.out.empty()) {
    ensure_parent(a.out);
    write_file_atomic(a.out, format_manifest(kept));
  }
  emit(ctx, a.report, summary.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
  std::string manifest;
  std::string out;
  std::string split;
  double alpha = ScoreTransformConfig::default_alpha();
};

void cmd_score(const Context& ctx, const ScoreArgs& a) {
  ordered_json cfg;
  cfg["manifest"] = a.manifest;
  cfg["split"] = a.split.empty() ? ordered_json(nullptr) : ordered_json(a.split);
  cfg["alpha"] = a.alpha;
  cfg["out"] = a.out;
  log_config(ctx, "score", cfg);

  ScoreTransformConfig transform;
  transform.alpha = a.alpha;
  std::vector<SongRecord> records = load_manifest(a.manifest);
  std::vector<LabelVector> labels;
  if (a.split.empty()) {
    labels = label_records(records, transform);
  } else {
    const DatasetSplit split = parse_split_json(read_file(a.split));
    std::unordered_map<std::string_view, const SongRecord*> by_id;
    for (const SongRecord& r : records) by_id.emplace(r.song_id, &r);
    std::vector<std::uint64_t> streams, likes;
    for (const std::string& id : split.train_ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw ValidationError("split names unknown song_id " + id);
      streams.push_back(it->second->streams);
      likes.push_back(it->second->likes);
    }
    labels = label_records(records, PercentileReference(streams), PercentileReference(likes), transform);
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].streams_score = labels[i].streams_score;
    records[i].likes_score = labels[i].likes_score;
  }
  ensure_parent(a.out);
  write_file_atomic(a.out, format_manifest(records));
}

// ---------------------------------------------------------------------------
// split

struct SplitArgs {
  std::string manifest;
  std::string out;
  std::uint64_t seed = 0;
  std::vector<double> fractions{kDefaultSplitFractions.begin(), kDefaultSplitFractions.end()};
  int strata = kDefaultStrata;
  std::size_t downsample = 0;
};

void cmd_split(const Context& ctx, const SplitArgs& a) {
  if (a.fractions.size() != 3) throw ValidationError("--fractions needs three values (train,test,val)");
  ordered_json cfg;
  cfg["manifest"] = a.manifest;
  cfg["seed"] = a.seed;
  cfg["fractions"] = a.fractions;
  cfg["strata"] = a.strata;
  cfg["downsample"] = a.downsample;
  cfg["out"] = a.out;
  log_config(ctx, "split", cfg);

  std::vector<SongRecord> records = load_manifest(a.manifest);
  if (a.downsample > 0) {
    records = stratified_downsample(records, a.downsample, a.strata, derive_seed(a.seed, 0));
  }
  const std::array<double, 3> fractions{a.fractions[0], a.fractions[1], a.fractions[2]};
  const DatasetSplit split = stratified_split(records, fractions, a.strata, a.seed);
  ctx.err << "split: train " << split.train_ids.size() << ", test " << split.test_ids.size()
          << ", val " << split.val_ids.size() << '\n';
  emit(ctx, a.out, format_split_json(split));
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string manifest;
  std::string embeddings;
  std::string split;
  std::uint64_t split_seed = 0;
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  AxisFlags axes;
};

void cmd_train(const Context& ctx, const TrainArgs& a) {
  TrainConfig config = a.config.empty() ? TrainConfig{} : parse_train_config(read_file(a.config));
  if (a.seed_opt->count()) config.seed = a.seed;
  a.axes.apply(config);
  config.validate();
  const fs::path store = embedding_store(a.manifest, a.embeddings);

  ordered_json cfg;
  cfg["manifest"] = a.manifest;
  cfg["embeddings"] = store.string();
  cfg["split"] = a.split.empty() ? ordered_json(nullptr) : ordered_json(a.split);
  cfg["split_seed"] = a.split_seed;
  cfg["train"] = ordered_json::parse(format_train_config(config));
  cfg["out"] = a.out;
  log_config(ctx, "train", cfg);

  const Songs songs = load_songs(a.manifest, store);
  const DatasetSplit split = resolve_split(songs.records, a.split, a.split_seed);
  const GridDatasets data = assemble_datasets(songs.records, songs.embeddings, split);

  TrainResult result = train(data.train, data.val, config, [&ctx](int epoch, double tl, double vl) {
    ctx.err << "epoch " << epoch << ": train " << tl << ", val " << vl << '\n';
  });
  if (!data.test.empty()) result.report.test = evaluate(result.model, data.test, config.mode);

  const fs::path dir = a.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  save_checkpoint(dir / "model.ckpt", result.model);
  write_file_atomic(dir / "config.json", format_train_config(config));
  write_file_atomic(dir / "report.json", format_train_report_json(config, result.report));
  write_file_atomic(dir / "losses.csv", format_loss_csv(result.report));
}

// ---------------------------------------------------------------------------
// grid

struct GridArgs {
  std::string config;
  std::string manifest;
  std::string embeddings;
  std::string split;
  std::string out;
  int workers = 1;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  AxisFlags axes;
};

struct GridFile {
  std::string manifest;
  std::string embeddings;
  std::string split;
  std::uint64_t split_seed = 0;
  GridAxes axes;
  TrainConfig base;
};

template <typename T, typename Parse>
std::vector<T> parse_axis(const ordered_json& values, const std::string& name, Parse parse) {
  if (!values.is_array() || values.empty()) {
    throw ValidationError("grid config: axis '" + name + "' must be a non-empty array");
  }
  std::vector<T> out;
  for (const ordered_json& v : values) {
    if (v.is_string()) out.push_back(parse(v.get<std::string>()));
    else if (v.is_number_integer()) out.push_back(parse(std::to_string(v.get<long long>())));
    else throw ValidationError("grid config: bad value in axis '" + name + "'");
  }
  return out;
}

GridFile parse_grid_file(const std::string& path) {
  GridFile g;
  if (path.empty()) return g;
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("grid config: " + std::string(e.what()));
  }
  if (!j.is_object()) throw FormatError("grid config: expected a JSON object");
  const fs::path base_dir = fs::path(path).parent_path();
  auto rel = [&](const ordered_json& v, const std::string& key) {
    if (!v.is_string()) throw ValidationError("grid config: '" + key + "' must be a string");
    const fs::path p = v.get<std::string>();
    return (p.is_absolute() ? p : base_dir / p).string();
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "manifest") g.manifest = rel(v, key);
    else if (key == "embeddings") g.embeddings = rel(v, key);
    else if (key == "split") g.split = rel(v, key);
    else if (key == "split_seed") {
      if (!v.is_number_unsigned()) throw ValidationError("grid config: 'split_seed' must be a non-negative integer");
      g.split_seed = v.get<std::uint64_t>();
    } else if (key == "train") {
      g.base = parse_train_config(v.dump());
    } else if (key == "axes") {
      if (!v.is_object()) throw ValidationError("grid config: 'axes' must be an object");
      for (const auto& [axis, values] : v.items()) {
        if (axis == "loss") g.axes.losses = parse_axis<LossKind>(values, axis, parse_loss_kind);
        else if (axis == "depth") g.axes.depths = parse_axis<TrunkDepth>(values, axis, parse_depth);
        else if (axis == "mode") g.axes.modes = parse_axis<InputMode>(values, axis, parse_input_mode);
        else if (axis == "tasks") g.axes.tasks = parse_axis<TaskMode>(values, axis, parse_task_mode);
        else throw ValidationError("grid config: unknown axis '" + axis + "'");
      }
    } else {
      throw ValidationError("grid config: unknown key '" + key + "'");
    }
  }
  return g;
}

void cmd_grid(const Context& ctx, const GridArgs& a) {
  if (a.workers < 1) throw ValidationError("--workers must be >= 1");
  GridFile g = parse_grid_file(a.config);
  if (!a.manifest.empty()) g.manifest = a.manifest;
  if (!a.embeddings.empty()) g.embeddings = a.embeddings;
  if (!a.split.empty()) g.split = a.split;
  if (g.manifest.empty()) throw ValidationError("grid: no manifest (use --manifest or the config's 'manifest')");
  if (a.seed_opt->count()) g.base.seed = a.seed;
  // A flag pins its axis to a single value.
  if (a.axes.loss_opt->count()) g.axes.losses = {parse_loss_kind(a.axes.loss)};
  if (a.axes.depth_opt->count()) g.axes.depths = {parse_depth(a.axes.depth)};
  if (a.axes.mode_opt->count()) g.axes.modes = {parse_input_mode(a.axes.mode)};
  if (a.axes.tasks_opt->count()) g.axes.tasks = {parse_task_mode(a.axes.tasks)};
  const fs::path store = embedding_store(g.manifest, g.embeddings);

  auto names = [](const auto& values) {
    std::vector<std::string> out;
    for (const auto& v : values) out.emplace_back(to_string(v));
    return out;
  };
  ordered_json cfg;
  cfg["manifest"] = g.manifest;
  cfg["embeddings"] = store.string();
  cfg["split"] = g.split.empty() ? ordered_json(nullptr) : ordered_json(g.split);
  cfg["split_seed"] = g.split_seed;
  cfg["axes"] = {{"loss", names(g.axes.losses)},
                 {"depth", names(g.axes.depths)},
                 {"mode", names(g.axes.modes)},
                 {"tasks", names(g.axes.tasks)}};
  cfg["train"] = ordered_json::parse(format_train_config(g.base));
  cfg["workers"] = a.workers;
  cfg["out"] = a.out;
  log_config(ctx, "grid", cfg);

  const Songs songs = load_songs(g.manifest, store);
  const DatasetSplit split = resolve_split(songs.records, g.split, g.split_seed);
  const GridDatasets data = assemble_datasets(songs.records, songs.embeddings, split);
  const std::vector<GridCell> cells = run_grid(data, g.axes, g.base, a.workers);
  std::size_t failed = 0;
  for (const GridCell& c : cells) {
    if (!c.error.empty()) {
      ++failed;
      ctx.err << "grid: cell failed: " << c.error << '\n';
    }
  }
  ctx.err << "grid: " << cells.size() << " cells, " << failed << " failed\n";
  emit(ctx, a.out, format_grid_json(cells));
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string checkpoint;
  std::string manifest;
  std::string embeddings;
  std::string split;
  std::string subset;
  std::string mode = "song";
  std::string out;
  std::string predictions;
};

void cmd_eval(const Context& ctx, const EvalArgs& a) {
  const InputMode mode = parse_input_mode(a.mode);
  const std::string subset = a.subset.empty() ? (a.split.empty() ? "all" : "test") : a.subset;
  if (subset != "train" && subset != "val" && subset != "test" && subset != "all") {
    throw ValidationError("unknown subset '" + subset + "' (expected train|val|test|all)");
  }
  if (a.split.empty() && subset != "all") throw ValidationError("--subset " + subset + " needs --split");
  const fs::path store = embedding_store(a.manifest, a.embeddings);

  ordered_json cfg;
  cfg["checkpoint"] = a.checkpoint;
  cfg["manifest"] = a.manifest;
  cfg["embeddings"] = store.string();
  cfg["split"] = a.split.empty() ? ordered_json(nullptr) : ordered_json(a.split);
  cfg["subset"] = subset;
  cfg["mode"] = a.mode;
  cfg["out"] = a.out;
  cfg["predictions"] = a.predictions;
  log_config(ctx, "eval", cfg);

  const Model<double> model = load_checkpoint<double>(a.checkpoint);
  const Songs songs = load_songs(a.manifest, store);
  DatasetSplit split;
  if (a.split.empty()) {
    for (const SongRecord& r : songs.records) split.train_ids.push_back(r.song_id);
  } else {
    split = parse_split_json(read_file(a.split));
  }
  GridDatasets data = assemble_datasets(songs.records, songs.embeddings, split);
  Dataset selected;
  if (subset == "train") selected = std::move(data.train);
  else if (subset == "val") selected = std::move(data.val);
  else if (subset == "test") selected = std::move(data.test);
  else {
    selected = std::move(data.train);
    for (Dataset* d : {&data.val, &data.test}) {
      std::move(d->begin(), d->end(), std::back_inserter(selected));
    }
  }
  if (selected.empty()) throw ValidationError("eval: subset '" + subset + "' is empty");

  if (!a.predictions.empty()) {
    const MatrixXd preds = predict_songs(model, selected, mode);
    std::string lines;
    for (Eigen::Index s = 0; s < preds.cols(); ++s) {
      ordered_json j;
      j["song_id"] = selected[static_cast<std::size_t>(s)].song_id;
      for (Eigen::Index t = 0; t < preds.rows(); ++t) {
        j[std::string(kTaskNames[static_cast<std::size_t>(t)])] = preds(t, s);
      }
      lines += j.dump() + "\n";
    }
    ensure_parent(a.predictions);
    write_file_atomic(a.predictions, lines);
  }
  emit(ctx, a.out, format_eval_json(evaluate(model, selected, mode)));
}

// ---------------------------------------------------------------------------
// battles

struct BattlesArgs {
  std::string battles;
  std::string pairs;
  std::string predictions;
  std::string write_battles;
  int folds = 10;
  std::uint64_t seed = 0;
  std::string out;
};

// Pairs name two songs by id; their scores come from an eval predictions file.
std::vector<Battle> battles_from_predictions(const std::string& pairs_path,
                                             const std::string& predictions_path) {
  std::unordered_map<std::string, BaseScores> scores;
  {
    const std::string text = read_file(predictions_path);
    std::size_t line_no = 0, start = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      const std::string_view line(text.data() + start, end - start);
      start = end + 1;
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      const std::string where = "predictions line " + std::to_string(line_no) + ": ";
      const ordered_json j = ordered_json::parse(line, nullptr, false);
      if (!j.is_object() || !j.contains("song_id") || !j["song_id"].is_string()) {
        throw FormatError(where + "expected an object with song_id");
      }
      BaseScores s{};
      for (int d = 0; d < kBaseDimensions; ++d) {
        const std::string key(kDimensionNames[static_cast<std::size_t>(d)]);
        if (!j.contains(key) || !j[key].is_number()) {
          throw FormatError(where + "missing score " + key + " (predictions need the full task set)");
        }
        s[static_cast<std::size_t>(d)] = j[key].get<double>();
      }
      scores[j["song_id"].get<std::string>()] = s;
    }
  }

  std::vector<Battle> out;
  const std::string text = read_file(pairs_path);
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = "pairs line " + std::to_string(line_no) + ": ";
    const ordered_json j = ordered_json::parse(line, nullptr, false);
    if (!j.is_object()) throw FormatError(where + "expected a JSON object");
    auto text_field = [&](const char* key) {
      if (!j.contains(key) || !j[key].is_string()) throw FormatError(where + "missing field " + key);
      return j[key].get<std::string>();
    };
    auto song = [&](const char* key) {
      const std::string id = text_field(key);
      const auto it = scores.find(id);
      if (it == scores.end()) throw ValidationError(where + "no prediction for song " + id);
      return ScoreVector(it->second);
    };
    Battle b;
    b.battle_id = text_field("battle_id");
    b.a = song("song_a");
    b.b = song("song_b");
    if (!j.contains("instrumental") || !j["instrumental"].is_number_integer()) {
      throw FormatError(where + "missing field instrumental");
    }
    const auto flag = j["instrumental"].get<long long>();
    if (flag != 0 && flag != 1) throw DomainError(where + "instrumental must be 0 or 1");
    b.instrumental = flag == 1;
    const std::string winner = text_field("winner");
    if (winner == "A") b.winner = Winner::kA;
    else if (winner == "B") b.winner = Winner::kB;
    else throw DomainError(where + "winner must be \"A\" or \"B\"");
    out.push_back(std::move(b));
  }
  return out;
}

void cmd_battles(const Context& ctx, const BattlesArgs& a) {
  const bool from_file = !a.battles.empty();
  const bool from_pairs = !a.pairs.empty() || !a.predictions.empty();
  if (from_file == from_pairs) {
    throw ValidationError("battles: give either --battles or both --pairs and --predictions");
  }
  if (from_pairs && (a.pairs.empty() || a.predictions.empty())) {
    throw ValidationError("battles: --pairs and --predictions go together");
  }
  ordered_json cfg;
  cfg["battles"] = a.battles;
  cfg["pairs"] = a.pairs;
  cfg["predictions"] = a.predictions;
  cfg["folds"] = a.folds;
  cfg["seed"] = a.seed;
  cfg["out"] = a.out;
  log_config(ctx, "battles", cfg);

  const std::vector<Battle> battles =
      from_file ? load_battles(a.battles) : battles_from_predictions(a.pairs, a.predictions);
  if (!a.write_battles.empty()) {
    ensure_parent(a.write_battles);
    write_file_atomic(a.write_battles, format_battles(battles));
  }
  const PreferenceReport report = preference_report(battles, a.folds, a.seed);
  emit(ctx, a.out, format_preference_report(report));
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out;
  SynthSpec songs;
  std::string signal = "linear";
  int n_battles = 0;
  std::string battle_signal = "all";
  double battle_noise = 0.05;
};

void cmd_synth(const Context& ctx, SynthArgs a) {
  a.songs.signal = parse_signal_kind(a.signal);
  BattleSynthSpec battle_spec;
  battle_spec.n_battles = a.n_battles;
  battle_spec.seed = a.songs.seed;
  battle_spec.signal = parse_battle_signal(a.battle_signal);
  battle_spec.noise = a.battle_noise;
  if (a.songs.n_songs == 0 && a.n_battles == 0) throw ValidationError("synth: nothing to generate");
  if (a.n_battles < 0) throw ValidationError("synth: --battles must be >= 0");

  ordered_json cfg;
  cfg["out"] = a.out;
  cfg["seed"] = a.songs.seed;
  cfg["n_songs"] = a.songs.n_songs;
  cfg["min_segments"] = a.songs.min_segments;
  cfg["max_segments"] = a.songs.max_segments;
  cfg["signal"] = a.signal;
  cfg["latent_dim"] = a.songs.latent_dim;
  cfg["embedding_noise"] = a.songs.embedding_noise;
  cfg["battles"] = a.n_battles;
  cfg["battle_signal"] = a.battle_signal;
  cfg["battle_noise"] = a.battle_noise;
  log_config(ctx, "synth", cfg);

  const fs::path dir = a.out;
  if (a.songs.n_songs > 0) write_synth_dataset(synth_dataset(a.songs), dir);
  if (a.n_battles > 0) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_file_atomic(dir / "battles.jsonl", format_battles(synth_battles(battle_spec)));
  }
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Music popularity and aesthetics prediction pipeline", "songpop"};
  app.require_subcommand(1, 1);
  app.fallthrough(false);
  const Context ctx{out, err};

  IngestArgs ingest;
  CLI::App* ingest_cmd = app.add_subcommand("ingest", "Validate a manifest and its embedding files");
  ingest_cmd->add_option("--manifest", ingest.manifest, "Manifest (JSON lines)")->required();
  ingest_cmd->add_option("--embeddings", ingest.embeddings, "Embedding directory (default: manifest directory)");
  ingest_cmd->add_option("--out", ingest.out, "Write the filtered manifest here");
  ingest_cmd->add_option("--report", ingest.report, "Write the summary here instead of stdout");
  ingest_cmd->add_flag("--drop-zero-streams", ingest.drop_zero_streams, "Drop songs with zero streams");
  ingest_cmd->add_option("--dedup", ingest.dedup, "Deduplicate by song_id|audio_hash");
  ingest_cmd->add_option("--cutoff", ingest.cutoff, "Drop songs released after this ISO-8601 instant");

  ScoreArgs score;
  CLI::App* score_cmd = app.add_subcommand("score", "Add streams_score and likes_score to a manifest");
  score_cmd->add_option("--manifest", score.manifest, "Manifest (JSON lines)")->required();
  score_cmd->add_option("--out", score.out, "Scored manifest")->required();
  score_cmd->add_option("--split", score.split, "Split file; percentiles use its training songs");
  score_cmd->add_option("--alpha", score.alpha, "Power-transform exponent")->capture_default_str();

  SplitArgs split;
  CLI::App* split_cmd = app.add_subcommand("split", "Stratified train/test/val split");
  split_cmd->add_option("--manifest", split.manifest, "Manifest (JSON lines)")->required();
  split_cmd->add_option("--out", split.out, "Split JSON (default: stdout)");
  split_cmd->add_option("--seed", split.seed, "Random seed")->capture_default_str();
  split_cmd->add_option("--fractions", split.fractions, "train,test,val")->delimiter(',')->expected(3)->capture_default_str();
  split_cmd->add_option("--strata", split.strata, "Number of streams-count strata")->capture_default_str();
  split_cmd->add_option("--downsample", split.downsample, "Stratified downsample to this many songs first (0: off)")
      ->capture_default_str();

  TrainArgs tr;
  CLI::App* train_cmd = app.add_subcommand("train", "Train one model");
  train_cmd->add_option("--manifest", tr.manifest, "Manifest (JSON lines)")->required();
  train_cmd->add_option("--embeddings", tr.embeddings, "Embedding directory (default: manifest directory)");
  train_cmd->add_option("--split", tr.split, "Split JSON (default: a fresh stratified split)");
  train_cmd->add_option("--split-seed", tr.split_seed, "Seed for the fresh split")->capture_default_str();
  train_cmd->add_option("--config", tr.config, "Training config JSON");
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  tr.seed_opt = train_cmd->add_option("--seed", tr.seed, "Model seed (overrides the config)")->capture_default_str();
  tr.axes.add_to(train_cmd);

  GridArgs grid;
  CLI::App* grid_cmd = app.add_subcommand("grid", "Train and evaluate every cell of the experiment grid");
  grid_cmd->add_option("--config", grid.config, "Grid config JSON");
  grid_cmd->add_option("--manifest", grid.manifest, "Manifest (overrides the config)");
  grid_cmd->add_option("--embeddings", grid.embeddings, "Embedding directory (overrides the config)");
  grid_cmd->add_option("--split", grid.split, "Split JSON (overrides the config)");
  grid_cmd->add_option("--out", grid.out, "Grid results JSON (default: stdout)");
  grid_cmd->add_option("--workers", grid.workers, "Parallel cells")->capture_default_str();
  grid.seed_opt = grid_cmd->add_option("--seed", grid.seed, "Base seed (overrides the config)")->capture_default_str();
  grid.axes.add_to(grid_cmd);

  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Metrics of a checkpoint on labelled songs");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--manifest", ev.manifest, "Manifest (JSON lines)")->required();
  eval_cmd->add_option("--embeddings", ev.embeddings, "Embedding directory (default: manifest directory)");
  eval_cmd->add_option("--split", ev.split, "Split JSON; labels use its training songs");
  eval_cmd->add_option("--subset", ev.subset, "train|val|test|all (default: test with --split, else all)");
  eval_cmd->add_option("--mode", ev.mode, "Input mode: segment|song")->capture_default_str();
  eval_cmd->add_option("--out", ev.out, "Metrics JSON (default: stdout)");
  eval_cmd->add_option("--predictions", ev.predictions, "Write per-song predictions (JSON lines)");

  BattlesArgs bt;
  CLI::App* battles_cmd = app.add_subcommand("battles", "Preference prediction on pairwise battles");
  battles_cmd->add_option("--battles", bt.battles, "Battles file (JSON lines)");
  battles_cmd->add_option("--pairs", bt.pairs, "Song pairs with winners (JSON lines)");
  battles_cmd->add_option("--predictions", bt.predictions, "Per-song predictions from eval");
  battles_cmd->add_option("--write-battles", bt.write_battles, "Also write the assembled battles file");
  battles_cmd->add_option("--folds", bt.folds, "Cross-validation folds")->capture_default_str();
  battles_cmd->add_option("--seed", bt.seed, "Fold assignment seed")->capture_default_str();
  battles_cmd->add_option("--out", bt.out, "Report JSON (default: stdout)");

  SynthArgs sy;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--out", sy.out, "Output directory")->required();
  synth_cmd->add_option("--seed", sy.songs.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--n-songs", sy.songs.n_songs, "Songs to generate (0: none)")->capture_default_str();
  synth_cmd->add_option("--min-segments", sy.songs.min_segments, "Fewest segments per song")->capture_default_str();
  synth_cmd->add_option("--max-segments", sy.songs.max_segments, "Most segments per song")->capture_default_str();
  synth_cmd->add_option("--signal", sy.signal, "linear|nonlinear|none")->capture_default_str();
  synth_cmd->add_option("--latent-dim", sy.songs.latent_dim, "Latent dimension")->capture_default_str();
  synth_cmd->add_option("--noise", sy.songs.embedding_noise, "Embedding noise std")->capture_default_str();
  synth_cmd->add_option("--battles", sy.n_battles, "Also write this many battles")->capture_default_str();
  synth_cmd->add_option("--battle-signal", sy.battle_signal, "all|aesthetic|none")->capture_default_str();
  synth_cmd->add_option("--battle-noise", sy.battle_noise, "Noise std on the battle utility gap")
      ->capture_default_str();

  // CLI11 consumes arguments from the back.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    if (args.empty()) err << "error: no command given\n";
    else if (subs.empty() && !args.front().starts_with('-')) err << "error: unknown command '" << args.front() << "'\n";
    else err << "error: " << e.what() << '\n';
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitValidation;
  }

  try {
    if (ingest_cmd->parsed()) cmd_ingest(ctx, ingest);
    else if (score_cmd->parsed()) cmd_score(ctx, score);
    else if (split_cmd->parsed()) cmd_split(ctx, split);
    else if (train_cmd->parsed()) cmd_train(ctx, tr);
    else if (grid_cmd->parsed()) cmd_grid(ctx, grid);
    else if (eval_cmd->parsed()) cmd_eval(ctx, ev);
    else if (battles_cmd->parsed()) cmd_battles(ctx, bt);
    else if (synth_cmd->parsed()) cmd_synth(ctx, sy);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace songpop::cli
