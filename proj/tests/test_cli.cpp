#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "cli.hpp"
#include "songpop/datamodel.hpp"
#include "songpop/io.hpp"
#include "songpop/preference.hpp"
#include "support/fixtures.hpp"

using namespace songpop;
using songpop::testing::scratch_dir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string song_line(const std::string& id, std::uint64_t streams, std::uint64_t likes) {
  return R"({"song_id":")" + id + R"(","platform":"udio","streams":)" + std::to_string(streams) +
         R"(,"likes":)" + std::to_string(likes) + R"(,"coherence":null,"musicality":null,"memorability":null,"clarity":null,"naturalness":null,)"
         R"("released_at":null,"embedding_ref":")" + id + ".emb\"}\n";
}

double expected_score(double percentile) {
  const double alpha = std::log(0.5) / std::log(0.8);
  return 100.0 * std::pow(percentile / 100.0, alpha);
}

}  // namespace

TEST_CASE("no arguments prints usage and exits 1") {
  const Outcome r = run_cli({});
  CHECK(r.code == 1);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(r.out.empty());
}

TEST_CASE("unknown command or flag exits 1 with usage") {
  Outcome r = run_cli({"frobnicate"});
  CHECK(r.code == 1);
  CHECK(r.err.find("unknown command 'frobnicate'") != std::string::npos);
  r = run_cli({"score", "--manifest", "m", "--out", "o", "--bogus"});
  CHECK(r.code == 1);
  CHECK(r.err.find("--bogus") != std::string::npos);
  CHECK(r.err.find("Usage") != std::string::npos);
}

TEST_CASE("help exits 0") {
  const Outcome r = run_cli({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("synth") != std::string::npos);
}

TEST_CASE("score adds both score columns on a three-song manifest") {
  const auto dir = scratch_dir("cli_score3");
  write_file_atomic(dir / "m.jsonl", song_line("a", 10, 300) + song_line("b", 20, 200) + song_line("c", 30, 100));
  const Outcome r = run_cli({"score", "--manifest", (dir / "m.jsonl").string(), "--out", (dir / "s.jsonl").string()});
  REQUIRE(r.code == 0);
  const std::string text = read_file(dir / "s.jsonl");
  CHECK(text.find("\"streams_score\"") != std::string::npos);
  CHECK(text.find("\"likes_score\"") != std::string::npos);
  const std::vector<SongRecord> scored = load_manifest(dir / "s.jsonl");
  REQUIRE(scored.size() == 3);
  CHECK(*scored[0].streams_score == 0.0);
  CHECK(*scored[1].streams_score == doctest::Approx(expected_score(50.0)).epsilon(1e-12));
  CHECK(*scored[2].streams_score == 100.0);
  CHECK(*scored[0].likes_score == 100.0);
  CHECK(*scored[2].likes_score == 0.0);
  // The middle song sits at percentile 50, well below the midpoint score.
  CHECK(*scored[1].streams_score < 50.0);
}

TEST_CASE("score maps the 80th percentile to 50") {
  const auto dir = scratch_dir("cli_score6");
  std::string manifest;
  for (int i = 0; i < 6; ++i) manifest += song_line("s" + std::to_string(i), 100u * (i + 1), 7u * (i + 1));
  write_file_atomic(dir / "m.jsonl", manifest);
  REQUIRE(run_cli({"score", "--manifest", (dir / "m.jsonl").string(), "--out", (dir / "s.jsonl").string()}).code == 0);
  const std::vector<SongRecord> scored = load_manifest(dir / "s.jsonl");
  // Six distinct counts give percentiles 0, 20, ..., 100; the fifth is p = 80.
  CHECK(std::abs(*scored[4].streams_score - 50.0) < 1e-9);
  CHECK(std::abs(*scored[4].likes_score - 50.0) < 1e-9);
}

TEST_CASE("score against a split uses the training songs as the reference") {
  const auto dir = scratch_dir("cli_score_split");
  write_file_atomic(dir / "m.jsonl", song_line("a", 10, 1) + song_line("b", 20, 2) + song_line("c", 30, 3) +
                                         song_line("d", 25, 4));
  DatasetSplit split;
  split.train_ids = {"a", "b", "c"};
  split.test_ids = {"d"};
  split.fractions = {0.75, 0.25, 0.0};
  write_file_atomic(dir / "split.json", format_split_json(split));
  REQUIRE(run_cli({"score", "--manifest", (dir / "m.jsonl").string(), "--split", (dir / "split.json").string(),
                   "--out", (dir / "s.jsonl").string()})
              .code == 0);
  const std::vector<SongRecord> scored = load_manifest(dir / "s.jsonl");
  CHECK(*scored[1].streams_score == doctest::Approx(expected_score(50.0)).epsilon(1e-12));
  // 25 falls between the reference's 20 (p = 50) and 30 (p = 100).
  CHECK(*scored[3].streams_score > *scored[1].streams_score);
  CHECK(*scored[3].streams_score < 100.0);
}

TEST_CASE("validation and runtime failures map to exit codes 1 and 2") {
  const auto dir = scratch_dir("cli_errors");
  write_file_atomic(dir / "bad.jsonl", song_line("a", 1, 1) + "{\"song_id\":\"b\"}\n");
  Outcome r = run_cli({"score", "--manifest", (dir / "bad.jsonl").string(), "--out", (dir / "o.jsonl").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("line 2") != std::string::npos);

  r = run_cli({"split", "--manifest", (dir / "missing.jsonl").string()});
  CHECK(r.code == 1);

  write_file_atomic(dir / "ok.jsonl", song_line("a", 1, 1) + song_line("b", 2, 2));
  write_file_atomic(dir / "blocker", "not a directory");
  r = run_cli({"score", "--manifest", (dir / "ok.jsonl").string(), "--out", (dir / "blocker" / "x.jsonl").string()});
  CHECK(r.code == 2);

  write_file_atomic(dir / "model.ckpt", "SPCK");
  r = run_cli({"eval", "--checkpoint", (dir / "model.ckpt").string(), "--manifest", (dir / "ok.jsonl").string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("synth, split, train and eval are reproducible end to end") {
  const auto dir = scratch_dir("cli_pipeline");
  const std::string data = (dir / "data").string();
  REQUIRE(run_cli({"synth", "--out", data, "--n-songs", "40", "--seed", "5", "--max-segments", "2"}).code == 0);
  const std::string manifest = (dir / "data" / "manifest.jsonl").string();

  const Outcome ingest = run_cli({"ingest", "--manifest", manifest});
  REQUIRE(ingest.code == 0);
  const auto summary = nlohmann::json::parse(ingest.out);
  CHECK(summary["n_records"] == 40);
  CHECK(summary["n_kept"] == 40);

  const std::string split = (dir / "split.json").string();
  REQUIRE(run_cli({"split", "--manifest", manifest, "--seed", "2", "--out", split}).code == 0);
  write_file_atomic(dir / "cfg.json", R"({"max_epochs": 2, "batch_size": 16, "lr0": 0.001})");

  for (const char* name : {"run1", "run2"}) {
    const Outcome r = run_cli({"train", "--manifest", manifest, "--split", split, "--config",
                               (dir / "cfg.json").string(), "--seed", "9", "--loss", "weighted", "--out",
                               (dir / name).string()});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("\"seed\":9") != std::string::npos);
    CHECK(r.err.find("\"loss\":\"weighted\"") != std::string::npos);
  }
  for (const char* file : {"model.ckpt", "report.json", "losses.csv", "config.json"}) {
    CHECK(read_file(dir / "run1" / file) == read_file(dir / "run2" / file));
  }

  const Outcome ev = run_cli({"eval", "--checkpoint", (dir / "run1" / "model.ckpt").string(), "--manifest",
                              manifest, "--split", split, "--predictions", (dir / "preds.jsonl").string()});
  REQUIRE(ev.code == 0);
  const auto metrics = nlohmann::json::parse(ev.out);
  CHECK(metrics["n_songs"] == 4);
  CHECK(metrics["tasks"].size() == 7);
  const std::string preds = read_file(dir / "preds.jsonl");
  CHECK(std::count(preds.begin(), preds.end(), '\n') == 4);
}

TEST_CASE("grid over full axes yields 24 distinct rows") {
  const auto dir = scratch_dir("cli_grid");
  REQUIRE(run_cli({"synth", "--out", (dir / "data").string(), "--n-songs", "40", "--seed", "8",
                   "--max-segments", "2"})
              .code == 0);
  write_file_atomic(dir / "grid.json",
                    R"({"manifest": "data/manifest.jsonl", "split_seed": 3,
                        "axes": {"loss": ["equal", "weighted", "uncertainty"], "depth": [2, 3],
                                 "mode": ["segment", "song"], "tasks": ["popularity", "full"]},
                        "train": {"max_epochs": 1, "batch_size": 16}})");
  const Outcome r = run_cli({"grid", "--config", (dir / "grid.json").string(), "--workers", "2", "--out",
                             (dir / "g.json").string()});
  REQUIRE(r.code == 0);
  const auto grid = nlohmann::json::parse(read_file(dir / "g.json"));
  REQUIRE(grid["cells"].size() == 24);
  std::set<std::tuple<std::string, int, std::string, std::string>> keys;
  for (const auto& c : grid["cells"]) {
    CHECK(c["error"].is_null());
    keys.emplace(c["loss"], c["depth"], c["mode"], c["tasks"]);
  }
  CHECK(keys.size() == 24);

  // A pinned axis flag narrows the grid.
  const Outcome pinned = run_cli({"grid", "--config", (dir / "grid.json").string(), "--loss", "equal"});
  REQUIRE(pinned.code == 0);
  CHECK(nlohmann::json::parse(pinned.out)["cells"].size() == 8);

  write_file_atomic(dir / "bad.json", R"({"axes": {"loss": []}})");
  CHECK(run_cli({"grid", "--config", (dir / "bad.json").string()}).code == 1);
  write_file_atomic(dir / "bad2.json", R"({"manifest": "data/manifest.jsonl", "colour": 1})");
  CHECK(run_cli({"grid", "--config", (dir / "bad2.json").string()}).code == 1);
}

TEST_CASE("battles from a file and from pairs with predictions") {
  const auto dir = scratch_dir("cli_battles");
  REQUIRE(run_cli({"synth", "--out", dir.string(), "--n-songs", "0", "--battles", "300", "--seed", "4"}).code == 0);
  const Outcome r = run_cli({"battles", "--battles", (dir / "battles.jsonl").string()});
  REQUIRE(r.code == 0);
  const auto report = nlohmann::json::parse(r.out);
  CHECK(report["n_battles"] == 300);
  CHECK(report["cross_validation"].size() == 2);

  std::string preds, pairs;
  for (int i = 0; i < 6; ++i) {
    const double base = 10.0 * i;
    preds += R"({"song_id":"s)" + std::to_string(i) + R"(","streams":)" + std::to_string(base) +
             R"(,"likes":)" + std::to_string(base) +
             R"(,"coherence":2,"musicality":2,"memorability":2,"clarity":2,"naturalness":2})" + "\n";
  }
  for (int i = 0; i < 40; ++i) {
    const int a = i % 6, b = (i * 5 + 1) % 6;
    if (a == b) continue;
    pairs += R"({"battle_id":"p)" + std::to_string(i) + R"(","song_a":"s)" + std::to_string(a) +
             R"(","song_b":"s)" + std::to_string(b) + R"(","instrumental":)" + std::to_string(i % 2) +
             R"(,"winner":")" + (a > b ? "A" : "B") + "\"}\n";
  }
  write_file_atomic(dir / "preds.jsonl", preds);
  write_file_atomic(dir / "pairs.jsonl", pairs);
  const Outcome p = run_cli({"battles", "--pairs", (dir / "pairs.jsonl").string(), "--predictions",
                             (dir / "preds.jsonl").string(), "--folds", "2", "--write-battles",
                             (dir / "assembled.jsonl").string()});
  REQUIRE(p.code == 0);
  const std::vector<Battle> assembled = load_battles(dir / "assembled.jsonl");
  CHECK(format_battles(assembled) == read_file(dir / "assembled.jsonl"));
  CHECK(assembled.front().a[Dimension::kStreams] == 0.0);

  CHECK(run_cli({"battles"}).code == 1);
  CHECK(run_cli({"battles", "--pairs", (dir / "pairs.jsonl").string()}).code == 1);
}

TEST_CASE("synth is byte-identical for a fixed seed") {
  const auto dir = scratch_dir("cli_synth");
  for (const char* name : {"x", "y"}) {
    REQUIRE(run_cli({"synth", "--out", (dir / name).string(), "--n-songs", "5", "--seed", "1", "--battles", "10"})
                .code == 0);
  }
  for (const char* file : {"manifest.jsonl", "battles.jsonl", "song_00003.emb"}) {
    CHECK(read_file(dir / "x" / file) == read_file(dir / "y" / file));
  }
  CHECK(run_cli({"synth", "--out", (dir / "z").string(), "--signal", "cubic"}).code == 1);
}
