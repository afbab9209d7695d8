#include "songpop/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "songpop/io.hpp"

namespace songpop {

std::string_view to_string(SignalKind k) {
  switch (k) {
    case SignalKind::kLinear: return "linear";
    case SignalKind::kNonlinear: return "nonlinear";
    case SignalKind::kNone: return "none";
  }
  return "?";
}

SignalKind parse_signal_kind(std::string_view s) {
  if (s == "linear") return SignalKind::kLinear;
  if (s == "nonlinear") return SignalKind::kNonlinear;
  if (s == "none") return SignalKind::kNone;
  throw ValidationError("unknown signal '" + std::string(s) + "' (expected linear|nonlinear|none)");
}

void SynthSpec::validate() const {
  if (n_songs < 2) throw ValidationError("synth: n_songs must be >= 2");
  if (min_segments < 1 || max_segments < min_segments) {
    throw ValidationError("synth: need 1 <= min_segments <= max_segments");
  }
  if (latent_dim < 1) throw ValidationError("synth: latent_dim must be >= 1");
  if (!(embedding_noise >= 0.0)) throw ValidationError("synth: embedding_noise must be >= 0");
}

namespace {

constexpr double kSegmentJitter = 0.3;
constexpr std::int64_t kEpoch2024 = 1704067200;  // 2024-01-01T00:00:00Z

std::string padded_id(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%05d", prefix, i);
  return buf;
}

VectorXd normal_vector(Rng& rng, Eigen::Index n) {
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

}  // namespace

SynthDataset synth_dataset(const SynthSpec& spec) {
  spec.validate();
  const Eigen::Index dim = kEmbeddingDim;
  const Eigen::Index k = spec.latent_dim;
  Rng model_rng(derive_seed(spec.seed, 0));
  Rng song_rng(derive_seed(spec.seed, 1));

  std::array<MatrixXd, kEmbeddingLayers> mixing;
  for (auto& m : mixing) {
    m.resize(dim, k);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = model_rng.normal() / std::sqrt(static_cast<double>(k));
    }
  }
  const VectorXd w = normal_vector(model_rng, k).normalized();
  const VectorXd u = normal_vector(model_rng, k).normalized();
  std::array<VectorXd, 5> aesthetic_dirs;
  for (auto& v : aesthetic_dirs) v = normal_vector(model_rng, k).normalized();

  SynthDataset out;
  out.records.reserve(static_cast<std::size_t>(spec.n_songs));
  out.embeddings.reserve(static_cast<std::size_t>(spec.n_songs));
  out.planted.reserve(static_cast<std::size_t>(spec.n_songs));
  const auto span = static_cast<std::uint64_t>(spec.max_segments - spec.min_segments + 1);

  for (int i = 0; i < spec.n_songs; ++i) {
    const VectorXd z = normal_vector(song_rng, k);
    const int n_seg = spec.min_segments + static_cast<int>(song_rng.below(span));
    SegmentEmbeddingSet emb{padded_id("song", i), MatrixXd(dim, n_seg * kEmbeddingLayers)};
    VectorXd z_mean = VectorXd::Zero(k);
    for (int s = 0; s < n_seg; ++s) {
      const VectorXd zs = z + kSegmentJitter * normal_vector(song_rng, k);
      z_mean += zs;
      for (Eigen::Index l = 0; l < kEmbeddingLayers; ++l) {
        auto col = emb.values.col(s * kEmbeddingLayers + l);
        col = mixing[static_cast<std::size_t>(l)] * zs;
        for (Eigen::Index d = 0; d < dim; ++d) {
          col(d) = static_cast<float>(col(d) + spec.embedding_noise * song_rng.normal());
        }
      }
    }
    z_mean /= static_cast<double>(n_seg);

    double target = 0.0;
    switch (spec.signal) {
      case SignalKind::kLinear: target = w.dot(z_mean); break;
      case SignalKind::kNonlinear:
        target = std::sin(2.0 * w.dot(z_mean)) + 0.5 * std::pow(u.dot(z_mean), 2) - 0.5;
        break;
      case SignalKind::kNone: target = song_rng.normal(); break;
    }

    SongRecord r;
    r.song_id = emb.song_id;
    r.platform = song_rng.below(2) == 0 ? Platform::kUdio : Platform::kSuno;
    r.streams = static_cast<std::uint64_t>(std::floor(std::exp(9.0 + 1.5 * target)));
    r.likes = static_cast<std::uint64_t>(std::floor(std::exp(6.0 + 1.2 * target)));
    std::array<double, 5> aesthetics{};
    for (std::size_t a = 0; a < aesthetics.size(); ++a) {
      const double driver =
          spec.signal == SignalKind::kNone ? song_rng.normal() : aesthetic_dirs[a].dot(z);
      aesthetics[a] = std::clamp(3.0 + 0.7 * driver + 0.1 * song_rng.normal(), 1.0, 5.0);
    }
    r.aesthetics = aesthetics;
    r.released_at = kEpoch2024 + static_cast<std::int64_t>(song_rng.below(365 * 86400));
    r.embedding_ref = r.song_id + ".emb";

    out.records.push_back(std::move(r));
    out.embeddings.push_back(std::move(emb));
    out.planted.push_back(target);
  }
  return out;
}

void write_synth_dataset(const SynthDataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    save_embedding_file(dir / data.records[i].embedding_ref, data.embeddings[i]);
  }
  write_file_atomic(dir / "manifest.jsonl", format_manifest(data.records));
}

std::string_view to_string(BattleSignal s) {
  switch (s) {
    case BattleSignal::kAll: return "all";
    case BattleSignal::kAestheticOnly: return "aesthetic";
    case BattleSignal::kNone: return "none";
  }
  return "?";
}

BattleSignal parse_battle_signal(std::string_view s) {
  if (s == "all") return BattleSignal::kAll;
  if (s == "aesthetic") return BattleSignal::kAestheticOnly;
  if (s == "none") return BattleSignal::kNone;
  throw ValidationError("unknown battle signal '" + std::string(s) + "' (expected all|aesthetic|none)");
}

std::vector<Battle> synth_battles(const BattleSynthSpec& spec) {
  if (spec.n_battles < 1) throw ValidationError("synth_battles: n_battles must be >= 1");
  if (!(spec.noise >= 0.0)) throw ValidationError("synth_battles: noise must be >= 0");
  if (!(spec.instrumental_rate >= 0.0 && spec.instrumental_rate <= 1.0)) {
    throw ValidationError("synth_battles: instrumental_rate must be in [0, 1]");
  }
  // Utility weights on range-normalized base scores.
  BaseScores weights{};
  switch (spec.signal) {
    case BattleSignal::kAll: weights = {1.0, 0.5, 0.8, 0.6, 1.0, 0.4, 0.7}; break;
    case BattleSignal::kAestheticOnly: weights = {0.0, 0.0, 0.8, 0.6, 1.0, 0.4, 0.7}; break;
    case BattleSignal::kNone: break;
  }
  Rng rng(spec.seed);
  auto draw = [&rng]() {
    BaseScores s{};
    s[0] = rng.uniform(0.0, 100.0);
    s[1] = std::clamp(s[0] + rng.normal() * 15.0, 0.0, 100.0);
    for (int a = 2; a < kBaseDimensions; ++a) s[static_cast<std::size_t>(a)] = rng.uniform(1.0, 5.0);
    return s;
  };
  auto utility = [&weights](const BaseScores& s) {
    double total = weights[0] * s[0] / 100.0 + weights[1] * s[1] / 100.0;
    for (int a = 2; a < kBaseDimensions; ++a) {
      total += weights[static_cast<std::size_t>(a)] * (s[static_cast<std::size_t>(a)] - 1.0) / 4.0;
    }
    return total;
  };

  std::vector<Battle> out;
  out.reserve(static_cast<std::size_t>(spec.n_battles));
  for (int i = 0; i < spec.n_battles; ++i) {
    const BaseScores a = draw();
    const BaseScores b = draw();
    Battle battle;
    battle.battle_id = padded_id("battle", i);
    battle.a = ScoreVector(a);
    battle.b = ScoreVector(b);
    battle.instrumental = rng.uniform() < spec.instrumental_rate;
    const double gap = spec.signal == BattleSignal::kNone
                           ? rng.normal()
                           : utility(a) - utility(b) + spec.noise * rng.normal();
    battle.winner = gap > 0.0 ? Winner::kA : Winner::kB;
    out.push_back(std::move(battle));
  }
  return out;
}

}  // namespace songpop
