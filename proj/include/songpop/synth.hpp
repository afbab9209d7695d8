#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "songpop/datamodel.hpp"
#include "songpop/preference.hpp"

namespace songpop {

enum class SignalKind { kLinear, kNonlinear, kNone };

std::string_view to_string(SignalKind k);
SignalKind parse_signal_kind(std::string_view s);

struct SynthSpec {
  int n_songs = 200;
  int min_segments = 1;
  int max_segments = 4;
  std::uint64_t seed = 0;
  SignalKind signal = SignalKind::kLinear;
  int latent_dim = 16;
  /// Isotropic noise added to every embedding value.
  double embedding_noise = 0.05;

  void validate() const;
};

struct SynthDataset {
  std::vector<SongRecord> records;
  std::vector<SegmentEmbeddingSet> embeddings;  // parallel to records
  /// The planted target per song. For the linear signal it is an exact
  /// linear function of the noise-free song-mean embedding.
  std::vector<double> planted;
};

/// Songs are drawn from a low-rank latent model: each segment embedding
/// layer is M_l z + noise, where z is the song latent plus segment jitter.
/// Streams and likes are increasing functions of the planted target (or of
/// an independent draw for the null signal). Aesthetics are a separate
/// linear functional of the song latent plus noise, clipped to [1, 5].
/// Embedding values are rounded to float so files reproduce them exactly.
SynthDataset synth_dataset(const SynthSpec& spec);

/// Writes `manifest.jsonl` and one `<song_id>.emb` per song under `dir`.
void write_synth_dataset(const SynthDataset& data, const std::filesystem::path& dir);

enum class BattleSignal { kAll, kAestheticOnly, kNone };

std::string_view to_string(BattleSignal s);
BattleSignal parse_battle_signal(std::string_view s);

struct BattleSynthSpec {
  int n_battles = 1000;
  std::uint64_t seed = 0;
  BattleSignal signal = BattleSignal::kAll;
  /// Standard deviation of the Gaussian noise added to the utility gap.
  double noise = 0.05;
  double instrumental_rate = 0.3;
};

/// Random score vectors per side; A wins when a fixed linear utility of the
/// score differences plus noise is positive. `kAestheticOnly` puts weight
/// on the aesthetic dimensions alone; `kNone` draws winners at random.
std::vector<Battle> synth_battles(const BattleSynthSpec& spec);

}  // namespace songpop
