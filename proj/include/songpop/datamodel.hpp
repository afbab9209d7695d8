#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "songpop/common.hpp"

namespace songpop {

enum class Platform { kUdio, kSuno, kOther };

std::string_view to_string(Platform p);
Platform parse_platform(std::string_view s);

inline constexpr std::array<std::string_view, 5> kAestheticNames = {
    "coherence", "musicality", "memorability", "clarity", "naturalness"};

struct SongRecord {
  std::string song_id;
  Platform platform = Platform::kOther;
  std::uint64_t streams = 0;
  std::uint64_t likes = 0;
  /// coherence, musicality, memorability, clarity, naturalness; each in [1, 5].
  std::optional<std::array<double, 5>> aesthetics;
  /// Seconds since the Unix epoch, UTC.
  std::optional<std::int64_t> released_at;
  std::string embedding_ref;
  /// Precomputed content hash, used only for audio_hash deduplication.
  std::optional<std::string> audio_hash;
  /// Present once the manifest has been through `score`.
  std::optional<double> streams_score;
  std::optional<double> likes_score;
};

// ---------------------------------------------------------------------------
// Manifest (one JSON object per line)

std::vector<SongRecord> parse_manifest(std::string_view text);
std::vector<SongRecord> load_manifest(const std::filesystem::path& path);
std::string format_manifest_line(const SongRecord& record);
std::string format_manifest(std::span<const SongRecord> records);

/// "YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)" or "YYYY-MM-DD".
std::int64_t parse_iso8601(std::string_view s);
/// Always "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(std::int64_t unix_seconds);

// ---------------------------------------------------------------------------
// Embeddings

inline constexpr std::uint32_t kEmbeddingLayers = 4;
inline constexpr std::uint32_t kEmbeddingDim = 768;

/// Per-segment, per-layer embeddings of one song.
///
/// `values` is dim x (n_segments * 4); column 4 * s + l holds layer l of
/// segment s.
struct SegmentEmbeddingSet {
  std::string song_id;
  MatrixXd values;

  Eigen::Index n_segments() const { return values.cols() / kEmbeddingLayers; }
  Eigen::Index dim() const { return values.rows(); }
  /// dim x 4 view of one segment.
  auto segment(Eigen::Index s) const {
    return values.middleCols(s * kEmbeddingLayers, kEmbeddingLayers);
  }
};

/// Checks n_segments >= 1, dims (768, 4) and finiteness.
void validate_embeddings(const SegmentEmbeddingSet& set);

std::string encode_embeddings(const SegmentEmbeddingSet& set);
SegmentEmbeddingSet decode_embeddings(std::string_view bytes,
                                      std::string song_id = {});

SegmentEmbeddingSet load_embedding_file(const std::filesystem::path& path,
                                        std::string song_id = {});
void save_embedding_file(const std::filesystem::path& path,
                         const SegmentEmbeddingSet& set);

/// Resolves `embedding_ref` (or "<song_id>.emb" when empty) against `store`.
std::filesystem::path embedding_path(const std::filesystem::path& store,
                                     const SongRecord& record);
SegmentEmbeddingSet load_embeddings(const std::filesystem::path& store,
                                    const SongRecord& record);

// ---------------------------------------------------------------------------
// Filtering, splitting, downsampling

enum class DedupKey { kSongId, kAudioHash };

struct FilterRules {
  bool drop_zero_streams = false;
  std::optional<DedupKey> dedup;
  /// Songs released strictly after this instant are dropped.
  std::optional<std::int64_t> recency_cutoff;
};

std::vector<SongRecord> filter_songs(std::span<const SongRecord> records,
                                     const FilterRules& rules);

/// Fractions are ordered (train, test, val).
struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::vector<std::string> val_ids;
  std::array<double, 3> fractions{};
};

inline constexpr std::array<double, 3> kDefaultSplitFractions = {0.85, 0.10, 0.05};
inline constexpr int kDefaultStrata = 10;

/// Equal-occupancy quantile bins (0 .. n_strata-1) of the streams count.
/// Tied counts always share a bin.
std::vector<int> streams_strata(std::span<const SongRecord> records, int n_strata);

DatasetSplit stratified_split(std::span<const SongRecord> records,
                              const std::array<double, 3>& fractions,
                              int n_strata, std::uint64_t seed);

/// Proportional per-stratum sample of exactly `target_size` records,
/// returned in input order.
std::vector<SongRecord> stratified_downsample(std::span<const SongRecord> records,
                                              std::size_t target_size,
                                              int n_strata, std::uint64_t seed);

/// Largest-remainder apportionment of `total` over `weights`.
/// Ties in remainder go to the lower index.
std::vector<std::size_t> largest_remainder(std::span<const double> weights,
                                           std::size_t total);

std::string format_split_json(const DatasetSplit& split);
DatasetSplit parse_split_json(std::string_view text);

}  // namespace songpop
