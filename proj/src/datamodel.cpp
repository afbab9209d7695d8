#include "songpop/datamodel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "songpop/io.hpp"
#include "songpop/ranks.hpp"

namespace songpop {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Platform p) {
  switch (p) {
    case Platform::kUdio: return "udio";
    case Platform::kSuno: return "suno";
    case Platform::kOther: return "other";
  }
  return "other";
}

Platform parse_platform(std::string_view s) {
  if (s == "udio") return Platform::kUdio;
  if (s == "suno") return Platform::kSuno;
  if (s == "other") return Platform::kOther;
  throw FormatError("unknown platform '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// ISO-8601

namespace {

int parse_digits(std::string_view s, std::size_t pos, std::size_t n,
                 std::string_view whole) {
  if (pos + n > s.size()) throw FormatError("bad timestamp '" + std::string(whole) + "'");
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') {
      throw FormatError("bad timestamp '" + std::string(whole) + "'");
    }
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

void expect_char(std::string_view s, std::size_t pos, char c) {
  if (pos >= s.size() || s[pos] != c) {
    throw FormatError("bad timestamp '" + std::string(s) + "'");
  }
}

}  // namespace

std::int64_t parse_iso8601(std::string_view s) {
  using namespace std::chrono;
  const int y = parse_digits(s, 0, 4, s);
  expect_char(s, 4, '-');
  const int mo = parse_digits(s, 5, 2, s);
  expect_char(s, 7, '-');
  const int d = parse_digits(s, 8, 2, s);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw FormatError("bad date in timestamp '" + std::string(s) + "'");
  std::int64_t secs = sys_days{ymd}.time_since_epoch().count() * 86400LL;
  if (s.size() == 10) return secs;

  if (s.size() < 19 || (s[10] != 'T' && s[10] != ' ')) {
    throw FormatError("bad timestamp '" + std::string(s) + "'");
  }
  const int hh = parse_digits(s, 11, 2, s);
  expect_char(s, 13, ':');
  const int mm = parse_digits(s, 14, 2, s);
  expect_char(s, 16, ':');
  const int ss = parse_digits(s, 17, 2, s);
  if (hh > 23 || mm > 59 || ss > 60) {
    throw FormatError("bad time in timestamp '" + std::string(s) + "'");
  }
  secs += hh * 3600LL + mm * 60LL + ss;

  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == start) throw FormatError("bad timestamp '" + std::string(s) + "'");
    // sub-second precision is truncated
  }
  if (pos == s.size()) return secs;  // no designator: treat as UTC
  if (s[pos] == 'Z' && pos + 1 == s.size()) return secs;
  if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size()) {
    const int oh = parse_digits(s, pos + 1, 2, s);
    expect_char(s, pos + 3, ':');
    const int om = parse_digits(s, pos + 4, 2, s);
    const std::int64_t offset = oh * 3600LL + om * 60LL;
    return s[pos] == '+' ? secs - offset : secs + offset;
  }
  throw FormatError("bad timestamp '" + std::string(s) + "'");
}

std::string format_iso8601(std::int64_t unix_seconds) {
  using namespace std::chrono;
  std::int64_t days = unix_seconds / 86400;
  std::int64_t rem = unix_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
  return buf;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

const std::set<std::string, std::less<>>& known_manifest_fields() {
  static const std::set<std::string, std::less<>> fields = {
      "song_id",      "platform",    "streams",     "likes",         "coherence",
      "musicality",   "memorability", "clarity",    "naturalness",   "released_at",
      "embedding_ref", "audio_hash", "streams_score", "likes_score"};
  return fields;
}

class LineError {
 public:
  explicit LineError(std::size_t line) : prefix_("line " + std::to_string(line) + ": ") {}
  [[noreturn]] void fail(const std::string& msg) const { throw FormatError(prefix_ + msg); }

 private:
  std::string prefix_;
};

const ordered_json& require(const ordered_json& obj, const char* key,
                            const LineError& err) {
  const auto it = obj.find(key);
  if (it == obj.end()) err.fail(std::string("missing field ") + key);
  return *it;
}

std::uint64_t require_count(const ordered_json& obj, const char* key,
                            const LineError& err) {
  const ordered_json& v = require(obj, key, err);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) err.fail(std::string(key) + " must be non-negative");
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  err.fail(std::string(key) + " must be a non-negative integer");
}

std::string require_string(const ordered_json& obj, const char* key,
                           const LineError& err) {
  const ordered_json& v = require(obj, key, err);
  if (!v.is_string()) err.fail(std::string(key) + " must be a string");
  return v.get<std::string>();
}

std::optional<double> optional_number(const ordered_json& obj, const char* key,
                                      const LineError& err) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) err.fail(std::string(key) + " must be a number or null");
  const double v = it->get<double>();
  if (!std::isfinite(v)) err.fail(std::string(key) + " must be finite");
  return v;
}

SongRecord parse_manifest_object(const ordered_json& obj, const LineError& err) {
  if (!obj.is_object()) err.fail("expected a JSON object");
  for (const auto& item : obj.items()) {
    if (!known_manifest_fields().contains(item.key())) {
      err.fail("unknown field " + item.key());
    }
  }
  SongRecord r;
  r.song_id = require_string(obj, "song_id", err);
  if (r.song_id.empty()) err.fail("empty song_id");
  try {
    r.platform = parse_platform(require_string(obj, "platform", err));
  } catch (const FormatError& e) {
    err.fail(e.what());
  }
  r.streams = require_count(obj, "streams", err);
  r.likes = require_count(obj, "likes", err);

  std::array<double, 5> aesthetics{};
  int present = 0;
  for (std::size_t k = 0; k < kAestheticNames.size(); ++k) {
    const std::string key(kAestheticNames[k]);
    require(obj, key.c_str(), err);
    const auto v = optional_number(obj, key.c_str(), err);
    if (v) {
      if (*v < 1.0 || *v > 5.0) err.fail(key + " outside [1, 5]");
      aesthetics[k] = *v;
      ++present;
    }
  }
  if (present == 5) {
    r.aesthetics = aesthetics;
  } else if (present != 0) {
    err.fail("aesthetic labels must be all present or all null");
  }

  const ordered_json& released = require(obj, "released_at", err);
  if (!released.is_null()) {
    if (!released.is_string()) err.fail("released_at must be a string or null");
    try {
      r.released_at = parse_iso8601(released.get<std::string>());
    } catch (const FormatError& e) {
      err.fail(e.what());
    }
  }
  r.embedding_ref = require_string(obj, "embedding_ref", err);

  if (const auto it = obj.find("audio_hash"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) err.fail("audio_hash must be a string or null");
    r.audio_hash = it->get<std::string>();
  }
  r.streams_score = optional_number(obj, "streams_score", err);
  r.likes_score = optional_number(obj, "likes_score", err);
  for (const auto& s : {r.streams_score, r.likes_score}) {
    if (s && (*s < 0.0 || *s > 100.0)) err.fail("score outside [0, 100]");
  }
  return r;
}

}  // namespace

std::vector<SongRecord> parse_manifest(std::string_view text) {
  std::vector<SongRecord> out;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    const LineError err(line_no);
    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      err.fail(std::string("invalid JSON: ") + e.what());
    }
    SongRecord r = parse_manifest_object(obj, err);
    if (!seen.insert(r.song_id).second) {
      throw FormatError("line " + std::to_string(line_no) + ": duplicate song_id " +
                        r.song_id);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SongRecord> load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path));
}

std::string format_manifest_line(const SongRecord& r) {
  ordered_json obj;
  obj["song_id"] = r.song_id;
  obj["platform"] = std::string(to_string(r.platform));
  obj["streams"] = r.streams;
  obj["likes"] = r.likes;
  for (std::size_t k = 0; k < kAestheticNames.size(); ++k) {
    const std::string key(kAestheticNames[k]);
    if (r.aesthetics) {
      obj[key] = (*r.aesthetics)[k];
    } else {
      obj[key] = nullptr;
    }
  }
  if (r.released_at) {
    obj["released_at"] = format_iso8601(*r.released_at);
  } else {
    obj["released_at"] = nullptr;
  }
  obj["embedding_ref"] = r.embedding_ref;
  if (r.audio_hash) obj["audio_hash"] = *r.audio_hash;
  if (r.streams_score) obj["streams_score"] = *r.streams_score;
  if (r.likes_score) obj["likes_score"] = *r.likes_score;
  return obj.dump();
}

std::string format_manifest(std::span<const SongRecord> records) {
  std::string out;
  for (const SongRecord& r : records) {
    out += format_manifest_line(r);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Embeddings

namespace {
constexpr std::string_view kEmbeddingMagic = "APEXEMB1";
constexpr std::uint32_t kEmbeddingVersion = 1;
}  // namespace

void validate_embeddings(const SegmentEmbeddingSet& set) {
  if (set.values.rows() != kEmbeddingDim || set.values.cols() % kEmbeddingLayers != 0) {
    throw DimensionError("embedding set " + set.song_id + ": expected dims (4, 768)");
  }
  if (set.n_segments() < 1) {
    throw DimensionError("embedding set " + set.song_id + ": n_segments must be >= 1");
  }
  if (!set.values.allFinite()) {
    throw DomainError("embedding set " + set.song_id + ": non-finite values");
  }
}

std::string encode_embeddings(const SegmentEmbeddingSet& set) {
  validate_embeddings(set);
  std::string out;
  out.reserve(8 + 16 + static_cast<std::size_t>(set.values.size()) * 4);
  out.append(kEmbeddingMagic);
  put_u32(out, kEmbeddingVersion);
  put_u32(out, static_cast<std::uint32_t>(set.n_segments()));
  put_u32(out, kEmbeddingLayers);
  put_u32(out, kEmbeddingDim);
  // Column-major storage is already segment-major, layer-major, dim-minor.
  const double* data = set.values.data();
  for (Eigen::Index i = 0; i < set.values.size(); ++i) put_f32(out, static_cast<float>(data[i]));
  return out;
}

SegmentEmbeddingSet decode_embeddings(std::string_view bytes, std::string song_id) {
  const std::string what = "embedding file" + (song_id.empty() ? "" : " for " + song_id);
  ByteReader in(bytes, what);
  if (bytes.size() < kEmbeddingMagic.size() ||
      in.take(kEmbeddingMagic.size()) != kEmbeddingMagic) {
    throw FormatError(what + ": bad magic");
  }
  const std::uint32_t version = in.u32();
  if (version != kEmbeddingVersion) {
    throw FormatError(what + ": unsupported version " + std::to_string(version));
  }
  const std::uint32_t n_segments = in.u32();
  const std::uint32_t n_layers = in.u32();
  const std::uint32_t dim = in.u32();
  if (n_segments == 0 || n_layers != kEmbeddingLayers || dim != kEmbeddingDim) {
    throw DimensionError(what + ": header declares n_segments=" + std::to_string(n_segments) +
                         ", n_layers=" + std::to_string(n_layers) +
                         ", dim=" + std::to_string(dim));
  }
  const std::size_t count = std::size_t{n_segments} * n_layers * dim;
  if (in.remaining() < count * 4) {
    throw IoError(what + ": truncated payload (" + std::to_string(in.remaining()) +
                  " of " + std::to_string(count * 4) + " bytes)");
  }
  if (in.remaining() > count * 4) throw FormatError(what + ": trailing bytes");

  SegmentEmbeddingSet set;
  set.song_id = std::move(song_id);
  set.values.resize(dim, Eigen::Index{n_segments} * n_layers);
  double* data = set.values.data();
  for (std::size_t i = 0; i < count; ++i) data[i] = static_cast<double>(in.f32());
  if (!set.values.allFinite()) throw DomainError(what + ": non-finite values");
  return set;
}

SegmentEmbeddingSet load_embedding_file(const std::filesystem::path& path,
                                        std::string song_id) {
  return decode_embeddings(read_file(path), std::move(song_id));
}

void save_embedding_file(const std::filesystem::path& path,
                         const SegmentEmbeddingSet& set) {
  write_file_atomic(path, encode_embeddings(set));
}

std::filesystem::path embedding_path(const std::filesystem::path& store,
                                     const SongRecord& record) {
  if (record.embedding_ref.empty()) return store / (record.song_id + ".emb");
  return store / record.embedding_ref;
}

SegmentEmbeddingSet load_embeddings(const std::filesystem::path& store,
                                    const SongRecord& record) {
  return load_embedding_file(embedding_path(store, record), record.song_id);
}

// ---------------------------------------------------------------------------
// Filtering

std::vector<SongRecord> filter_songs(std::span<const SongRecord> records,
                                     const FilterRules& rules) {
  std::vector<SongRecord> out;
  std::unordered_set<std::string> seen;
  for (const SongRecord& r : records) {
    if (rules.drop_zero_streams && r.streams == 0) continue;
    if (rules.recency_cutoff && r.released_at && *r.released_at > *rules.recency_cutoff) {
      continue;
    }
    if (rules.dedup) {
      const std::optional<std::string> key =
          *rules.dedup == DedupKey::kSongId ? std::optional<std::string>(r.song_id)
                                            : r.audio_hash;
      if (key && !seen.insert(*key).second) continue;
    }
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stratification

std::vector<std::size_t> largest_remainder(std::span<const double> weights,
                                           std::size_t total) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weights.empty() || !(sum > 0.0)) {
    throw DomainError("largest_remainder: weights must have a positive sum");
  }
  std::vector<std::size_t> alloc(weights.size());
  std::vector<double> rem(weights.size());
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] < 0.0) throw DomainError("largest_remainder: negative weight");
    const double quota = static_cast<double>(total) * weights[j] / sum;
    alloc[j] = static_cast<std::size_t>(std::floor(quota));
    rem[j] = quota - static_cast<double>(alloc[j]);
    assigned += alloc[j];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % order.size()) {
    ++alloc[order[k]];
    ++assigned;
  }
  return alloc;
}

std::vector<int> streams_strata(std::span<const SongRecord> records, int n_strata) {
  if (n_strata < 1) throw DomainError("n_strata must be positive");
  const std::size_t n = records.size();
  if (n < static_cast<std::size_t>(n_strata)) {
    throw DomainError("too few records (" + std::to_string(n) + ") for " +
                      std::to_string(n_strata) + " strata");
  }
  std::vector<int> strata(n, 0);
  if (n < 2) return strata;
  std::vector<double> streams(n);
  for (std::size_t i = 0; i < n; ++i) streams[i] = static_cast<double>(records[i].streams);
  const std::vector<double> ranks = average_ranks(streams);
  for (std::size_t i = 0; i < n; ++i) {
    const double bin = std::floor((ranks[i] - 1.0) * n_strata / static_cast<double>(n));
    strata[i] = std::min(n_strata - 1, static_cast<int>(bin));
  }
  return strata;
}

namespace {

/// Record indices grouped by stratum, each group shuffled.
std::vector<std::vector<std::size_t>> shuffled_strata(std::span<const SongRecord> records,
                                                      int n_strata, std::uint64_t seed) {
  const std::vector<int> strata = streams_strata(records, n_strata);
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(n_strata));
  for (std::size_t i = 0; i < records.size(); ++i) {
    groups[static_cast<std::size_t>(strata[i])].push_back(i);
  }
  Rng rng(seed);
  for (auto& g : groups) rng.shuffle(g.begin(), g.end());
  return groups;
}

}  // namespace

DatasetSplit stratified_split(std::span<const SongRecord> records,
                              const std::array<double, 3>& fractions, int n_strata,
                              std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw DomainError("split fractions must be >= 0");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("split fractions must sum to 1");

  const auto groups = shuffled_strata(records, n_strata, seed);
  const std::size_t n_groups = groups.size();

  // Per-stratum floors, then remainders handed out so that the global
  // totals match the largest-remainder allocation of the whole set.
  const std::vector<std::size_t> totals = largest_remainder(fractions, records.size());
  std::vector<std::array<std::size_t, 3>> alloc(n_groups);
  std::vector<std::array<double, 3>> rem(n_groups);
  std::array<std::size_t, 3> need = {totals[0], totals[1], totals[2]};
  std::vector<std::size_t> left(n_groups);
  for (std::size_t s = 0; s < n_groups; ++s) {
    left[s] = groups[s].size();
    for (std::size_t j = 0; j < 3; ++j) {
      const double quota = static_cast<double>(groups[s].size()) * fractions[j];
      alloc[s][j] = static_cast<std::size_t>(std::floor(quota));
      rem[s][j] = quota - static_cast<double>(alloc[s][j]);
      need[j] -= alloc[s][j];
      left[s] -= alloc[s][j];
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t s = 0; s < n_groups; ++s) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (rem[s][j] > 0.0) cells.emplace_back(s, j);
    }
  }
  std::stable_sort(cells.begin(), cells.end(), [&](const auto& a, const auto& b) {
    return rem[a.first][a.second] > rem[b.first][b.second];
  });
  for (const auto& [s, j] : cells) {
    if (need[j] > 0 && left[s] > 0) {
      ++alloc[s][j];
      --need[j];
      --left[s];
    }
  }
  // The greedy pass can strand a stratum whose open splits are already
  // full. Shift units along alternating paths (stratum -> split it may still
  // grow in -> stratum that may shrink in that split -> ...) until a split
  // with remaining need is reached, keeping every cell at floor or ceil.
  auto can_grow = [&](std::size_t s, std::size_t j) {
    return rem[s][j] > 0.0 && alloc[s][j] == static_cast<std::size_t>(std::floor(
                                                  static_cast<double>(groups[s].size()) * fractions[j]));
  };
  auto can_shrink = [&](std::size_t s, std::size_t j) { return !can_grow(s, j) && rem[s][j] > 0.0; };
  for (std::size_t s0 = 0; s0 < n_groups; ++s0) {
    while (left[s0] > 0) {
      // BFS over strata; parent links record (previous stratum, split).
      std::vector<std::pair<std::size_t, std::size_t>> parent(n_groups, {SIZE_MAX, 0});
      std::vector<char> seen(n_groups, 0);
      std::vector<std::size_t> queue = {s0};
      seen[s0] = 1;
      std::optional<std::pair<std::size_t, std::size_t>> end;  // (stratum, split)
      for (std::size_t qi = 0; qi < queue.size() && !end; ++qi) {
        const std::size_t s = queue[qi];
        for (std::size_t j = 0; j < 3 && !end; ++j) {
          if (!can_grow(s, j)) continue;
          if (need[j] > 0) {
            end = {s, j};
            break;
          }
          for (std::size_t t = 0; t < n_groups; ++t) {
            if (!seen[t] && can_shrink(t, j)) {
              seen[t] = 1;
              parent[t] = {s, j};
              queue.push_back(t);
            }
          }
        }
      }
      if (!end) break;
      auto [s, j] = *end;
      ++alloc[s][j];
      --need[j];
      while (s != s0) {
        const auto [prev, via] = parent[s];
        --alloc[s][via];
        ++alloc[prev][via];
        s = prev;
      }
      --left[s0];
    }
  }
  // Unreachable for consistent inputs; keeps the partition total regardless.
  for (std::size_t s = 0; s < n_groups; ++s) {
    for (std::size_t j = 0; j < 3 && left[s] > 0; ++j) {
      const std::size_t take = std::min(left[s], need[j]);
      alloc[s][j] += take;
      need[j] -= take;
      left[s] -= take;
    }
  }

  std::vector<int> assignment(records.size(), -1);
  for (std::size_t s = 0; s < n_groups; ++s) {
    std::size_t k = 0;
    for (int j = 0; j < 3; ++j) {
      for (std::size_t c = 0; c < alloc[s][static_cast<std::size_t>(j)]; ++c) {
        assignment[groups[s][k++]] = j;
      }
    }
  }

  DatasetSplit split;
  split.fractions = fractions;
  for (std::size_t i = 0; i < records.size(); ++i) {
    switch (assignment[i]) {
      case 0: split.train_ids.push_back(records[i].song_id); break;
      case 1: split.test_ids.push_back(records[i].song_id); break;
      case 2: split.val_ids.push_back(records[i].song_id); break;
      default: throw Error("stratified_split: unassigned record");  // unreachable
    }
  }
  return split;
}

std::vector<SongRecord> stratified_downsample(std::span<const SongRecord> records,
                                              std::size_t target_size, int n_strata,
                                              std::uint64_t seed) {
  if (target_size > records.size()) {
    throw DomainError("downsample target " + std::to_string(target_size) +
                      " exceeds population " + std::to_string(records.size()));
  }
  if (target_size == 0) throw DomainError("downsample target must be positive");
  const auto groups = shuffled_strata(records, n_strata, seed);
  std::vector<double> sizes;
  for (const auto& g : groups) sizes.push_back(static_cast<double>(g.size()));
  const std::vector<std::size_t> take = largest_remainder(sizes, target_size);

  std::vector<char> keep(records.size(), 0);
  for (std::size_t s = 0; s < groups.size(); ++s) {
    for (std::size_t k = 0; k < take[s]; ++k) keep[groups[s][k]] = 1;
  }
  std::vector<SongRecord> out;
  out.reserve(target_size);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) out.push_back(records[i]);
  }
  return out;
}

std::string format_split_json(const DatasetSplit& split) {
  ordered_json j;
  j["fractions"] = split.fractions;
  j["train"] = split.train_ids;
  j["test"] = split.test_ids;
  j["val"] = split.val_ids;
  return j.dump(2) + "\n";
}

DatasetSplit parse_split_json(std::string_view text) {
  DatasetSplit split;
  try {
    const auto j = ordered_json::parse(text);
    split.fractions = j.at("fractions").get<std::array<double, 3>>();
    split.train_ids = j.at("train").get<std::vector<std::string>>();
    split.test_ids = j.at("test").get<std::vector<std::string>>();
    split.val_ids = j.at("val").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("split file: ") + e.what());
  }
  std::unordered_set<std::string> seen;
  for (const auto* ids : {&split.train_ids, &split.test_ids, &split.val_ids}) {
    for (const auto& id : *ids) {
      if (!seen.insert(id).second) throw FormatError("split file: id " + id + " repeated");
    }
  }
  return split;
}

}  // namespace songpop
