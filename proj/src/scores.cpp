#include "songpop/scores.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "songpop/common.hpp"
#include "songpop/datamodel.hpp"
#include "songpop/ranks.hpp"

namespace songpop {

double ScoreTransformConfig::default_alpha() {
  return std::log(0.5) / std::log(0.8);
}

std::vector<double> percentile_ranks(std::span<const std::uint64_t> counts) {
  const std::size_t n = counts.size();
  if (n < 2) {
    throw DomainError("percentile_ranks: need at least 2 counts, got " +
                      std::to_string(n));
  }
  std::vector<double> as_real(counts.begin(), counts.end());
  std::vector<double> p = average_ranks(as_real);
  const double denom = static_cast<double>(n - 1);
  for (double& r : p) r = 100.0 * (r - 1.0) / denom;
  return p;
}

double power_transform(double percentile, const ScoreTransformConfig& cfg) {
  if (!(percentile >= 0.0 && percentile <= 100.0)) {
    throw DomainError("power_transform: percentile " +
                      std::to_string(percentile) + " outside [0, 100]");
  }
  if (!(cfg.alpha > 0.0)) throw DomainError("power_transform: alpha must be > 0");
  return std::pow(percentile / 100.0, cfg.alpha) * 100.0;
}

LabelVector build_labels(const SongRecord& record, double streams_percentile,
                         double likes_percentile,
                         const ScoreTransformConfig& cfg) {
  LabelVector out;
  out.streams_score = power_transform(streams_percentile, cfg);
  out.likes_score = power_transform(likes_percentile, cfg);
  out.aesthetics = record.aesthetics;
  return out;
}

PercentileReference::PercentileReference(
    std::span<const std::uint64_t> population)
    : sorted_(population.begin(), population.end()) {
  if (sorted_.size() < 2) {
    throw DomainError("percentile reference needs at least 2 counts");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double PercentileReference::percentile(std::uint64_t count) const {
  const auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), count);
  const auto hi = std::upper_bound(lo, sorted_.end(), count);
  const double less = static_cast<double>(lo - sorted_.begin());
  const double equal = static_cast<double>(hi - lo);
  // Average rank is less + (equal + 1) / 2; an unseen count sits half a
  // rank below its upper neighbour.
  const double rank_minus_one = less + 0.5 * (equal - 1.0);
  const double p = 100.0 * rank_minus_one / static_cast<double>(sorted_.size() - 1);
  return std::clamp(p, 0.0, 100.0);
}

std::vector<LabelVector> label_records(std::span<const SongRecord> records,
                                       const PercentileReference& streams_ref,
                                       const PercentileReference& likes_ref,
                                       const ScoreTransformConfig& cfg) {
  std::vector<LabelVector> out;
  out.reserve(records.size());
  for (const SongRecord& r : records) {
    out.push_back(build_labels(r, streams_ref.percentile(r.streams),
                               likes_ref.percentile(r.likes), cfg));
  }
  return out;
}

std::vector<LabelVector> label_records(std::span<const SongRecord> records,
                                       const ScoreTransformConfig& cfg) {
  std::vector<std::uint64_t> streams, likes;
  streams.reserve(records.size());
  likes.reserve(records.size());
  for (const SongRecord& r : records) {
    streams.push_back(r.streams);
    likes.push_back(r.likes);
  }
  const std::vector<double> sp = percentile_ranks(streams);
  const std::vector<double> lp = percentile_ranks(likes);
  std::vector<LabelVector> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.push_back(build_labels(records[i], sp[i], lp[i], cfg));
  }
  return out;
}

}  // namespace songpop
