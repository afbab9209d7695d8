#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace songpop {

struct SongRecord;

/// Power-transform settings for percentile scores.
struct ScoreTransformConfig {
  /// Exponent chosen so that the 80th percentile maps to a score of 50.
  static double default_alpha();

  double alpha = default_alpha();
};

/// Targets for one song in natural units.
struct LabelVector {
  double streams_score = 0.0;  // [0, 100]
  double likes_score = 0.0;    // [0, 100]
  std::optional<std::array<double, 5>> aesthetics;  // each in [1, 5]
};

/// Percentile ranks in [0, 100]: p = 100 (r - 1) / (n - 1) with average
/// ranks r for ties. Requires at least two counts.
std::vector<double> percentile_ranks(std::span<const std::uint64_t> counts);

/// s = (p / 100)^alpha * 100. Throws DomainError outside [0, 100].
double power_transform(double percentile, const ScoreTransformConfig& cfg = {});

LabelVector build_labels(const SongRecord& record, double streams_percentile,
                         double likes_percentile,
                         const ScoreTransformConfig& cfg = {});

/// Percentile lookup against a fixed reference population.
///
/// Counts present in the reference get exactly the value percentile_ranks
/// assigns them; unseen counts fall between their neighbours and are
/// clamped to [0, 100].
class PercentileReference {
 public:
  explicit PercentileReference(std::span<const std::uint64_t> population);

  double percentile(std::uint64_t count) const;
  std::size_t size() const { return sorted_.size(); }

 private:
  std::vector<std::uint64_t> sorted_;
};

/// Labels for `records` with percentiles taken against the reference
/// populations (typically the training split).
std::vector<LabelVector> label_records(std::span<const SongRecord> records,
                                       const PercentileReference& streams_ref,
                                       const PercentileReference& likes_ref,
                                       const ScoreTransformConfig& cfg = {});

/// Labels where each record's own population is `records` itself.
std::vector<LabelVector> label_records(std::span<const SongRecord> records,
                                       const ScoreTransformConfig& cfg = {});

}  // namespace songpop
