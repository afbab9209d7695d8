#pragma once

#include <filesystem>
#include <string>

#include "songpop/synth.hpp"
#include "songpop/trainer.hpp"

namespace songpop::testing {

/// Synthetic songs split 85/10/5 and labelled against the training split.
inline GridDatasets synth_splits(int n_songs, std::uint64_t seed,
                                 SignalKind signal = SignalKind::kLinear, int min_segments = 1,
                                 int max_segments = 3) {
  SynthSpec spec;
  spec.n_songs = n_songs;
  spec.seed = seed;
  spec.signal = signal;
  spec.min_segments = min_segments;
  spec.max_segments = max_segments;
  const SynthDataset data = synth_dataset(spec);
  const DatasetSplit split =
      stratified_split(data.records, kDefaultSplitFractions, kDefaultStrata, seed + 1);
  return assemble_datasets(data.records, data.embeddings, split);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("songpop_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace songpop::testing
