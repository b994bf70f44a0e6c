#pragma once

// Stochastic block model datasets.

#include <filesystem>

#include "gsc/config.hpp"
#include "gsc/graph.hpp"

namespace gsc {

// Node ids are block-contiguous. Features are one-hot(block) in the first
// `blocks` coordinates plus N(0, σ²) noise on all feat_dim coordinates; labels
// are blocks; splits are 10/10/80 train/val/test within every block.
Graph gen_synth_sbm(const SbmConfig& cfg);

struct DatasetPaths {
  std::filesystem::path edges;
  std::filesystem::path features;
  std::filesystem::path labels;
  std::filesystem::path splits;
};

DatasetPaths dataset_paths(const std::filesystem::path& dir);

// Writes edges.tsv, features.csv, labels.txt and splits.tsv into `dir`.
DatasetPaths write_dataset(const std::filesystem::path& dir, const Graph& g);

}  // namespace gsc
