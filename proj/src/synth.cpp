#include "gsc/synth.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "gsc/errors.hpp"
#include "gsc/sampler.hpp"

namespace gsc {

Graph gen_synth_sbm(const SbmConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.blocks * cfg.nodes_per_block;
  auto block_of = [&](std::size_t i) { return i / cfg.nodes_per_block; };

  Rng edge_rng = derive_stream(cfg.seed, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = block_of(i) == block_of(j) ? cfg.p_in : cfg.p_out;
      if (unit(edge_rng) < p) edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    }

  Rng feat_rng = derive_stream(cfg.seed, 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix features(n, cfg.feat_dim);
  for (std::size_t i = 0; i < n; ++i) {
    features(i, block_of(i)) = 1.0;
    if (cfg.noise_sigma > 0.0)
      for (std::size_t d = 0; d < cfg.feat_dim; ++d) features(i, d) += cfg.noise_sigma * noise(feat_rng);
  }

  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(block_of(i));

  Rng split_rng = derive_stream(cfg.seed, 2);
  std::vector<Split> splits(n, Split::test);
  const std::size_t n_train = (cfg.nodes_per_block + 5) / 10;
  const std::size_t n_val = (cfg.nodes_per_block + 5) / 10;
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    std::vector<std::size_t> ids(cfg.nodes_per_block);
    std::iota(ids.begin(), ids.end(), b * cfg.nodes_per_block);
    std::shuffle(ids.begin(), ids.end(), split_rng);
    for (std::size_t r = 0; r < ids.size(); ++r)
      splits[ids[r]] = r < n_train ? Split::train : r < n_train + n_val ? Split::val : Split::test;
  }

  return Graph::from_edges(n, edges, std::move(features), std::move(labels), std::move(splits));
}

DatasetPaths dataset_paths(const std::filesystem::path& dir) {
  return {dir / "edges.tsv", dir / "features.csv", dir / "labels.txt", dir / "splits.tsv"};
}

DatasetPaths write_dataset(const std::filesystem::path& dir, const Graph& g) {
  std::filesystem::create_directories(dir);
  const auto paths = dataset_paths(dir);
  write_edges(paths.edges, g);
  write_features(paths.features, g.features());
  if (g.labels()) write_labels(paths.labels, *g.labels());
  if (g.splits()) write_splits(paths.splits, *g.splits());
  return paths;
}

}  // namespace gsc
