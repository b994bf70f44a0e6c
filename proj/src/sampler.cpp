#include "gsc/sampler.hpp"

#include <algorithm>

#include "gsc/errors.hpp"

namespace gsc {

Rng derive_stream(std::uint64_t master_seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(a),           static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),           static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

Subgraph bfs_sample(const Graph& g, std::uint32_t center, std::size_t k, Rng& rng) {
  if (k == 0) throw ContractViolation("bfs_sample: k must be at least 1");
  if (center >= g.n_nodes()) throw ContractViolation("bfs_sample: center " + std::to_string(center) + " out of range");

  std::vector<std::uint32_t> nodes{center};
  std::vector<bool> visited(g.n_nodes(), false);
  visited[center] = true;

  std::vector<std::uint32_t> level{center};
  std::vector<std::uint32_t> next;
  while (nodes.size() < k && !level.empty()) {
    next.clear();
    for (auto u : level)
      for (auto v : g.neighbors(u))
        if (!visited[v]) {
          visited[v] = true;
          next.push_back(v);
        }
    std::shuffle(next.begin(), next.end(), rng);
    const std::size_t take = std::min(next.size(), k - nodes.size());
    nodes.insert(nodes.end(), next.begin(), next.begin() + static_cast<std::ptrdiff_t>(take));
    next.resize(take);
    level.swap(next);
  }

  Subgraph s;
  s.center = center;
  s.adjacency = induced_adjacency(g, nodes);
  s.nodes = std::move(nodes);
  return s;
}

}  // namespace gsc
