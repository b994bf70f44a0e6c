#pragma once

#include <cstdint>
#include <random>

#include "gsc/graph.hpp"

namespace gsc {

using Rng = std::mt19937_64;

// Independent deterministic stream for (master seed, a, b). Used to give every
// (epoch, center) its own generator so sampling order does not matter.
Rng derive_stream(std::uint64_t master_seed, std::uint64_t a, std::uint64_t b = 0);

// Breadth-first neighbor subgraph of `center` with at most k nodes.
//
// Level by level: the unvisited neighbors of the current level are shuffled
// with `rng` and appended until k nodes are held. A component smaller than k
// is returned whole. nodes[0] is the center; adjacency is the induced 0/1
// structure in discovery order.
Subgraph bfs_sample(const Graph& g, std::uint32_t center, std::size_t k, Rng& rng);

}  // namespace gsc
