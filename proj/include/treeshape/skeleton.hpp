#pragma once

#include "treeshape/tree.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace treeshape {

/// Skeleton as an undirected graph of sample points rooted at `root`.
struct SkeletonGraph {
  std::vector<Vec3> positions;
  std::vector<double> radii;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::size_t root = 0;
};

enum class MainBranchRule {
  /// Least bent root-to-tip path (total turning angle per unit length).
  Botanical,
  /// Longest root-to-tip path.
  Neuronal,
};

/// Total turning angle between consecutive chords divided by arc length.
/// Zero-length chords are skipped; a path shorter than two chords scores 0.
double bending_score(const std::vector<Vec3>& path);

/// Builds a Tree by choosing, recursively from the root, the main root-to-tip
/// path under `rule`; every other path is attached at its branch point.
/// Throws DisconnectedSkeleton or CyclicSkeleton when the graph is not a tree.
Tree select_main_branch(const SkeletonGraph& graph, MainBranchRule rule);

}  // namespace treeshape
