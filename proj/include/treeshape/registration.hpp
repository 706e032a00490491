#pragma once

#include "treeshape/srvf.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace treeshape {

// ---------------------------------------------------------------------------
// Elastic registration of single branches.

struct DpResult {
  Warp warp;
  /// Minimum lattice-path cost found by the dynamic program.
  double path_cost = 0.0;
};

/// Optimal warp of q2 onto q1 by dynamic programming on the N x N grid.
/// With `refine` the lattice path is then smoothed and polished by coordinate
/// descent on the grid values. Returns the identity when either input is null
/// or when no warp improves on the unwarped distance.
DpResult dp_reparam(const QBranch& q1, const QBranch& q2, bool refine = true);

namespace detail {

/// Lattice steps (di, dj) allowed between path vertices.
const std::array<std::pair<int, int>, 7>& dp_stencil();

/// Cost of the straight path segment (k, l) -> (i, j): trapezoid rule over the
/// q1 samples k..i of |q1 - sqrt(slope) q2(gamma)|^2 with q2 linearly
/// interpolated along the segment.
double dp_segment_cost(const QBranch& q1, const QBranch& q2, int k, int l, int i, int j);

}  // namespace detail

// ---------------------------------------------------------------------------
// Tree registration.

/// Registration of a tree-2 node onto a tree-1 node: the warp of the tree-2
/// main branch and the matching of their subtrees, recursively.
struct Correspondence {
  Warp warp;
  /// permutation[i] is the tree-2 child slot matched to tree-1 child slot i.
  std::vector<std::size_t> permutation;
  /// children[i] registers tree-2 child permutation[i] onto tree-1 child i.
  std::vector<Correspondence> children;

  /// Identity warps and permutations over the structure of `srvft`.
  static Correspondence identity(const SRVFT& srvft);
};

struct Alignment {
  Mat3 rotation = Mat3::Identity();
  Correspondence correspondence;
  /// Final distance after registration.
  double distance = 0.0;
  /// Distance after the initial matching and after every iteration.
  std::vector<double> history;
};

struct AlignOptions {
  /// Alternations of rotation and reparameterization/permutation updates.
  std::size_t max_iterations = 5;
  /// Stop when the relative improvement of the squared distance drops below this.
  double tolerance = 1e-8;
  /// Hierarchy levels considered when aligning; 0 uses the full depth.
  std::size_t n_levels = 0;
  /// Levels of each subtree pair looked at while filling a cost matrix.
  std::size_t pair_levels = 2;
  /// Initial rotations tried (the first start, then seeded random rotations).
  std::size_t restarts = 1;
  /// First start from the best trunk-only alignment over the 24 axis
  /// rotations instead of the identity.
  bool trunk_seed = true;
  std::uint64_t seed = 0;
};

/// Tree 1 with null attachment parameters inherited from their partners, and
/// tree 2 rotated, warped and permuted onto tree 1's structure.
struct RegisteredPair {
  SRVFT source;
  SRVFT target;
};

/// Applies rotation and correspondence to q2. Attachment parameters of tree 2
/// are carried through the inverse of the parent warp so attachment points
/// stay put; null subtrees take the attachment parameter of their partner.
RegisteredPair apply_correspondence(const SRVFT& q1, const SRVFT& q2, const Mat3& rotation,
                                    const Correspondence& correspondence);

RegisteredPair apply_alignment(const SRVFT& q1, const SRVFT& q2, const Alignment& alignment);

/// Weighted orthogonal Procrustes over all corresponding spatial samples of two
/// structurally identical representations. A branch at depth d is weighted by
/// lambda_m * lambda_s^d. Returns R in SO(3) minimizing |q1 - R q2|.
Mat3 procrustes_rotation(const SRVFT& q1, const SRVFT& q2, const MetricWeights& weights);

/// Cost of matching child i of q1 with child j of q2 under `rotation`:
/// lambda_s times the registered subtree distance plus the sliding term.
/// `parent_warp` maps q2's attachment parameters (identity when null).
struct PairCost {
  double cost = 0.0;
  Correspondence correspondence;
};
PairCost pair_cost(std::size_t i, std::size_t j, const SRVFT& q1, const SRVFT& q2,
                   const MetricWeights& weights, std::size_t n_levels,
                   const Mat3& rotation = Mat3::Identity(), const Warp* parent_warp = nullptr,
                   std::size_t pair_levels = 2);

/// One reparameterization + permutation sweep under a fixed rotation.
struct ReparamPermuteResult {
  Correspondence correspondence;
  /// Registered squared distance under the sweep's own bookkeeping.
  double cost = 0.0;
};
ReparamPermuteResult reparam_permute(const Mat3& rotation, const SRVFT& q1, const SRVFT& q2,
                                     const MetricWeights& weights, std::size_t n_levels,
                                     std::size_t pair_levels = 2);

/// Alternates reparam_permute and procrustes_rotation. Both inputs must share
/// one padded structure. Each accepted step never increases the distance.
Alignment align_trees(const SRVFT& q1, const SRVFT& q2, const MetricWeights& weights,
                      const AlignOptions& options = {});

/// Uniformly distributed rotation from a counter-based stream.
Mat3 random_rotation(std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace treeshape
