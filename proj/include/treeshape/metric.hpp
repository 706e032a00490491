#pragma once

#include "treeshape/registration.hpp"
#include "treeshape/srvf.hpp"
#include "treeshape/tree.hpp"

#include <cstddef>
#include <vector>

namespace treeshape {

/// Weighted distance between two representations already in correspondence:
///   d^2 = lm |q1 - q2|^2 + ls sum d^2(subtrees) + lp sum (s1 - s2)^2,
/// and zero between two null trees. Throws StructureMismatch when child counts
/// differ and GridMismatch when branch grids differ.
double tree_distance_squared(const SRVFT& q1, const SRVFT& q2, const MetricWeights& weights);
double tree_distance(const SRVFT& q1, const SRVFT& q2, const MetricWeights& weights);

struct MatchOptions {
  std::size_t samples_per_branch = 100;
  bool scale_invariant = true;
  /// Thickness weight for reported distances, geodesics and statistics.
  double thickness_weight = 1.0;
  /// Thickness weight while computing correspondences.
  double match_thickness_weight = 0.0;
  AlignOptions align;
};

/// Resamples every branch and normalizes translation (and scale).
Tree prepare_tree(const Tree& tree, const MatchOptions& options);

struct Registration {
  /// Prepared, padded inputs.
  Tree source_tree;
  Tree target_tree;
  Alignment alignment;
  /// Registered representations at options.thickness_weight.
  RegisteredPair registered;
  /// tree_distance(registered.source, registered.target).
  double distance = 0.0;
};

/// Rotation, reparameterization and subtree-order invariant distance:
/// prepare -> pad -> encode -> align -> tree_distance.
Registration invariant_distance(const Tree& t1, const Tree& t2, const MetricWeights& weights,
                                const MatchOptions& options = {});

/// Straight line between the source and the registered target.
struct Geodesic {
  SRVFT source;
  SRVFT target_aligned;
  MetricWeights weights;
  double length = 0.0;

  SRVFT at(double t) const;
};

Geodesic geodesic(const Tree& t1, const Tree& t2, const MetricWeights& weights,
                  const MatchOptions& options = {});
Geodesic geodesic_from(const Registration& registration, const MetricWeights& weights);

/// Tree at parameter t in [0,1]; throws DomainError outside.
Tree eval_geodesic(const Geodesic& geodesic, double t);

/// `frames` trees at uniformly spaced t from 0 to 1 (frames >= 2).
std::vector<Tree> sample_geodesic(const Geodesic& geodesic, std::size_t frames);

}  // namespace treeshape
