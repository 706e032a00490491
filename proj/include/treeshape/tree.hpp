#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace treeshape {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Discretized skeletal curve with per-point thickness. Column k of `points`
/// is sampled at parameter k / (N - 1).
struct Branch {
  Eigen::Matrix3Xd points;
  Eigen::VectorXd radii;

  Branch() = default;
  Branch(Eigen::Matrix3Xd p, Eigen::VectorXd r) : points(std::move(p)), radii(std::move(r)) {}

  std::size_t size() const { return static_cast<std::size_t>(points.cols()); }
  Vec3 start() const { return points.col(0); }

  /// Polyline arc length.
  double length() const;

  /// All points identical and all radii zero.
  bool is_null() const;

  /// Position at parameter s in [0,1] by linear interpolation between samples.
  Vec3 at(double s) const;

  /// Throws DataError when the invariants (N >= 2, matching radii, radii >= 0) fail.
  void validate() const;

  /// Null branch: n copies of `anchor`, zero radii.
  static Branch null_at(const Vec3& anchor, std::size_t n);
};

struct AttachedSubtree;

/// Recursive tree: a main branch plus subtrees attached along it.
struct Tree {
  Branch main;
  std::vector<AttachedSubtree> children;

  /// Main branch null and every descendant null.
  bool is_null() const;

  /// Number of levels (a single branch has one).
  std::size_t depth() const;

  /// Total number of branches.
  std::size_t branch_count() const;

  void validate() const;
};

struct AttachedSubtree {
  double s = 0.0;
  Tree tree;
};

/// Translate the trunk start to the origin and, when `scale_invariant`, divide
/// every coordinate and radius by the trunk arc length.
Tree normalize(const Tree& tree, bool scale_invariant = true);

/// Uniform arc-length resampling to n points; radii interpolated linearly.
Branch resample_branch(const Branch& branch, std::size_t n);

/// Resample every branch to n points. Attachment parameters are converted to
/// arc-length fractions of the resampled parent so attachment points stay put.
Tree resample_tree(const Tree& tree, std::size_t n);

/// Per hierarchy level, the maximum number of subtrees attached to a branch at
/// that level. A single branch yields {0}.
std::vector<std::size_t> tree_order(const Tree& tree);

/// Maximum number of levels kept after ingestion.
inline constexpr std::size_t kMaxLevels = 4;

/// Lifts subtrees deeper than `max_levels` onto their grandparent, attached at
/// the parent's attachment parameter. `lifted` receives the number of moved subtrees.
Tree limit_depth(const Tree& tree, std::size_t max_levels = kMaxLevels, std::size_t* lifted = nullptr);

/// Completes both trees with null branches so every branch at level l carries
/// exactly max(order1[l], order2[l], min_profile[l]) subtrees. Real children keep
/// their index; null children are appended. A null branch takes the attachment
/// parameter of the branch it is provisionally paired with (nearest s) and is
/// anchored on its parent at that parameter.
std::pair<Tree, Tree> pad_null_branches(const Tree& t1, const Tree& t2,
                                        const std::vector<std::size_t>& min_profile = {});

/// Removes every null subtree.
Tree strip_null_branches(const Tree& tree);

/// Applies `rotation` about the trunk start point.
Tree rotate_tree(const Tree& tree, const Mat3& rotation);

/// Maximum pointwise distance between corresponding points of two trees with
/// identical structure. Throws StructureMismatch otherwise.
double max_point_distance(const Tree& a, const Tree& b);

}  // namespace treeshape
