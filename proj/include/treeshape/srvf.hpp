#pragma once

#include "treeshape/tree.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace treeshape {

/// Extended square-root velocity function of a branch: the SRVF of the 4D
/// curve [f, c r] sampled on the uniform grid. Rows 0-2 are spatial, row 3 is
/// thickness.
struct QBranch {
  Eigen::Matrix4Xd q;
  /// Thickness weight used at construction.
  double c = 1.0;
  /// c * r(0); the SRVF loses the integration constant of the thickness channel.
  double start_thickness = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(q.cols()); }
  bool is_null() const;

  static QBranch zero(std::size_t n, double c);
};

struct SrvfChild;

/// Recursive tree of ESRVFs mirroring the branch hierarchy of a Tree.
struct SRVFT {
  QBranch q0;
  std::vector<SrvfChild> children;
  /// Start point of the main branch.
  Vec3 origin = Vec3::Zero();

  bool is_null() const;
};

struct SrvfChild {
  double s = 0.0;
  SRVFT tree;
};

/// Relative weights of trunk deformation, subtree deformation and branch sliding.
struct MetricWeights {
  double lambda_m = 1.0;
  double lambda_s = 1.0;
  double lambda_p = 1.0;

  void validate() const;

  static MetricWeights botanical() { return {1.0, 1.0, 1.0}; }
  static MetricWeights neuronal() { return {0.2, 1.0, 0.2}; }
};

/// Derivative of uniformly sampled rows on [0,1]; fourth-order central
/// differences inside, fourth-order one-sided stencils at the ends.
Eigen::MatrixXd grid_derivative(const Eigen::MatrixXd& values);

/// Cumulative integral of uniformly sampled rows on [0,1], starting at zero.
/// Exact for cubics; inverts grid_derivative to fourth order.
Eigen::MatrixXd grid_cumulative_integral(const Eigen::MatrixXd& values);

/// Trapezoid quadrature weights on the uniform n-point grid of [0,1].
Eigen::VectorXd trapezoid_weights(std::size_t n);

QBranch esrvf(const Branch& branch, double c = 1.0);

/// Closed-form inverse; radii are clamped at zero (and are zero when c == 0).
Branch inverse_esrvf(const QBranch& q, const Vec3& origin);

/// Squared L2 distance on the grid (trapezoid rule).
double qdist_squared(const QBranch& a, const QBranch& b);
double qdist(const QBranch& a, const QBranch& b);
double qnorm_squared(const QBranch& q);

/// Throws InvalidRotation unless `rotation` is orthogonal with det +1 (tol 1e-9).
void check_rotation(const Mat3& rotation);

/// Rotates the spatial rows; the thickness row is untouched.
QBranch rotate_q(const QBranch& q, const Mat3& rotation);

/// Monotone reparameterization of [0,1] sampled on the uniform grid.
struct Warp {
  Eigen::VectorXd values;

  static Warp identity(std::size_t n);
  std::size_t size() const { return static_cast<std::size_t>(values.size()); }

  /// Throws InvalidWarp unless endpoints are 0 and 1 and values are nondecreasing.
  void validate() const;

  /// gamma(s) by linear interpolation.
  double operator()(double s) const;

  /// Smallest s with gamma(s) = y.
  double inverse(double y) const;
};

/// (q o gamma) * sqrt(gamma'), linear interpolation of q.
QBranch reparam_q(const QBranch& q, const Warp& gamma);

/// Branch sampled at gamma(s_k).
Branch reparam_branch(const Branch& branch, const Warp& gamma);

SRVFT tree_to_srvft(const Tree& tree, double c = 1.0);

/// Inverse of tree_to_srvft; each subtree starts on its reconstructed parent
/// at its attachment parameter.
Tree srvft_to_tree(const SRVFT& srvft);

/// Rotates every branch of the tree representation.
SRVFT rotate_srvft(const SRVFT& srvft, const Mat3& rotation);

/// Number of branches in the representation.
std::size_t branch_count(const SRVFT& srvft);

/// True when both representations have the same child counts everywhere and
/// the same grid size on every branch.
bool same_structure(const SRVFT& a, const SRVFT& b);

/// (1 - t) a + t b over every coordinate (q, s, origin, start thickness).
/// Throws StructureMismatch on differing structure.
SRVFT interpolate(const SRVFT& a, const SRVFT& b, double t);

}  // namespace treeshape
