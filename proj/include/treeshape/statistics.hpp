#pragma once

#include "treeshape/metric.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace treeshape {

struct KarcherOptions {
  MatchOptions match;
  /// Stop when the relative objective improvement falls below this.
  double tolerance = 1e-6;
  std::size_t max_iterations = 20;
};

struct KarcherResult {
  SRVFT mean;
  /// Alignment of every input onto the mean of the last registration sweep.
  std::vector<Alignment> alignments;
  /// Inputs registered onto that mean; `mean` is their average.
  std::vector<SRVFT> registered;
  /// Sum of squared distances to the mean before each update.
  std::vector<double> objective;
};

KarcherResult karcher_mean(const std::vector<Tree>& trees, const MetricWeights& weights,
                           const KarcherOptions& options = {});

/// Gaussian model of a registered collection in SRVFT coordinates.
struct ShapeModel {
  SRVFT mean;
  /// Descending, nonnegative.
  Eigen::VectorXd eigenvalues;
  /// Orthonormal columns in metric-scaled coordinates (see flatten()).
  Eigen::MatrixXd eigenvectors;
  std::size_t sample_count = 0;
  MetricWeights weights;

  std::size_t dimension() const { return static_cast<std::size_t>(eigenvectors.rows()); }
  std::size_t components() const { return static_cast<std::size_t>(eigenvalues.size()); }
};

/// Coordinates of a representation in the fixed pre-order layout of its
/// structure: per branch its 4 x N samples, then per child its attachment
/// parameter, then the child. Coordinates are scaled so that the Euclidean
/// distance between two flattened representations equals tree_distance.
Eigen::VectorXd flatten(const SRVFT& srvft, const MetricWeights& weights);

/// Inverse of flatten() on the structure of `layout`. Coordinates with zero
/// metric weight, origins and start thicknesses are taken from `layout`.
SRVFT unflatten(const Eigen::VectorXd& coordinates, const SRVFT& layout,
                const MetricWeights& weights);

/// Karcher mean, then principal directions of the registered samples.
ShapeModel fit_pca(const std::vector<Tree>& trees, const MetricWeights& weights,
                   const KarcherOptions& options = {});

/// Principal directions of samples already registered onto `mean`.
ShapeModel fit_pca_registered(const SRVFT& mean, const std::vector<SRVFT>& registered,
                              const MetricWeights& weights);

/// sum_{i<=k} lambda_i / sum lambda_i for k = 1..components (all 1 when the
/// spectrum vanishes).
std::vector<double> cumulative_ratios(const ShapeModel& model);

/// Smallest k whose cumulative ratio exceeds `threshold` (at least 1 when any
/// component exists).
std::size_t leading_components(const ShapeModel& model, double threshold = 0.99);

/// Coefficients a_i with Q = mean + sum a_i sqrt(lambda_i) Lambda_i
/// (zero for vanishing eigenvalues).
Eigen::VectorXd project(const ShapeModel& model, const SRVFT& registered);

/// Representation for coefficients a (fewer than components() are zero-filled;
/// more throws DomainError).
SRVFT synthesize_srvft(const ShapeModel& model, const Eigen::VectorXd& coefficients);
Tree synthesize(const ShapeModel& model, const Eigen::VectorXd& coefficients);

/// k standard normal coefficients drawn from (seed, index), clamped to
/// [-clamp, clamp] when clamp is set.
Eigen::VectorXd sample_coefficients(std::size_t k, std::uint64_t seed, std::uint64_t index,
                                    std::optional<double> clamp);

/// Householder reflection through the plane with normal `normal` containing
/// the trunk start. Throws DomainError for a zero normal.
Tree reflect(const Tree& tree, const Vec3& normal);

struct SymmetryResult {
  /// Geodesic length between the tree and its reflection.
  double asymmetry = 0.0;
  /// Geodesic midpoint, null branches removed.
  Tree symmetric;
  Geodesic path;
};

SymmetryResult symmetrize(const Tree& tree, const Vec3& normal, const MetricWeights& weights,
                          const MatchOptions& options = {});

}  // namespace treeshape
