#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace treeshape {

struct AssignmentResult {
  /// mapping[i] is the column assigned to row i.
  std::vector<std::size_t> mapping;
  /// Sum of cost(i, mapping[i]) accumulated in row order.
  double cost = 0.0;
};

/// Linear sum assignment on a square matrix of finite costs (Kuhn-Munkres with
/// potentials). Among optimal assignments the lexicographically smallest
/// mapping is returned. Throws DomainError on non-square or non-finite input.
AssignmentResult solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace treeshape
