#include "treeshape/assignment.hpp"

#include "treeshape/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace treeshape {

namespace {

using Index = Eigen::Index;

// Kuhn augmenting search restricted to the tight edges among free rows/columns.
bool augment(Index row, const std::vector<std::vector<Index>>& adj, std::vector<Index>& col_owner,
             std::vector<char>& seen) {
  for (Index c : adj[static_cast<std::size_t>(row)]) {
    auto& mark = seen[static_cast<std::size_t>(c)];
    if (mark) continue;
    mark = 1;
    auto& owner = col_owner[static_cast<std::size_t>(c)];
    if (owner < 0 || augment(owner, adj, col_owner, seen)) {
      owner = row;
      return true;
    }
  }
  return false;
}

// Does a perfect matching of rows [first, n) exist on columns not in `taken`?
bool completable(Index first, Index n, const std::vector<std::vector<Index>>& tight,
                 const std::vector<char>& taken) {
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(n));
  for (Index r = first; r < n; ++r)
    for (Index c : tight[static_cast<std::size_t>(r)])
      if (!taken[static_cast<std::size_t>(c)]) adj[static_cast<std::size_t>(r)].push_back(c);
  std::vector<Index> owner(static_cast<std::size_t>(n), -1);
  for (Index r = first; r < n; ++r) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    if (!augment(r, adj, owner, seen)) return false;
  }
  return true;
}

}  // namespace

AssignmentResult solve_assignment(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols()) throw DomainError("assignment cost matrix must be square");
  if (!cost.allFinite()) throw DomainError("assignment costs must be finite");
  const Index n = cost.rows();
  AssignmentResult result;
  if (n == 0) return result;

  // Shortest augmenting paths with row/column potentials, 1-based internally.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  // Every optimal assignment uses only edges that are tight for an optimal
  // dual. Pick the lexicographically smallest perfect matching among them.
  const double tol = 1e-12 * (1.0 + cost.cwiseAbs().maxCoeff());
  std::vector<std::vector<Index>> tight(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (cost(i, j) - u[static_cast<std::size_t>(i + 1)] - v[static_cast<std::size_t>(j + 1)] <= tol)
        tight[static_cast<std::size_t>(i)].push_back(j);

  std::vector<std::size_t> hungarian(static_cast<std::size_t>(n));
  for (Index j = 1; j <= n; ++j)
    hungarian[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = static_cast<std::size_t>(j - 1);

  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  result.mapping.assign(static_cast<std::size_t>(n), 0);
  bool ok = true;
  for (Index i = 0; i < n && ok; ++i) {
    bool placed = false;
    for (Index j : tight[static_cast<std::size_t>(i)]) {
      if (taken[static_cast<std::size_t>(j)]) continue;
      taken[static_cast<std::size_t>(j)] = 1;
      if (completable(i + 1, n, tight, taken)) {
        result.mapping[static_cast<std::size_t>(i)] = static_cast<std::size_t>(j);
        placed = true;
        break;
      }
      taken[static_cast<std::size_t>(j)] = 0;
    }
    ok = placed;
  }
  if (!ok) result.mapping = hungarian;  // tolerance too tight for the rounding at hand

  for (Index i = 0; i < n; ++i) result.cost += cost(i, static_cast<Index>(result.mapping[static_cast<std::size_t>(i)]));
  return result;
}

}  // namespace treeshape
