#include "treeshape/errors.hpp"
#include "treeshape/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace treeshape {

namespace detail {

const std::array<std::pair<int, int>, 7>& dp_stencil() {
  static const std::array<std::pair<int, int>, 7> steps{
      {{1, 1}, {1, 2}, {2, 1}, {1, 3}, {3, 1}, {2, 3}, {3, 2}}};
  return steps;
}

double dp_segment_cost(const QBranch& q1, const QBranch& q2, int k, int l, int i, int j) {
  const int n = static_cast<int>(q1.size());
  const double h = 1.0 / static_cast<double>(n - 1);
  const double slope = static_cast<double>(j - l) / static_cast<double>(i - k);
  const double root = std::sqrt(slope);
  double sum = 0.0;
  for (int t = k; t <= i; ++t) {
    const double x = static_cast<double>(l) + slope * static_cast<double>(t - k);
    int lo = static_cast<int>(std::floor(x));
    if (lo >= n - 1) lo = n - 2;
    const double a = x - static_cast<double>(lo);
    const Eigen::Vector4d warped = root * ((1.0 - a) * q2.q.col(lo) + a * q2.q.col(lo + 1));
    const double e = (q1.q.col(t) - warped).squaredNorm();
    sum += (t == k || t == i) ? 0.5 * e : e;
  }
  return sum * h;
}

}  // namespace detail

namespace {

struct Lattice {
  Warp gamma;
  double cost;
};

Lattice lattice_path(const QBranch& q1, const QBranch& q2) {
  const int size = static_cast<int>(q1.size());
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(size, size, inf);
  Eigen::MatrixXi from = Eigen::MatrixXi::Constant(size, size, -1);
  cost(0, 0) = 0.0;
  const auto& steps = detail::dp_stencil();
  for (int i = 1; i < size; ++i) {
    for (int j = 1; j < size; ++j) {
      double best = inf;
      int arg = -1;
      for (int s = 0; s < static_cast<int>(steps.size()); ++s) {
        const int k = i - steps[static_cast<std::size_t>(s)].first;
        const int l = j - steps[static_cast<std::size_t>(s)].second;
        if (k < 0 || l < 0 || cost(k, l) == inf) continue;
        const double c = cost(k, l) + detail::dp_segment_cost(q1, q2, k, l, i, j);
        if (c < best) {
          best = c;
          arg = s;
        }
      }
      cost(i, j) = best;
      from(i, j) = arg;
    }
  }

  // Walk back and fill gamma on the grid by linear interpolation.
  Warp gamma{Eigen::VectorXd(size)};
  const double h = 1.0 / static_cast<double>(size - 1);
  int i = size - 1;
  int j = size - 1;
  gamma.values(i) = 1.0;
  while (i > 0) {
    const auto [di, dj] = steps[static_cast<std::size_t>(from(i, j))];
    const int k = i - di;
    const int l = j - dj;
    for (int t = k; t < i; ++t)
      gamma.values(t) = (static_cast<double>(l) + static_cast<double>(dj) * (t - k) / di) * h;
    i = k;
    j = l;
  }
  gamma.values(0) = 0.0;
  return {std::move(gamma), cost(size - 1, size - 1)};
}

// The lattice path only has stencil slopes, so sqrt(gamma') jumps between
// them. Smooth with repeated [1 2 1]/4 passes (monotone, endpoints fixed)
// and keep whichever pass count gives the lowest distance.
Lattice smoothest(const QBranch& q1, const QBranch& q2, Warp gamma) {
  const Eigen::Index size = gamma.values.size();
  Lattice best{gamma, qdist_squared(q1, reparam_q(q2, gamma))};
  Eigen::VectorXd next(size);
  Eigen::Index passes = 0;
  for (Eigen::Index target = 1; target <= 4 * size; target *= 2) {
    for (; passes < target; ++passes) {
      next = gamma.values;
      for (Eigen::Index t = 1; t + 1 < size; ++t)
        next(t) = 0.25 * gamma.values(t - 1) + 0.5 * gamma.values(t) + 0.25 * gamma.values(t + 1);
      gamma.values.swap(next);
    }
    const double d = qdist_squared(q1, reparam_q(q2, gamma));
    if (d < best.cost) best = {gamma, d};
  }
  return best;
}

// Linear interpolation of q at parameter t.
Eigen::Vector4d q_at(const QBranch& q, double t) {
  const Eigen::Index n = q.q.cols();
  const double x = std::clamp(t, 0.0, 1.0) * static_cast<double>(n - 1);
  const Eigen::Index k = std::min<Eigen::Index>(static_cast<Eigen::Index>(x), n - 2);
  const double a = x - static_cast<double>(k);
  return (1.0 - a) * q.q.col(k) + a * q.q.col(k + 1);
}

// Coordinate descent on the interior warp values against the same discrete
// objective reparam_q and qdist use (central-difference slopes, trapezoid
// weights). Each value only touches the residual at itself and its two
// neighbours, so a sweep costs O(N) evaluations per golden-section step.
void polish(const QBranch& q1, const QBranch& q2, Warp& gamma, double& best) {
  const Eigen::Index n = gamma.values.size();
  const double h = 1.0 / static_cast<double>(n - 1);
  Eigen::VectorXd& g = gamma.values;
  auto slope = [&](Eigen::Index k) {
    if (k == 0) return std::max(0.0, (g(1) - g(0)) / h);
    if (k == n - 1) return std::max(0.0, (g(n - 1) - g(n - 2)) / h);
    return std::max(0.0, (g(k + 1) - g(k - 1)) / (2.0 * h));
  };
  auto term = [&](Eigen::Index k) {
    const double w = (k == 0 || k == n - 1) ? 0.5 * h : h;
    return w * (q1.q.col(k) - std::sqrt(slope(k)) * q_at(q2, g(k))).squaredNorm();
  };
  auto local = [&](Eigen::Index k) { return term(k - 1) + term(k) + term(k + 1); };

  constexpr int max_sweeps = 300;
  constexpr double ratio = 0.6180339887498949;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double gain = 0.0;
    for (Eigen::Index k = 1; k + 1 < n; ++k) {
      const double keep = g(k);
      const double before = local(k);
      double lo = std::max(g(k - 1), keep - 2.0 * h);
      double hi = std::min(g(k + 1), keep + 2.0 * h);
      auto eval = [&](double x) {
        g(k) = x;
        return local(k);
      };
      double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
      double f1 = eval(x1), f2 = eval(x2);
      for (int it = 0; it < 20; ++it) {
        if (f1 <= f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - ratio * (hi - lo);
          f1 = eval(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + ratio * (hi - lo);
          f2 = eval(x2);
        }
      }
      const double x = f1 <= f2 ? x1 : x2;
      const double after = eval(x);
      if (after < before) {
        gain += before - after;
      } else {
        g(k) = keep;
      }
    }
    best -= gain;
    if (gain <= 1e-3 * best) break;
  }
  best = qdist_squared(q1, reparam_q(q2, gamma));
}

}  // namespace

DpResult dp_reparam(const QBranch& q1, const QBranch& q2, bool refine) {
  if (q1.size() != q2.size()) throw GridMismatch("branches are sampled on different grids");
  const std::size_t n = q1.size();
  DpResult result{Warp::identity(n), qdist_squared(q1, q2)};
  if (n < 3 || q1.is_null() || q2.is_null()) return result;

  const Lattice first = lattice_path(q1, q2);
  Lattice refined = refine ? smoothest(q1, q2, first.gamma) : Lattice{first.gamma, first.cost};
  if (refine) {
    polish(q1, q2, refined.gamma, refined.cost);
  } else {
    refined.cost = qdist_squared(q1, reparam_q(q2, refined.gamma));
  }
  if (refined.cost < result.path_cost) result.warp = std::move(refined.gamma);
  result.path_cost = first.cost;
  return result;
}

}  // namespace treeshape
