#include "treeshape/registration.hpp"

#include "treeshape/assignment.hpp"
#include "treeshape/errors.hpp"
#include "treeshape/metric.hpp"
#include "treeshape/random.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>

namespace treeshape {

Correspondence Correspondence::identity(const SRVFT& srvft) {
  Correspondence c;
  c.warp = Warp::identity(srvft.q0.size());
  c.permutation.resize(srvft.children.size());
  std::iota(c.permutation.begin(), c.permutation.end(), std::size_t{0});
  for (const auto& child : srvft.children) c.children.push_back(identity(child.tree));
  return c;
}

namespace {

void register_node(const SRVFT& a, const SRVFT& b, const Mat3& rotation, const Vec3& center,
                   const Correspondence& corr, SRVFT& source, SRVFT& target) {
  if (a.children.size() != b.children.size() || corr.permutation.size() != a.children.size() ||
      corr.children.size() != a.children.size())
    throw StructureMismatch("correspondence does not fit the trees");
  source.q0 = a.q0;
  source.origin = a.origin;
  target.q0 = reparam_q(rotate_q(b.q0, rotation), corr.warp);
  target.origin = center + rotation * (b.origin - center);
  source.children.resize(a.children.size());
  target.children.resize(a.children.size());
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    const auto& ca = a.children[i];
    const auto& cb = b.children.at(corr.permutation[i]);
    double s1 = ca.s;
    double s2 = corr.warp.inverse(cb.s);
    if (cb.tree.is_null())
      s2 = s1;
    else if (ca.tree.is_null())
      s1 = s2;
    source.children[i].s = s1;
    target.children[i].s = s2;
    register_node(ca.tree, cb.tree, rotation, center, corr.children[i], source.children[i].tree,
                  target.children[i].tree);
  }
}

std::size_t srvft_depth(const SRVFT& t) {
  std::size_t d = 0;
  for (const auto& c : t.children) d = std::max(d, srvft_depth(c.tree));
  return d + 1;
}

void accumulate_cross(const SRVFT& a, const SRVFT& b, double weight, double lambda_s, Eigen::Matrix3d& m) {
  if (a.q0.size() != b.q0.size() || a.children.size() != b.children.size())
    throw StructureMismatch("representations differ in structure");
  if (weight > 0.0) {
    const Eigen::VectorXd tau = trapezoid_weights(a.q0.size());
    m += weight * a.q0.q.topRows(3) * tau.asDiagonal() * b.q0.q.topRows(3).transpose();
  }
  for (std::size_t i = 0; i < a.children.size(); ++i)
    accumulate_cross(a.children[i].tree, b.children[i].tree, weight * lambda_s, lambda_s, m);
}

// Smallest rotation taking unit vector `from` onto unit vector `to`.
Mat3 minimal_rotation(const Vec3& from, const Vec3& to) {
  const double c = std::clamp(from.dot(to), -1.0, 1.0);
  if (c > 1.0 - 1e-15) return Mat3::Identity();
  if (c < -1.0 + 1e-15) {
    Vec3 axis = from.cross(Vec3::UnitX());
    if (axis.norm() < 1e-6) axis = from.cross(Vec3::UnitY());
    return Eigen::AngleAxisd(std::numbers::pi, axis.normalized()).toRotationMatrix();
  }
  return Eigen::Quaterniond::FromTwoVectors(from, to).toRotationMatrix();
}

// The 24 rotations mapping the coordinate axes onto signed coordinate axes.
std::vector<Mat3> axis_rotations() {
  std::vector<Mat3> out;
  std::array<int, 3> perm{0, 1, 2};
  do {
    for (int signs = 0; signs < 8; ++signs) {
      Mat3 r = Mat3::Zero();
      for (int k = 0; k < 3; ++k) r(k, perm[static_cast<std::size_t>(k)]) = (signs >> k) & 1 ? -1.0 : 1.0;
      if (r.determinant() > 0.0) out.push_back(r);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::stable_sort(out.begin(), out.end(), [](const Mat3& a, const Mat3& b) { return a.trace() > b.trace(); });
  return out;
}

// Rotation from trunk-only alternation of warping and Procrustes, started at
// each axis rotation (identity first) and keeping the lowest trunk residual.
Mat3 trunk_seed(const SRVFT& q1, const SRVFT& q2) {
  if (q1.q0.is_null() || q2.q0.is_null()) return Mat3::Identity();
  constexpr int rounds = 3;
  const Eigen::VectorXd tau = trapezoid_weights(q1.q0.size());
  Mat3 best = Mat3::Identity();
  double best_energy = std::numeric_limits<double>::infinity();
  for (const Mat3& start : axis_rotations()) {
    Mat3 r = start;
    double energy = std::numeric_limits<double>::infinity();
    for (int round = 0; round < rounds; ++round) {
      const Warp gamma = dp_reparam(q1.q0, rotate_q(q2.q0, r), false).warp;
      const QBranch warped = reparam_q(q2.q0, gamma);
      energy = std::min(energy, qdist_squared(q1.q0, rotate_q(warped, r)));
      const Eigen::Matrix3d m = q1.q0.q.topRows(3) * tau.asDiagonal() * warped.q.topRows(3).transpose();
      const Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Mat3 u = svd.matrixU();
      const Mat3 v = svd.matrixV();
      const Eigen::Vector3d d(1.0, 1.0, (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
      const Mat3 next = u * d.asDiagonal() * v.transpose();
      const double e = qdist_squared(q1.q0, rotate_q(warped, next));
      if (!(e < energy)) break;
      energy = e;
      r = next;
    }
    if (energy < best_energy) {
      best_energy = energy;
      best = r;
    }
  }
  return best;
}

}  // namespace

RegisteredPair apply_correspondence(const SRVFT& q1, const SRVFT& q2, const Mat3& rotation,
                                    const Correspondence& correspondence) {
  check_rotation(rotation);
  RegisteredPair out;
  register_node(q1, q2, rotation, q2.origin, correspondence, out.source, out.target);
  return out;
}

RegisteredPair apply_alignment(const SRVFT& q1, const SRVFT& q2, const Alignment& alignment) {
  return apply_correspondence(q1, q2, alignment.rotation, alignment.correspondence);
}

Mat3 procrustes_rotation(const SRVFT& q1, const SRVFT& q2, const MetricWeights& weights) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  accumulate_cross(q1, q2, weights.lambda_m, weights.lambda_s, m);
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv(0) > 1e-300) || !m.allFinite()) return Mat3::Identity();
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if (sv(1) <= 1e-12 * sv(0)) return minimal_rotation(v.col(0), u.col(0));
  Eigen::Vector3d d(1.0, 1.0, (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
  return u * d.asDiagonal() * v.transpose();
}

namespace {

ReparamPermuteResult sweep(const Mat3& rotation, const SRVFT& q1, const SRVFT& q2, const MetricWeights& weights,
                           std::size_t n_levels, std::size_t pair_levels, bool refine);

PairCost pair_cost_impl(std::size_t i, std::size_t j, const SRVFT& q1, const SRVFT& q2,
                        const MetricWeights& weights, std::size_t n_levels, const Mat3& rotation,
                        const Warp* parent_warp, std::size_t pair_levels, bool refine) {
  const auto& a = q1.children.at(i);
  const auto& b = q2.children.at(j);
  const std::size_t below = n_levels > 1 ? n_levels - 1 : 1;
  const std::size_t levels = pair_levels > 0 ? std::min(below, pair_levels) : below;
  auto sub = sweep(rotation, a.tree, b.tree, weights, levels, pair_levels, refine);

  const double s2 = parent_warp ? parent_warp->inverse(b.s) : b.s;
  const double slide = (a.tree.is_null() || b.tree.is_null()) ? 0.0 : (a.s - s2) * (a.s - s2);
  return {weights.lambda_s * sub.cost + weights.lambda_p * slide, std::move(sub.correspondence)};
}

// Cost matrices are filled with lattice-only warps; matched pairs are then
// registered again with refined warps.
ReparamPermuteResult sweep(const Mat3& rotation, const SRVFT& q1, const SRVFT& q2, const MetricWeights& weights,
                           std::size_t n_levels, std::size_t pair_levels, bool refine) {
  if (q1.children.size() != q2.children.size()) throw StructureMismatch("trees are not padded to one structure");
  const std::size_t levels = n_levels == 0 ? std::max(srvft_depth(q1), srvft_depth(q2)) : n_levels;

  const QBranch rotated = rotate_q(q2.q0, rotation);
  ReparamPermuteResult out;
  out.correspondence.warp = dp_reparam(q1.q0, rotated, refine).warp;
  out.cost = weights.lambda_m * qdist_squared(q1.q0, reparam_q(rotated, out.correspondence.warp));

  const std::size_t n = q1.children.size();
  if (n == 0) return out;
  if (levels <= 1) {
    out.correspondence.permutation.resize(n);
    std::iota(out.correspondence.permutation.begin(), out.correspondence.permutation.end(), std::size_t{0});
    for (const auto& c : q2.children) out.correspondence.children.push_back(Correspondence::identity(c.tree));
    return out;
  }

  const Warp& gamma = out.correspondence.warp;
  std::vector<PairCost> pairs(n * n);
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      pairs[i * n + j] = pair_cost_impl(i, j, q1, q2, weights, levels, rotation, &gamma, pair_levels, false);
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pairs[i * n + j].cost;
    }
  const auto sigma = solve_assignment(cost).mapping;

  const bool complete = pair_levels == 0 || levels - 1 <= pair_levels;
  out.correspondence.permutation = sigma;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = sigma[i];
    if (complete && !refine) {
      out.cost += pairs[i * n + j].cost;
      out.correspondence.children.push_back(std::move(pairs[i * n + j].correspondence));
      continue;
    }
    auto sub = sweep(rotation, q1.children[i].tree, q2.children[j].tree, weights, levels - 1, pair_levels, refine);
    const auto& a = q1.children[i];
    const auto& b = q2.children[j];
    const double s2 = gamma.inverse(b.s);
    const double slide = (a.tree.is_null() || b.tree.is_null()) ? 0.0 : (a.s - s2) * (a.s - s2);
    out.cost += weights.lambda_s * sub.cost + weights.lambda_p * slide;
    out.correspondence.children.push_back(std::move(sub.correspondence));
  }
  return out;
}

}  // namespace

PairCost pair_cost(std::size_t i, std::size_t j, const SRVFT& q1, const SRVFT& q2, const MetricWeights& weights,
                   std::size_t n_levels, const Mat3& rotation, const Warp* parent_warp, std::size_t pair_levels) {
  return pair_cost_impl(i, j, q1, q2, weights, n_levels, rotation, parent_warp, pair_levels, true);
}

ReparamPermuteResult reparam_permute(const Mat3& rotation, const SRVFT& q1, const SRVFT& q2,
                                     const MetricWeights& weights, std::size_t n_levels, std::size_t pair_levels) {
  return sweep(rotation, q1, q2, weights, n_levels, pair_levels, true);
}

Mat3 random_rotation(std::uint64_t seed, std::uint64_t stream) {
  CounterRng rng(seed, stream);
  Eigen::Quaterniond q;
  do {
    q = Eigen::Quaterniond(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  } while (q.norm() < 1e-8);
  return q.normalized().toRotationMatrix();
}

Alignment align_trees(const SRVFT& q1, const SRVFT& q2, const MetricWeights& weights, const AlignOptions& options) {
  weights.validate();
  if (!same_structure(q1, q2)) throw StructureMismatch("trees are not padded to one structure");
  const std::size_t iterations = std::max<std::size_t>(options.max_iterations, 1);
  const std::size_t restarts = std::max<std::size_t>(options.restarts, 1);

  auto objective = [&](const Mat3& r, const Correspondence& c) {
    const auto reg = apply_correspondence(q1, q2, r, c);
    return tree_distance_squared(reg.source, reg.target, weights);
  };

  Alignment best;
  double best_energy = std::numeric_limits<double>::infinity();
  for (std::size_t run = 0; run < restarts; ++run) {
    Alignment current;
    if (run > 0)
      current.rotation = random_rotation(options.seed, run);
    else if (options.trunk_seed)
      current.rotation = trunk_seed(q1, q2);
    current.correspondence =
        reparam_permute(current.rotation, q1, q2, weights, options.n_levels, options.pair_levels).correspondence;
    double energy = objective(current.rotation, current.correspondence);
    current.history.push_back(std::sqrt(energy));

    for (std::size_t it = 0; it < iterations; ++it) {
      const auto unrotated = apply_correspondence(q1, q2, Mat3::Identity(), current.correspondence);
      Mat3 rotation = procrustes_rotation(unrotated.source, unrotated.target, weights);
      double rotated_energy = objective(rotation, current.correspondence);
      if (!(rotated_energy <= energy)) {
        rotation = current.rotation;
        rotated_energy = energy;
      }

      auto sweep = reparam_permute(rotation, q1, q2, weights, options.n_levels, options.pair_levels);
      const double sweep_energy = objective(rotation, sweep.correspondence);
      double next = rotated_energy;
      if (sweep_energy <= rotated_energy) {
        current.correspondence = std::move(sweep.correspondence);
        next = sweep_energy;
      }
      current.rotation = rotation;
      const double gain = energy - next;
      energy = next;
      current.history.push_back(std::sqrt(energy));
      if (energy == 0.0 || gain <= options.tolerance * (energy + gain)) break;
    }
    current.distance = std::sqrt(energy);
    if (energy < best_energy) {
      best_energy = energy;
      best = std::move(current);
    }
  }
  return best;
}

}  // namespace treeshape
