#include "treeshape/statistics.hpp"

#include "treeshape/errors.hpp"
#include "treeshape/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace treeshape {

using Eigen::Index;

namespace {

Alignment identity_alignment(const SRVFT& srvft) {
  Alignment a;
  a.correspondence = Correspondence::identity(srvft);
  a.history = {0.0};
  return a;
}

// Average of registered representations. Attachment parameters are averaged
// over the samples whose subtree is real; those are the only ones that pay a
// sliding cost against the mean.
SRVFT average(const std::vector<const SRVFT*>& samples, const SRVFT& fallback) {
  const double m = static_cast<double>(samples.size());
  SRVFT out;
  out.q0 = fallback.q0;
  out.q0.q.setZero();
  out.q0.start_thickness = 0.0;
  out.origin.setZero();
  for (const SRVFT* s : samples) {
    out.q0.q += s->q0.q;
    out.q0.start_thickness += s->q0.start_thickness;
    out.origin += s->origin;
  }
  out.q0.q /= m;
  out.q0.start_thickness /= m;
  out.origin /= m;

  out.children.resize(fallback.children.size());
  for (std::size_t i = 0; i < fallback.children.size(); ++i) {
    std::vector<const SRVFT*> sub;
    double s_sum = 0.0;
    std::size_t real = 0;
    for (const SRVFT* s : samples) {
      const auto& child = s->children.at(i);
      sub.push_back(&child.tree);
      if (!child.tree.is_null()) {
        s_sum += child.s;
        ++real;
      }
    }
    out.children[i].s = real > 0 ? s_sum / static_cast<double>(real) : samples.front()->children[i].s;
    out.children[i].tree = average(sub, fallback.children[i].tree);
  }
  return out;
}

struct Sweep {
  std::vector<Alignment> alignments;
  std::vector<RegisteredPair> pairs;
  double objective = 0.0;
};

}  // namespace

KarcherResult karcher_mean(const std::vector<Tree>& trees, const MetricWeights& weights,
                           const KarcherOptions& options) {
  if (trees.empty()) throw EmptyCollection("no trees to average");
  weights.validate();
  const auto& match = options.match;
  const double c = match.thickness_weight;

  std::vector<Tree> prepared;
  prepared.reserve(trees.size());
  for (const auto& t : trees) prepared.push_back(prepare_tree(t, match));

  KarcherResult result;
  if (prepared.size() == 1) {
    result.mean = tree_to_srvft(prepared.front(), c);
    result.alignments = {identity_alignment(result.mean)};
    result.registered = {result.mean};
    result.objective = {0.0};
    return result;
  }

  std::vector<std::size_t> profile;
  for (const auto& t : prepared) {
    const auto order = tree_order(t);
    if (order.size() > profile.size()) profile.resize(order.size(), 0);
    for (std::size_t l = 0; l < order.size(); ++l) profile[l] = std::max(profile[l], order[l]);
  }
  std::vector<SRVFT> full, matching;
  for (const auto& t : prepared) {
    const Tree padded = pad_null_branches(prepared.front(), t, profile).second;
    full.push_back(tree_to_srvft(padded, c));
    matching.push_back(tree_to_srvft(padded, match.match_thickness_weight));
  }

  auto register_all = [&](const SRVFT& mean, const Sweep* previous) {
    const SRVFT mean_match = tree_to_srvft(srvft_to_tree(mean), match.match_thickness_weight);
    Sweep sweep;
    for (std::size_t i = 0; i < full.size(); ++i) {
      Alignment a = align_trees(mean_match, matching[i], weights, match.align);
      RegisteredPair pair = apply_alignment(mean, full[i], a);
      double d2 = tree_distance_squared(pair.source, pair.target, weights);
      if (previous) {
        const Alignment& old = previous->alignments[i];
        RegisteredPair kept = apply_alignment(mean, full[i], old);
        const double kept_d2 = tree_distance_squared(kept.source, kept.target, weights);
        if (kept_d2 < d2) {
          a = old;
          pair = std::move(kept);
          d2 = kept_d2;
        }
      }
      a.distance = std::sqrt(d2);
      sweep.alignments.push_back(std::move(a));
      sweep.pairs.push_back(std::move(pair));
      sweep.objective += d2;
    }
    return sweep;
  };

  SRVFT mean = full.front();
  Sweep sweep = register_all(mean, nullptr);
  result.objective.push_back(sweep.objective);
  for (std::size_t it = 0; it < options.max_iterations && sweep.objective > 0.0; ++it) {
    std::vector<const SRVFT*> targets;
    for (const auto& p : sweep.pairs) targets.push_back(&p.target);
    SRVFT next_mean = average(targets, mean);
    Sweep next = register_all(next_mean, &sweep);
    if (!(next.objective <= sweep.objective)) break;
    const double gain = sweep.objective - next.objective;
    mean = std::move(next_mean);
    sweep = std::move(next);
    result.objective.push_back(sweep.objective);
    if (gain <= options.tolerance * (sweep.objective + gain)) break;
  }

  result.mean = std::move(mean);
  result.alignments = std::move(sweep.alignments);
  for (auto& p : sweep.pairs) result.registered.push_back(std::move(p.target));
  return result;
}

namespace {

void flatten_into(const SRVFT& t, const MetricWeights& w, double level_weight, std::vector<double>& out) {
  const Eigen::VectorXd tau = trapezoid_weights(t.q0.size());
  for (Index k = 0; k < t.q0.q.cols(); ++k) {
    const double scale = std::sqrt(w.lambda_m * level_weight * tau(k));
    for (Index r = 0; r < 4; ++r) out.push_back(scale * t.q0.q(r, k));
  }
  const double s_scale = std::sqrt(w.lambda_p * level_weight);
  for (const auto& c : t.children) {
    out.push_back(s_scale * c.s);
    flatten_into(c.tree, w, level_weight * w.lambda_s, out);
  }
}

void unflatten_into(const Eigen::VectorXd& x, Index& pos, const SRVFT& layout, const MetricWeights& w,
                    double level_weight, SRVFT& out) {
  out.q0 = layout.q0;
  out.origin = layout.origin;
  const Eigen::VectorXd tau = trapezoid_weights(layout.q0.size());
  for (Index k = 0; k < layout.q0.q.cols(); ++k) {
    const double scale = std::sqrt(w.lambda_m * level_weight * tau(k));
    for (Index r = 0; r < 4; ++r, ++pos)
      if (scale > 0.0) out.q0.q(r, k) = x(pos) / scale;
  }
  const double s_scale = std::sqrt(w.lambda_p * level_weight);
  out.children.resize(layout.children.size());
  for (std::size_t i = 0; i < layout.children.size(); ++i) {
    out.children[i].s = s_scale > 0.0 ? x(pos) / s_scale : layout.children[i].s;
    ++pos;
    unflatten_into(x, pos, layout.children[i].tree, w, level_weight * w.lambda_s, out.children[i].tree);
  }
}

Index flat_size(const SRVFT& t) {
  Index n = 4 * t.q0.q.cols();
  for (const auto& c : t.children) n += 1 + flat_size(c.tree);
  return n;
}

}  // namespace

Eigen::VectorXd flatten(const SRVFT& srvft, const MetricWeights& weights) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(flat_size(srvft)));
  flatten_into(srvft, weights, 1.0, out);
  return Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Index>(out.size()));
}

SRVFT unflatten(const Eigen::VectorXd& coordinates, const SRVFT& layout, const MetricWeights& weights) {
  if (coordinates.size() != flat_size(layout)) throw StructureMismatch("coordinate vector does not fit the layout");
  SRVFT out;
  Index pos = 0;
  unflatten_into(coordinates, pos, layout, weights, 1.0, out);
  return out;
}

ShapeModel fit_pca(const std::vector<Tree>& trees, const MetricWeights& weights, const KarcherOptions& options) {
  if (trees.size() < 2) throw EmptyCollection("a shape model needs at least two trees");
  const auto karcher = karcher_mean(trees, weights, options);
  return fit_pca_registered(karcher.mean, karcher.registered, weights);
}

ShapeModel fit_pca_registered(const SRVFT& mean, const std::vector<SRVFT>& registered, const MetricWeights& weights) {
  if (registered.size() < 2) throw EmptyCollection("a shape model needs at least two trees");
  weights.validate();
  const Index m = static_cast<Index>(registered.size());
  const Index dim = flat_size(mean);
  Eigen::MatrixXd x(m, dim);
  for (Index i = 0; i < m; ++i) {
    if (!same_structure(mean, registered[static_cast<std::size_t>(i)]))
      throw StructureMismatch("registered trees do not share the mean's structure");
    x.row(i) = flatten(registered[static_cast<std::size_t>(i)], weights).transpose();
  }
  const Eigen::RowVectorXd center = x.colwise().mean();
  x.rowwise() -= center;
  x /= std::sqrt(static_cast<double>(m - 1));

  ShapeModel model;
  model.weights = weights;
  model.sample_count = static_cast<std::size_t>(m);
  model.mean = unflatten(center.transpose(), mean, weights);
  const Index k = std::min(m - 1, dim);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  model.eigenvalues = svd.singularValues().head(k).array().square().matrix();
  model.eigenvectors = svd.matrixV().leftCols(k);
  // Fix the sign of each direction so results do not depend on SVD internals.
  for (Index j = 0; j < k; ++j) {
    Index arg = 0;
    model.eigenvectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (model.eigenvectors(arg, j) < 0.0) model.eigenvectors.col(j) *= -1.0;
  }
  return model;
}

std::vector<double> cumulative_ratios(const ShapeModel& model) {
  const double total = model.eigenvalues.sum();
  std::vector<double> out;
  double acc = 0.0;
  for (Index i = 0; i < model.eigenvalues.size(); ++i) {
    acc += model.eigenvalues(i);
    out.push_back(total > 0.0 ? acc / total : 1.0);
  }
  if (!out.empty()) out.back() = 1.0;
  return out;
}

std::size_t leading_components(const ShapeModel& model, double threshold) {
  const auto ratios = cumulative_ratios(model);
  for (std::size_t k = 0; k < ratios.size(); ++k)
    if (ratios[k] > threshold) return k + 1;
  return ratios.size();
}

Eigen::VectorXd project(const ShapeModel& model, const SRVFT& registered) {
  if (!same_structure(model.mean, registered)) throw StructureMismatch("tree does not share the model's structure");
  const Eigen::VectorXd v = flatten(registered, model.weights) - flatten(model.mean, model.weights);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(model.eigenvalues.size());
  for (Index i = 0; i < a.size(); ++i)
    if (model.eigenvalues(i) > 0.0) a(i) = model.eigenvectors.col(i).dot(v) / std::sqrt(model.eigenvalues(i));
  return a;
}

SRVFT synthesize_srvft(const ShapeModel& model, const Eigen::VectorXd& coefficients) {
  if (coefficients.size() > model.eigenvalues.size())
    throw DomainError("more coefficients than model components");
  if (!coefficients.allFinite()) throw DomainError("coefficients must be finite");
  if ((coefficients.array() == 0.0).all()) return model.mean;
  Eigen::VectorXd x = flatten(model.mean, model.weights);
  for (Index i = 0; i < coefficients.size(); ++i)
    x += coefficients(i) * std::sqrt(model.eigenvalues(i)) * model.eigenvectors.col(i);
  return unflatten(x, model.mean, model.weights);
}

Tree synthesize(const ShapeModel& model, const Eigen::VectorXd& coefficients) {
  return srvft_to_tree(synthesize_srvft(model, coefficients));
}

Eigen::VectorXd sample_coefficients(std::size_t k, std::uint64_t seed, std::uint64_t index,
                                    std::optional<double> clamp) {
  if (clamp && !(*clamp >= 0.0)) throw DomainError("clamp must be nonnegative");
  CounterRng rng(seed, index);
  Eigen::VectorXd a(static_cast<Index>(k));
  for (Index i = 0; i < a.size(); ++i) {
    a(i) = rng.normal();
    if (clamp) a(i) = std::clamp(a(i), -*clamp, *clamp);
  }
  return a;
}

namespace {

void reflect_into(Tree& t, const Mat3& h, const Vec3& center) {
  t.main.points = (h * (t.main.points.colwise() - center)).colwise() + center;
  for (auto& c : t.children) reflect_into(c.tree, h, center);
}

Correspondence inverted(const Correspondence& c) {
  Correspondence out;
  const Eigen::Index n = c.warp.values.size();
  out.warp.values = c.warp.values;
  for (Eigen::Index k = 1; k + 1 < n; ++k) out.warp.values(k) = c.warp.inverse(static_cast<double>(k) / static_cast<double>(n - 1));
  out.permutation.resize(c.permutation.size());
  out.children.resize(c.children.size());
  for (std::size_t i = 0; i < c.permutation.size(); ++i) {
    out.permutation[c.permutation[i]] = i;
    out.children[c.permutation[i]] = inverted(c.children[i]);
  }
  return out;
}

// Registration of the reflection onto the original made consistent with the
// mirror: partners get mutually inverse correspondences, and a branch paired
// with itself keeps the identity warp (the only increasing warp equal to its
// inverse). `b` is the partner of `a`; with `self` they are the same node.
Correspondence mutual(const Correspondence& a, const Correspondence& b, bool self) {
  Correspondence out = a;
  const Eigen::Index n = a.warp.values.size();
  if (self) {
    out.warp = Warp::identity(static_cast<std::size_t>(n));
  } else if (b.warp.values.size() == n && n > 1) {
    for (Eigen::Index k = 1; k + 1 < n; ++k) {
      const double s = static_cast<double>(k) / static_cast<double>(n - 1);
      out.warp.values(k) = 0.5 * (a.warp.values(k) + b.warp.inverse(s));
    }
  }
  const std::size_t m = a.permutation.size();
  if (b.permutation.size() != m) return out;
  for (std::size_t i = 0; i < m; ++i)
    if (b.permutation[a.permutation[i]] != i) return out;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = a.permutation[i];
    if (!self) {
      out.children[i] = mutual(a.children[i], b.children[j], false);
    } else if (j == i) {
      out.children[i] = mutual(a.children[i], a.children[i], true);
    } else if (i < j) {
      out.children[i] = mutual(a.children[i], a.children[j], false);
      out.children[j] = inverted(out.children[i]);
    }
  }
  return out;
}

// Rotation closest to `rotation` whose product with the reflection h is again
// a reflection.
Mat3 mirror_rotation(const Mat3& rotation, const Mat3& h) {
  const Mat3 m = rotation * h;
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(0.5 * (m + m.transpose()));
  const Vec3 n = eig.eigenvectors().col(0);
  return (Mat3::Identity() - 2.0 * n * n.transpose()) * h;
}

// Replaces the second subtree of every swapped pair by the mirror image of the
// first. The midpoint already has this symmetry up to a reparameterization of
// the pair; copying removes what interpolating steep warps leaves behind.
void mirror_complete(Tree& t, const Correspondence& c, const Mat3& mirror, const Vec3& center) {
  const auto& p = c.permutation;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[p[i]] != i) return;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == i) {
      mirror_complete(t.children[i].tree, c.children[i], mirror, center);
    } else if (i < p[i]) {
      Tree copy = t.children[i].tree;
      reflect_into(copy, mirror, center);
      t.children[p[i]].tree = std::move(copy);
      t.children[p[i]].s = t.children[i].s;
    }
  }
}

}  // namespace

Tree reflect(const Tree& tree, const Vec3& normal) {
  const double nn = normal.squaredNorm();
  if (!(nn > 0.0) || !normal.allFinite()) throw DomainError("reflection normal must be a nonzero vector");
  const Mat3 h = Mat3::Identity() - 2.0 * normal * normal.transpose() / nn;
  Tree out = tree;
  reflect_into(out, h, tree.main.start());
  return out;
}

SymmetryResult symmetrize(const Tree& tree, const Vec3& normal, const MetricWeights& weights,
                          const MatchOptions& options) {
  auto registration = invariant_distance(tree, reflect(tree, normal), weights, options);
  auto& alignment = registration.alignment;
  const Mat3 h = Mat3::Identity() - 2.0 * normal * normal.transpose() / normal.squaredNorm();
  alignment.rotation = mirror_rotation(alignment.rotation, h);
  alignment.correspondence = mutual(alignment.correspondence, alignment.correspondence, true);
  registration.registered = apply_alignment(tree_to_srvft(registration.source_tree, options.thickness_weight),
                                            tree_to_srvft(registration.target_tree, options.thickness_weight),
                                            alignment);
  registration.distance = tree_distance(registration.registered.source, registration.registered.target, weights);
  SymmetryResult out;
  out.path = geodesic_from(registration, weights);
  out.asymmetry = out.path.length;
  Tree mid = eval_geodesic(out.path, 0.5);
  mirror_complete(mid, alignment.correspondence, alignment.rotation * h, mid.main.start());
  out.symmetric = strip_null_branches(mid);
  return out;
}

}  // namespace treeshape
