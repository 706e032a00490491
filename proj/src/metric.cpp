#include "treeshape/metric.hpp"

#include "treeshape/errors.hpp"

#include <cmath>

namespace treeshape {

double tree_distance_squared(const SRVFT& q1, const SRVFT& q2, const MetricWeights& weights) {
  if (q1.children.size() != q2.children.size()) throw StructureMismatch("representations differ in structure");
  if (q1.is_null() && q2.is_null()) return 0.0;
  double d2 = weights.lambda_m * qdist_squared(q1.q0, q2.q0);
  for (std::size_t i = 0; i < q1.children.size(); ++i) {
    const auto& a = q1.children[i];
    const auto& b = q2.children[i];
    d2 += weights.lambda_s * tree_distance_squared(a.tree, b.tree, weights);
    d2 += weights.lambda_p * (a.s - b.s) * (a.s - b.s);
  }
  return d2;
}

double tree_distance(const SRVFT& q1, const SRVFT& q2, const MetricWeights& weights) {
  return std::sqrt(tree_distance_squared(q1, q2, weights));
}

Tree prepare_tree(const Tree& tree, const MatchOptions& options) {
  tree.validate();
  const Tree limited = limit_depth(tree);
  return normalize(resample_tree(limited, options.samples_per_branch), options.scale_invariant);
}

Registration invariant_distance(const Tree& t1, const Tree& t2, const MetricWeights& weights,
                                const MatchOptions& options) {
  weights.validate();
  auto [a, b] = pad_null_branches(prepare_tree(t1, options), prepare_tree(t2, options));

  Registration out;
  out.alignment = align_trees(tree_to_srvft(a, options.match_thickness_weight),
                              tree_to_srvft(b, options.match_thickness_weight), weights, options.align);
  out.registered = apply_alignment(tree_to_srvft(a, options.thickness_weight),
                                   tree_to_srvft(b, options.thickness_weight), out.alignment);
  out.distance = tree_distance(out.registered.source, out.registered.target, weights);
  out.source_tree = std::move(a);
  out.target_tree = std::move(b);
  return out;
}

SRVFT Geodesic::at(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("geodesic parameter outside [0, 1]");
  return interpolate(source, target_aligned, t);
}

Geodesic geodesic_from(const Registration& registration, const MetricWeights& weights) {
  return {registration.registered.source, registration.registered.target, weights, registration.distance};
}

Geodesic geodesic(const Tree& t1, const Tree& t2, const MetricWeights& weights, const MatchOptions& options) {
  return geodesic_from(invariant_distance(t1, t2, weights, options), weights);
}

Tree eval_geodesic(const Geodesic& geodesic, double t) { return srvft_to_tree(geodesic.at(t)); }

std::vector<Tree> sample_geodesic(const Geodesic& geodesic, std::size_t frames) {
  if (frames < 2) throw DomainError("a geodesic needs at least two frames");
  std::vector<Tree> out;
  out.reserve(frames);
  for (std::size_t k = 0; k < frames; ++k)
    out.push_back(eval_geodesic(geodesic, k + 1 == frames ? 1.0 : static_cast<double>(k) / static_cast<double>(frames - 1)));
  return out;
}

}  // namespace treeshape
