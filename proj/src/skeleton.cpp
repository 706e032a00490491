#include "treeshape/skeleton.hpp"

#include "treeshape/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace treeshape {

double bending_score(const std::vector<Vec3>& path) {
  std::vector<Vec3> chords;
  double length = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Vec3 c = path[i] - path[i - 1];
    const double n = c.norm();
    if (n == 0.0) continue;
    chords.push_back(c / n);
    length += n;
  }
  if (chords.size() < 2) return 0.0;
  double turning = 0.0;
  for (std::size_t i = 1; i < chords.size(); ++i)
    turning += std::acos(std::clamp(chords[i - 1].dot(chords[i]), -1.0, 1.0));
  return turning / length;
}

namespace {

struct Rooted {
  const SkeletonGraph& graph;
  std::vector<std::size_t> parent;
  std::vector<std::vector<std::size_t>> kids;
  std::vector<double> reach;  // longest downward path length from each node
  MainBranchRule rule;

  double edge(std::size_t a, std::size_t b) const { return (graph.positions[a] - graph.positions[b]).norm(); }

  // Nodes of the chosen main path from `start` (preceded by `from` when given).
  std::vector<std::size_t> main_path(std::size_t from, std::size_t start) const {
    std::vector<std::size_t> path;
    if (from != npos) path.push_back(from);
    if (rule == MainBranchRule::Neuronal) {
      std::size_t v = start;
      path.push_back(v);
      while (!kids[v].empty()) {
        std::size_t best = kids[v].front();
        for (std::size_t c : kids[v])
          if (edge(v, c) + reach[c] > edge(v, best) + reach[best]) best = c;
        v = best;
        path.push_back(v);
      }
      return path;
    }

    std::vector<std::size_t> tips;
    std::vector<std::size_t> stack{start};
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      if (kids[v].empty()) tips.push_back(v);
      for (auto it = kids[v].rbegin(); it != kids[v].rend(); ++it) stack.push_back(*it);
    }
    std::vector<std::size_t> best;
    double best_score = std::numeric_limits<double>::infinity();
    double best_length = -1.0;
    for (std::size_t tip : tips) {
      std::vector<std::size_t> nodes;
      for (std::size_t v = tip;; v = parent[v]) {
        nodes.push_back(v);
        if (v == start) break;
      }
      if (from != npos) nodes.push_back(from);
      std::reverse(nodes.begin(), nodes.end());
      std::vector<Vec3> pts;
      double length = 0.0;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        pts.push_back(graph.positions[nodes[i]]);
        if (i > 0) length += edge(nodes[i - 1], nodes[i]);
      }
      const double score = bending_score(pts);
      if (score < best_score || (score == best_score && length > best_length)) {
        best_score = score;
        best_length = length;
        best = std::move(nodes);
      }
    }
    return best;
  }

  Tree build(std::size_t from, std::size_t start) const {
    const auto path = main_path(from, start);
    Tree tree;
    const auto n = static_cast<Eigen::Index>(path.size());
    tree.main.points.resize(3, n);
    tree.main.radii.resize(n);
    std::vector<double> acc(path.size(), 0.0);
    for (std::size_t i = 0; i < path.size(); ++i) {
      tree.main.points.col(static_cast<Eigen::Index>(i)) = graph.positions[path[i]];
      tree.main.radii(static_cast<Eigen::Index>(i)) = graph.radii[path[i]];
      if (i > 0) acc[i] = acc[i - 1] + edge(path[i - 1], path[i]);
    }
    const double total = acc.back();
    const std::size_t first = from == npos ? 0 : 1;
    for (std::size_t i = first; i < path.size(); ++i) {
      const std::size_t v = path[i];
      const std::size_t next = i + 1 < path.size() ? path[i + 1] : npos;
      for (std::size_t c : kids[v]) {
        if (c == next) continue;
        const double s = total > 0.0 ? acc[i] / total : 0.0;
        tree.children.push_back({s, build(v, c)});
      }
    }
    std::stable_sort(tree.children.begin(), tree.children.end(),
                     [](const AttachedSubtree& a, const AttachedSubtree& b) { return a.s < b.s; });
    return tree;
  }

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
};

}  // namespace

Tree select_main_branch(const SkeletonGraph& graph, MainBranchRule rule) {
  const std::size_t n = graph.positions.size();
  if (graph.radii.size() != n) throw DataError("skeleton radii and positions differ in length");
  if (n < 2) throw DegenerateTree("skeleton needs at least two points");
  if (graph.root >= n) throw DataError("skeleton root out of range");

  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& [a, b] : graph.edges) {
    if (a >= n || b >= n) throw DataError("skeleton edge references a missing point");
    if (a == b) throw CyclicSkeleton("skeleton has a self loop");
    adj[a].push_back(b);
    adj[b].push_back(a);
  }

  Rooted rooted{graph, std::vector<std::size_t>(n, Rooted::npos), std::vector<std::vector<std::size_t>>(n),
                std::vector<double>(n, 0.0), rule};
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> order{graph.root};
  seen[graph.root] = 1;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t v = order[i];
    for (std::size_t w : adj[v]) {
      if (w == rooted.parent[v]) continue;
      if (seen[w]) throw CyclicSkeleton("skeleton contains a cycle");
      seen[w] = 1;
      rooted.parent[w] = v;
      rooted.kids[v].push_back(w);
      order.push_back(w);
    }
  }
  if (order.size() != n) throw DisconnectedSkeleton("skeleton is not connected");
  if (graph.edges.size() != n - 1) throw CyclicSkeleton("skeleton contains a cycle");

  for (auto it = order.rbegin(); it != order.rend(); ++it)
    for (std::size_t c : rooted.kids[*it])
      rooted.reach[*it] = std::max(rooted.reach[*it], rooted.edge(*it, c) + rooted.reach[c]);

  return rooted.build(Rooted::npos, graph.root);
}

}  // namespace treeshape
