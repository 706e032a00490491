#include "treeshape/tree.hpp"

#include "treeshape/assignment.hpp"
#include "treeshape/errors.hpp"

#include <algorithm>
#include <cmath>

namespace treeshape {

double Branch::length() const {
  double total = 0.0;
  for (Eigen::Index k = 1; k < points.cols(); ++k) total += (points.col(k) - points.col(k - 1)).norm();
  return total;
}

bool Branch::is_null() const {
  if (points.cols() == 0) return true;
  for (Eigen::Index k = 1; k < points.cols(); ++k)
    if (points.col(k) != points.col(0)) return false;
  return (radii.array() == 0.0).all();
}

Vec3 Branch::at(double s) const {
  const auto n = points.cols();
  if (n == 1) return points.col(0);
  const double x = std::clamp(s, 0.0, 1.0) * static_cast<double>(n - 1);
  const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(x)), n - 2);
  const double t = x - static_cast<double>(k);
  if (t == 0.0) return points.col(k);
  return (1.0 - t) * points.col(k) + t * points.col(k + 1);
}

void Branch::validate() const {
  if (points.cols() < 2) throw DataError("branch needs at least two points");
  if (radii.size() != points.cols()) throw DataError("branch radii and points differ in length");
  if (!points.allFinite() || !radii.allFinite()) throw DataError("branch has non-finite values");
  if ((radii.array() < 0.0).any()) throw DataError("branch has negative radii");
}

Branch Branch::null_at(const Vec3& anchor, std::size_t n) {
  const auto cols = static_cast<Eigen::Index>(n);
  return Branch(anchor.replicate(1, cols), Eigen::VectorXd::Zero(cols));
}

bool Tree::is_null() const {
  if (!main.is_null()) return false;
  return std::all_of(children.begin(), children.end(),
                     [](const AttachedSubtree& c) { return c.tree.is_null(); });
}

std::size_t Tree::depth() const {
  std::size_t deepest = 0;
  for (const auto& c : children) deepest = std::max(deepest, c.tree.depth());
  return deepest + 1;
}

std::size_t Tree::branch_count() const {
  std::size_t count = 1;
  for (const auto& c : children) count += c.tree.branch_count();
  return count;
}

void Tree::validate() const {
  main.validate();
  for (const auto& c : children) {
    if (!(c.s >= 0.0 && c.s <= 1.0)) throw DataError("attachment parameter outside [0, 1]");
    c.tree.validate();
  }
}

namespace {

void transform_points(Tree& tree, const Vec3& shift, double scale) {
  tree.main.points.colwise() += shift;
  tree.main.points *= scale;
  tree.main.radii *= scale;
  for (auto& c : tree.children) transform_points(c.tree, shift, scale);
}

}  // namespace

Tree normalize(const Tree& tree, bool scale_invariant) {
  const double length = tree.main.length();
  if (!(length > 0.0)) throw DegenerateTree("main branch has zero arc length");
  Tree out = tree;
  transform_points(out, -tree.main.start(), scale_invariant ? 1.0 / length : 1.0);
  return out;
}

namespace {

std::vector<double> cumulative_lengths(const Branch& b) {
  std::vector<double> acc(b.size(), 0.0);
  for (std::size_t k = 1; k < b.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    acc[k] = acc[k - 1] + (b.points.col(i) - b.points.col(i - 1)).norm();
  }
  return acc;
}

// Arc-length fraction of the point at sample parameter s.
double arc_fraction(const Branch& b, const std::vector<double>& acc, double s) {
  const double total = acc.back();
  if (total == 0.0) return s;
  const double x = std::clamp(s, 0.0, 1.0) * static_cast<double>(b.size() - 1);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::floor(x)), b.size() - 2);
  const double t = x - static_cast<double>(k);
  return std::clamp((acc[k] + t * (acc[k + 1] - acc[k])) / total, 0.0, 1.0);
}

}  // namespace

Branch resample_branch(const Branch& branch, std::size_t n) {
  if (n < 2) throw DomainError("resampling needs at least two points");
  branch.validate();
  const auto acc = cumulative_lengths(branch);
  const double total = acc.back();
  if (total == 0.0) {
    if (branch.is_null()) return Branch::null_at(branch.start(), n);
    throw DegenerateBranch("zero-length branch with nonzero thickness");
  }

  const auto cols = static_cast<Eigen::Index>(n);
  Branch out(Eigen::Matrix3Xd(3, cols), Eigen::VectorXd(cols));
  const auto last = static_cast<Eigen::Index>(branch.size() - 1);
  std::size_t seg = 0;
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (j == 0) {
      out.points.col(0) = branch.points.col(0);
      out.radii(0) = branch.radii(0);
      continue;
    }
    if (j == cols - 1) {
      out.points.col(j) = branch.points.col(last);
      out.radii(j) = branch.radii(last);
      continue;
    }
    const double target = total * static_cast<double>(j) / static_cast<double>(n - 1);
    while (seg + 1 < branch.size() - 1 && acc[seg + 1] < target) ++seg;
    const double span = acc[seg + 1] - acc[seg];
    const double t = span > 0.0 ? std::clamp((target - acc[seg]) / span, 0.0, 1.0) : 0.0;
    const auto i = static_cast<Eigen::Index>(seg);
    out.points.col(j) = (1.0 - t) * branch.points.col(i) + t * branch.points.col(i + 1);
    out.radii(j) = (1.0 - t) * branch.radii(i) + t * branch.radii(i + 1);
  }
  return out;
}

Tree resample_tree(const Tree& tree, std::size_t n) {
  Tree out;
  out.main = resample_branch(tree.main, n);
  const auto acc = cumulative_lengths(tree.main);
  out.children.reserve(tree.children.size());
  for (const auto& c : tree.children) {
    const double s = arc_fraction(tree.main, acc, c.s);
    Tree child = resample_tree(c.tree, n);
    // Seat the subtree on the resampled parent polyline.
    transform_points(child, out.main.at(s) - child.main.start(), 1.0);
    out.children.push_back({s, std::move(child)});
  }
  return out;
}

namespace {

void collect_order(const Tree& tree, std::size_t level, std::vector<std::size_t>& order) {
  if (order.size() <= level) order.resize(level + 1, 0);
  order[level] = std::max(order[level], tree.children.size());
  for (const auto& c : tree.children) collect_order(c.tree, level + 1, order);
}

}  // namespace

std::vector<std::size_t> tree_order(const Tree& tree) {
  std::vector<std::size_t> order;
  collect_order(tree, 0, order);
  return order;
}

namespace {

Tree trim_depth(const Tree& tree, std::size_t level, std::size_t max_levels, std::vector<Tree>& lifted,
                std::size_t& count) {
  Tree out;
  out.main = tree.main;
  if (level + 1 >= max_levels) {
    // Children would exceed the limit; hand them (flattened) to the parent.
    for (const auto& c : tree.children) {
      std::vector<Tree> deeper;
      lifted.push_back(trim_depth(c.tree, level, max_levels, deeper, count));
      ++count;
      for (auto& d : deeper) lifted.push_back(std::move(d));
    }
    return out;
  }
  for (const auto& c : tree.children) {
    std::vector<Tree> moved;
    out.children.push_back({c.s, trim_depth(c.tree, level + 1, max_levels, moved, count)});
    for (auto& m : moved) out.children.push_back({c.s, std::move(m)});
  }
  return out;
}

}  // namespace

Tree limit_depth(const Tree& tree, std::size_t max_levels, std::size_t* lifted) {
  if (max_levels < 2) throw DomainError("depth limit must keep at least two levels");
  std::size_t count = 0;
  std::vector<Tree> unused;
  Tree out = trim_depth(tree, 0, max_levels, unused, count);
  if (lifted) *lifted = count;
  return out;
}

namespace {

constexpr double kUnpairedNullS = 0.5;

std::size_t profile_at(const std::vector<std::size_t>& profile, std::size_t level) {
  return level < profile.size() ? profile[level] : 0;
}

AttachedSubtree null_child(const Tree& parent, double s, std::size_t samples) {
  AttachedSubtree c;
  c.s = s;
  c.tree.main = Branch::null_at(parent.main.at(s), samples);
  return c;
}

void pad_pair(Tree& a, Tree& b, std::size_t level, const std::vector<std::size_t>& profile) {
  const std::size_t slots = profile_at(profile, level);
  const std::size_t na = a.children.size();
  const std::size_t nb = b.children.size();
  if (slots == 0) return;

  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(slots), static_cast<Eigen::Index>(slots));
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      const double ds = a.children[i].s - b.children[j].s;
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ds * ds;
    }
  const auto pairing = solve_assignment(cost).mapping;

  // Dummy slots map one-to-one onto appended children: a's slot i >= na becomes
  // a.children[i], b's slot j >= nb becomes b.children[j].
  std::vector<AttachedSubtree> extra_a(slots - na), extra_b(slots - nb);
  std::vector<bool> have_a(slots - na, false), have_b(slots - nb, false);
  const std::size_t grid = a.main.size() > 0 ? a.main.size() : b.main.size();

  for (std::size_t i = 0; i < slots; ++i) {
    const std::size_t j = pairing[i];
    const bool real_a = i < na;
    const bool real_b = j < nb;
    if (real_a && !real_b) {
      const auto& partner = a.children[i];
      extra_b[j - nb] = null_child(b, partner.s, partner.tree.main.size());
      have_b[j - nb] = true;
    } else if (!real_a && real_b) {
      const auto& partner = b.children[j];
      extra_a[i - na] = null_child(a, partner.s, partner.tree.main.size());
      have_a[i - na] = true;
    } else if (!real_a && !real_b) {
      extra_a[i - na] = null_child(a, kUnpairedNullS, grid);
      extra_b[j - nb] = null_child(b, kUnpairedNullS, grid);
      have_a[i - na] = have_b[j - nb] = true;
    }
  }
  for (auto& c : extra_a) a.children.push_back(std::move(c));
  for (auto& c : extra_b) b.children.push_back(std::move(c));

  for (std::size_t i = 0; i < slots; ++i)
    pad_pair(a.children[i].tree, b.children[pairing[i]].tree, level + 1, profile);
}

}  // namespace

std::pair<Tree, Tree> pad_null_branches(const Tree& t1, const Tree& t2,
                                        const std::vector<std::size_t>& min_profile) {
  const auto o1 = tree_order(t1);
  const auto o2 = tree_order(t2);
  std::vector<std::size_t> profile(std::max({o1.size(), o2.size(), min_profile.size()}), 0);
  for (std::size_t l = 0; l < profile.size(); ++l)
    profile[l] = std::max({profile_at(o1, l), profile_at(o2, l), profile_at(min_profile, l)});

  std::pair<Tree, Tree> out{t1, t2};
  pad_pair(out.first, out.second, 0, profile);
  return out;
}

Tree strip_null_branches(const Tree& tree) {
  Tree out;
  out.main = tree.main;
  for (const auto& c : tree.children)
    if (!c.tree.is_null()) out.children.push_back({c.s, strip_null_branches(c.tree)});
  return out;
}

namespace {

void rotate_about(Tree& tree, const Mat3& rotation, const Vec3& center) {
  tree.main.points = (rotation * (tree.main.points.colwise() - center)).colwise() + center;
  for (auto& c : tree.children) rotate_about(c.tree, rotation, center);
}

}  // namespace

Tree rotate_tree(const Tree& tree, const Mat3& rotation) {
  Tree out = tree;
  rotate_about(out, rotation, tree.main.start());
  return out;
}

double max_point_distance(const Tree& a, const Tree& b) {
  if (a.children.size() != b.children.size() || a.main.size() != b.main.size())
    throw StructureMismatch("trees differ in structure");
  double worst = a.main.size() == 0 ? 0.0 : (a.main.points - b.main.points).colwise().norm().maxCoeff();
  for (std::size_t i = 0; i < a.children.size(); ++i)
    worst = std::max(worst, max_point_distance(a.children[i].tree, b.children[i].tree));
  return worst;
}

}  // namespace treeshape
