#include "fixtures.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fixtures {

using std::numbers::pi;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Branch sample_curve(const Curve& curve, std::size_t n, double r0, double r1) {
  Branch b(Eigen::Matrix3Xd(3, static_cast<Eigen::Index>(n)), Eigen::VectorXd(static_cast<Eigen::Index>(n)));
  for (std::size_t k = 0; k < n; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(n - 1);
    b.points.col(static_cast<Eigen::Index>(k)) = curve(s);
    b.radii(static_cast<Eigen::Index>(k)) = r0 + (r1 - r0) * s;
  }
  return b;
}

namespace {

Mat3 frame_from(const Vec3& dir) {
  const Vec3 t = dir.normalized();
  Vec3 u = t.cross(std::abs(t.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY()).normalized();
  Vec3 v = t.cross(u);
  Mat3 f;
  f << t, u, v;
  return f;
}

}  // namespace

Curve random_curve(Rng& rng, const Vec3& start, const Vec3& dir, double length, double bend) {
  const Mat3 f = frame_from(dir);
  const double a1 = uniform(rng, -bend, bend);
  const double a2 = uniform(rng, -bend, bend);
  const double a3 = uniform(rng, -bend, bend) * 0.5;
  const double ph = uniform(rng, 0.0, pi);
  return [=](double s) -> Vec3 {
    const Vec3 local(s, a1 * std::sin(pi * s) + a3 * std::sin(2.0 * pi * s + ph) - a3 * std::sin(ph) * (1.0 - s),
                     a2 * (1.0 - std::cos(pi * s)) * 0.5 + a3 * s * s);
    return start + length * (f * local);
  };
}

namespace {

Tree grow(Rng& rng, const Vec3& start, const Vec3& dir, double length, std::size_t level, const TreeSpec& spec,
          double radius) {
  Tree t;
  t.main = sample_curve(random_curve(rng, start, dir, length), spec.samples, radius, radius * 0.4);
  if (level + 1 >= spec.levels) return t;
  const auto count = static_cast<std::size_t>(
      std::uniform_int_distribution<std::size_t>(spec.min_children, spec.max_children)(rng));
  std::vector<double> s;
  // Stratified so parameters stay well separated.
  for (std::size_t i = 0; i < count; ++i) {
    const double lo = 0.15 + 0.7 * static_cast<double>(i) / static_cast<double>(count);
    const double hi = 0.15 + 0.7 * static_cast<double>(i + 1) / static_cast<double>(count);
    s.push_back(uniform(rng, lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo)));
  }
  const Vec3 trunk_dir = (t.main.points.col(t.main.points.cols() - 1) - t.main.points.col(0)).normalized();
  for (std::size_t i = 0; i < count; ++i) {
    const Vec3 anchor = t.main.at(s[i]);
    Vec3 side = trunk_dir.cross(Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)));
    if (side.norm() < 1e-3) side = trunk_dir.cross(Vec3::UnitZ());
    const Vec3 d = (0.6 * trunk_dir + side.normalized()).normalized();
    t.children.push_back({s[i], grow(rng, anchor, d, length * uniform(rng, 0.3, 0.55), level + 1, spec,
                                     radius * 0.6)});
  }
  return t;
}

}  // namespace

Tree random_tree(Rng& rng, const TreeSpec& spec) {
  const Vec3 start(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
  const Vec3 dir(uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3), 1.0);
  return grow(rng, start, dir, uniform(rng, 1.0, 3.0), 0, spec, 0.05);
}

Mat3 random_rotation(Rng& rng) {
  std::normal_distribution<double> g;
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  return q.normalized().toRotationMatrix();
}

Tree shuffle_children(const Tree& tree, Rng& rng) {
  Tree out = tree;
  for (auto& c : out.children) c.tree = shuffle_children(c.tree, rng);
  if (out.children.size() >= 2) {
    const auto before = out.children;
    std::vector<std::size_t> idx(out.children.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    do {
      std::shuffle(idx.begin(), idx.end(), rng);
    } while (std::is_sorted(idx.begin(), idx.end()));
    for (std::size_t i = 0; i < idx.size(); ++i) out.children[i] = before[idx[i]];
  }
  return out;
}

double warp(double s, double a, int k) { return s + a * std::sin(k * pi * s) / (k * pi); }

namespace {

double invert_warp(double y, double a, int k) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (warp(mid, a, k) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Vec3 polyline_at(const Branch& b, double s, double* radius) {
  const auto n = b.points.cols();
  const double x = std::clamp(s, 0.0, 1.0) * static_cast<double>(n - 1);
  const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(x)), n - 2);
  const double t = x - static_cast<double>(k);
  *radius = (1 - t) * b.radii(k) + t * b.radii(k + 1);
  return (1 - t) * b.points.col(k) + t * b.points.col(k + 1);
}

}  // namespace

Tree reparameterize(const Tree& tree, Rng& rng) {
  const double a = uniform(rng, -0.6, 0.6);
  const int k = std::uniform_int_distribution<int>(1, 2)(rng);
  Tree out;
  const auto n = tree.main.points.cols();
  out.main = Branch(Eigen::Matrix3Xd(3, n), Eigen::VectorXd(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    double r = 0.0;
    out.main.points.col(j) = polyline_at(tree.main, warp(static_cast<double>(j) / static_cast<double>(n - 1), a, k), &r);
    out.main.radii(j) = r;
  }
  for (const auto& c : tree.children) out.children.push_back({invert_warp(c.s, a, k), reparameterize(c.tree, rng)});
  return out;
}

Branch straight(double length, std::size_t n, const Vec3& start, const Vec3& dir) {
  return sample_curve([&](double s) -> Vec3 { return start + length * s * dir.normalized(); }, n, 0.0, 0.0);
}

Branch planar_arc(double length, double curvature, std::size_t n) {
  if (std::abs(curvature) < 1e-12) return straight(length, n);
  return sample_curve(
      [&](double s) -> Vec3 {
        const double th = curvature * length * s;
        return Vec3(std::sin(th) / curvature, (1.0 - std::cos(th)) / curvature, 0.0);
      },
      n, 0.0, 0.0);
}

Tree comb(const std::vector<double>& s, std::size_t n) {
  Tree t;
  t.main = sample_curve([](double u) -> Vec3 { return Vec3(0.1 * std::sin(pi * u), 0.05 * u * u, u); }, n, 0.04, 0.02);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec3 anchor = t.main.at(s[i]);
    const double ang = 2.0 * pi * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(s.size(), 1));
    const Vec3 d(std::cos(ang), std::sin(ang), 0.5);
    const double len = 0.25 + 0.05 * static_cast<double>(i);
    t.children.push_back({s[i], Tree{sample_curve(
                                         [=](double u) -> Vec3 {
                                           return anchor + len * (u * d.normalized() + 0.1 * u * u * Vec3::UnitZ());
                                         },
                                         n, 0.02, 0.01),
                                     {}}});
  }
  return t;
}

double arc_length(const Branch& b) { return b.length(); }

}  // namespace fixtures
