#include "treeshape/srvf.hpp"

#include "treeshape/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace treeshape {

using Eigen::Index;

bool QBranch::is_null() const { return start_thickness == 0.0 && (q.array() == 0.0).all(); }

QBranch QBranch::zero(std::size_t n, double c) {
  QBranch out;
  out.q = Eigen::Matrix4Xd::Zero(4, static_cast<Index>(n));
  out.c = c;
  return out;
}

bool SRVFT::is_null() const {
  if (!q0.is_null()) return false;
  return std::all_of(children.begin(), children.end(), [](const SrvfChild& c) { return c.tree.is_null(); });
}

void MetricWeights::validate() const {
  for (double v : {lambda_m, lambda_s, lambda_p})
    if (!std::isfinite(v) || v < 0.0) throw DomainError("metric weights must be finite and nonnegative");
  if (lambda_m == 0.0 && lambda_s == 0.0 && lambda_p == 0.0) throw DomainError("metric weights are all zero");
}

Eigen::MatrixXd grid_derivative(const Eigen::MatrixXd& v) {
  const Index n = v.cols();
  if (n < 2) throw GridMismatch("derivative needs at least two samples");
  const double h = 1.0 / static_cast<double>(n - 1);
  Eigen::MatrixXd d(v.rows(), n);
  if (n == 2) {
    d.col(0) = d.col(1) = (v.col(1) - v.col(0)) / h;
    return d;
  }
  if (n < 5) {
    d.col(0) = (-3.0 * v.col(0) + 4.0 * v.col(1) - v.col(2)) / (2.0 * h);
    for (Index k = 1; k + 1 < n; ++k) d.col(k) = (v.col(k + 1) - v.col(k - 1)) / (2.0 * h);
    d.col(n - 1) = (3.0 * v.col(n - 1) - 4.0 * v.col(n - 2) + v.col(n - 3)) / (2.0 * h);
    return d;
  }
  const double w = 1.0 / (12.0 * h);
  d.col(0) = w * (-25.0 * v.col(0) + 48.0 * v.col(1) - 36.0 * v.col(2) + 16.0 * v.col(3) - 3.0 * v.col(4));
  d.col(1) = w * (-3.0 * v.col(0) - 10.0 * v.col(1) + 18.0 * v.col(2) - 6.0 * v.col(3) + v.col(4));
  for (Index k = 2; k + 2 < n; ++k)
    d.col(k) = w * (v.col(k - 2) - 8.0 * v.col(k - 1) + 8.0 * v.col(k + 1) - v.col(k + 2));
  d.col(n - 2) =
      w * (3.0 * v.col(n - 1) + 10.0 * v.col(n - 2) - 18.0 * v.col(n - 3) + 6.0 * v.col(n - 4) - v.col(n - 5));
  d.col(n - 1) = w * (25.0 * v.col(n - 1) - 48.0 * v.col(n - 2) + 36.0 * v.col(n - 3) - 16.0 * v.col(n - 4) +
                      3.0 * v.col(n - 5));
  return d;
}

Eigen::MatrixXd grid_cumulative_integral(const Eigen::MatrixXd& f) {
  const Index n = f.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(f.rows(), n);
  if (n < 2) return out;
  const double h = 1.0 / static_cast<double>(n - 1);
  if (n < 4) {
    for (Index k = 0; k + 1 < n; ++k) out.col(k + 1) = out.col(k) + 0.5 * h * (f.col(k) + f.col(k + 1));
    return out;
  }
  const double w = h / 24.0;
  out.col(1) = w * (9.0 * f.col(0) + 19.0 * f.col(1) - 5.0 * f.col(2) + f.col(3));
  for (Index k = 1; k + 2 < n; ++k)
    out.col(k + 1) = out.col(k) + w * (-f.col(k - 1) + 13.0 * f.col(k) + 13.0 * f.col(k + 1) - f.col(k + 2));
  out.col(n - 1) =
      out.col(n - 2) + w * (f.col(n - 4) - 5.0 * f.col(n - 3) + 19.0 * f.col(n - 2) + 9.0 * f.col(n - 1));
  return out;
}

Eigen::VectorXd trapezoid_weights(std::size_t n) {
  if (n < 2) throw GridMismatch("quadrature needs at least two samples");
  const double h = 1.0 / static_cast<double>(n - 1);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Index>(n), h);
  w(0) = w(static_cast<Index>(n) - 1) = 0.5 * h;
  return w;
}

QBranch esrvf(const Branch& branch, double c) {
  branch.validate();
  if (!std::isfinite(c) || c < 0.0) throw DomainError("thickness weight must be nonnegative");
  const Index n = branch.points.cols();
  Eigen::MatrixXd g(4, n);
  g.topRows(3) = branch.points;
  g.row(3) = c * branch.radii.transpose();
  const Eigen::MatrixXd d = grid_derivative(g);
  const double eps = 1e-12 * (branch.length() + 1.0);

  QBranch out;
  out.c = c;
  out.start_thickness = c * branch.radii(0);
  out.q.resize(4, n);
  for (Index k = 0; k < n; ++k) {
    const double speed = d.col(k).norm();
    out.q.col(k) = speed < eps ? Eigen::Vector4d::Zero() : Eigen::Vector4d(d.col(k) / std::sqrt(speed));
  }
  return out;
}

Branch inverse_esrvf(const QBranch& q, const Vec3& origin) {
  const Index n = q.q.cols();
  if (n < 2) throw GridMismatch("branch grid needs at least two samples");
  Eigen::MatrixXd d(4, n);
  for (Index k = 0; k < n; ++k) d.col(k) = q.q.col(k) * q.q.col(k).norm();
  const Eigen::MatrixXd g = grid_cumulative_integral(d);

  Branch out(Eigen::Matrix3Xd(3, n), Eigen::VectorXd::Zero(n));
  out.points = g.topRows(3).colwise() + origin;
  if (q.c > 0.0)
    for (Index k = 0; k < n; ++k) out.radii(k) = std::max(0.0, (q.start_thickness + g(3, k)) / q.c);
  return out;
}

double qdist_squared(const QBranch& a, const QBranch& b) {
  if (a.size() != b.size()) throw GridMismatch("branches are sampled on different grids");
  const Eigen::VectorXd w = trapezoid_weights(a.size());
  return ((a.q - b.q).colwise().squaredNorm() * w)(0);
}

double qdist(const QBranch& a, const QBranch& b) { return std::sqrt(qdist_squared(a, b)); }

double qnorm_squared(const QBranch& q) {
  const Eigen::VectorXd w = trapezoid_weights(q.size());
  return (q.q.colwise().squaredNorm() * w)(0);
}

void check_rotation(const Mat3& r) {
  if (!r.allFinite()) throw InvalidRotation("rotation has non-finite entries");
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 || std::abs(r.determinant() - 1.0) > 1e-9)
    throw InvalidRotation("matrix is not a rotation");
}

QBranch rotate_q(const QBranch& q, const Mat3& rotation) {
  check_rotation(rotation);
  QBranch out = q;
  out.q.topRows(3) = rotation * q.q.topRows(3);
  return out;
}

Warp Warp::identity(std::size_t n) {
  return {Eigen::VectorXd::LinSpaced(static_cast<Index>(n), 0.0, 1.0)};
}

void Warp::validate() const {
  const Index n = values.size();
  if (n < 2) throw InvalidWarp("warp needs at least two samples");
  if (!values.allFinite()) throw InvalidWarp("warp has non-finite values");
  if (std::abs(values(0)) > 1e-12 || std::abs(values(n - 1) - 1.0) > 1e-12)
    throw InvalidWarp("warp must fix the endpoints 0 and 1");
  for (Index k = 1; k < n; ++k)
    if (values(k) < values(k - 1)) throw InvalidWarp("warp is not monotone");
}

namespace {

// Linear interpolation of uniformly sampled columns at parameter t in [0,1].
template <typename M>
auto sample_at(const M& m, double t) {
  const Index n = m.cols();
  const double x = std::clamp(t, 0.0, 1.0) * static_cast<double>(n - 1);
  const Index k = std::min<Index>(static_cast<Index>(std::floor(x)), n - 2);
  const double a = x - static_cast<double>(k);
  return ((1.0 - a) * m.col(k) + a * m.col(k + 1)).eval();
}

}  // namespace

double Warp::operator()(double s) const {
  return sample_at(values.transpose(), s)(0);
}

double Warp::inverse(double y) const {
  const Index n = values.size();
  if (y <= values(0)) return 0.0;
  for (Index k = 1; k < n; ++k) {
    if (values(k) >= y) {
      const double lo = values(k - 1);
      const double hi = values(k);
      const double a = hi > lo ? (y - lo) / (hi - lo) : 1.0;
      return (static_cast<double>(k - 1) + a) / static_cast<double>(n - 1);
    }
  }
  return 1.0;
}

namespace {

Eigen::VectorXd warp_slope(const Warp& gamma) {
  const Index n = gamma.values.size();
  const double h = 1.0 / static_cast<double>(n - 1);
  Eigen::VectorXd slope(n);
  slope(0) = (gamma.values(1) - gamma.values(0)) / h;
  slope(n - 1) = (gamma.values(n - 1) - gamma.values(n - 2)) / h;
  for (Index k = 1; k + 1 < n; ++k) slope(k) = (gamma.values(k + 1) - gamma.values(k - 1)) / (2.0 * h);
  return slope.cwiseMax(0.0);
}

}  // namespace

QBranch reparam_q(const QBranch& q, const Warp& gamma) {
  gamma.validate();
  if (gamma.size() != q.size()) throw GridMismatch("warp and branch grids differ");
  const Eigen::VectorXd slope = warp_slope(gamma);
  QBranch out = q;
  for (Index k = 0; k < q.q.cols(); ++k)
    out.q.col(k) = sample_at(q.q, gamma.values(k)) * std::sqrt(slope(k));
  return out;
}

Branch reparam_branch(const Branch& branch, const Warp& gamma) {
  gamma.validate();
  const Index n = gamma.values.size();
  Branch out(Eigen::Matrix3Xd(3, n), Eigen::VectorXd(n));
  for (Index k = 0; k < n; ++k) {
    out.points.col(k) = sample_at(branch.points, gamma.values(k));
    out.radii(k) = sample_at(branch.radii.transpose(), gamma.values(k))(0);
  }
  return out;
}

SRVFT tree_to_srvft(const Tree& tree, double c) {
  SRVFT out;
  out.q0 = esrvf(tree.main, c);
  out.origin = tree.main.start();
  out.children.reserve(tree.children.size());
  for (const auto& child : tree.children) out.children.push_back({child.s, tree_to_srvft(child.tree, c)});
  return out;
}

namespace {

Tree rebuild(const SRVFT& srvft, const Vec3& origin) {
  Tree out;
  out.main = inverse_esrvf(srvft.q0, origin);
  out.children.reserve(srvft.children.size());
  for (const auto& child : srvft.children)
    out.children.push_back({child.s, rebuild(child.tree, out.main.at(child.s))});
  return out;
}

void rotate_into(SRVFT& t, const Mat3& r, const Vec3& center) {
  t.q0.q.topRows(3) = r * t.q0.q.topRows(3);
  t.origin = center + r * (t.origin - center);
  for (auto& c : t.children) rotate_into(c.tree, r, center);
}

}  // namespace

Tree srvft_to_tree(const SRVFT& srvft) { return rebuild(srvft, srvft.origin); }

SRVFT rotate_srvft(const SRVFT& srvft, const Mat3& rotation) {
  check_rotation(rotation);
  SRVFT out = srvft;
  rotate_into(out, rotation, srvft.origin);
  return out;
}

std::size_t branch_count(const SRVFT& srvft) {
  std::size_t n = 1;
  for (const auto& c : srvft.children) n += branch_count(c.tree);
  return n;
}

bool same_structure(const SRVFT& a, const SRVFT& b) {
  if (a.q0.size() != b.q0.size() || a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!same_structure(a.children[i].tree, b.children[i].tree)) return false;
  return true;
}

namespace {

SRVFT lerp(const SRVFT& a, const SRVFT& b, double t) {
  SRVFT out;
  out.q0.q = (1.0 - t) * a.q0.q + t * b.q0.q;
  out.q0.c = a.q0.c == b.q0.c ? a.q0.c : (1.0 - t) * a.q0.c + t * b.q0.c;
  out.q0.start_thickness = (1.0 - t) * a.q0.start_thickness + t * b.q0.start_thickness;
  out.origin = (1.0 - t) * a.origin + t * b.origin;
  out.children.reserve(a.children.size());
  for (std::size_t i = 0; i < a.children.size(); ++i)
    out.children.push_back({(1.0 - t) * a.children[i].s + t * b.children[i].s,
                            lerp(a.children[i].tree, b.children[i].tree, t)});
  return out;
}

}  // namespace

SRVFT interpolate(const SRVFT& a, const SRVFT& b, double t) {
  if (!same_structure(a, b)) throw StructureMismatch("representations differ in structure");
  if (t == 0.0) return a;
  if (t == 1.0) return b;
  return lerp(a, b, t);
}

}  // namespace treeshape
