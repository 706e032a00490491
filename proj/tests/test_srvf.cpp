#include "fixtures.hpp"
#include "treeshape/errors.hpp"
#include "treeshape/srvf.hpp"

#include <Eigen/Geometry>
#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace treeshape;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// Composite Simpson on a uniform grid with an odd sample count.
double simpson(const Eigen::VectorXd& f) {
  const auto n = f.size();
  const double h = 1.0 / static_cast<double>(n - 1);
  double s = f(0) + f(n - 1);
  for (Eigen::Index k = 1; k + 1 < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(k);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("esrvf of a unit-speed line is constant") {
  const QBranch q = esrvf(fixtures::straight(1.0, 11));
  for (Eigen::Index k = 0; k < 11; ++k) CHECK((q.q.col(k) - Eigen::Vector4d(1, 0, 0, 0)).norm() < 1e-12);
}

TEST_CASE("esrvf of a null branch is zero") {
  const QBranch q = esrvf(Branch::null_at(Vec3(1, 2, 3), 9));
  CHECK(q.q.isZero(0));
  CHECK(q.is_null());
}

TEST_CASE("esrvf of f(s) = (2s, 0, 0) is sqrt(2) e1") {
  const QBranch q = esrvf(fixtures::straight(2.0, 17));
  CHECK(max_abs(q.q.row(0).array() - std::sqrt(2.0)) < 1e-10);
  CHECK(max_abs(q.q.bottomRows(3)) < 1e-12);
}

TEST_CASE("thickness enters the fourth channel") {
  Branch b = fixtures::straight(1.0, 21);
  for (Eigen::Index k = 0; k < 21; ++k) b.radii(k) = 0.5 + 0.25 * static_cast<double>(k) / 20.0;
  // d = (1, 0, 0, c/4); q = d / |d|^(1/2).
  const QBranch q = esrvf(b, 2.0);
  const Eigen::Vector4d d(1, 0, 0, 0.5);
  CHECK((q.q.col(7) - d / std::sqrt(d.norm())).norm() < 1e-12);
  CHECK(q.start_thickness == 1.0);
  const QBranch q0 = esrvf(b, 0.0);
  CHECK(q0.q.row(3).isZero(0));
}

TEST_CASE("esrvf is translation invariant") {
  fixtures::Rng rng(2);
  const Branch b = fixtures::sample_curve(fixtures::random_curve(rng, Vec3::Zero(), Vec3::UnitY(), 1.0), 50);
  Branch moved = b;
  moved.points.colwise() += Vec3(4, -2, 7);
  const QBranch a = esrvf(b);
  const QBranch c = esrvf(moved);
  CHECK(max_abs(a.q - c.q) < 1e-12);
}

TEST_CASE("grid derivative and cumulative integral are exact on quartics and cubics") {
  const int n = 12;
  Eigen::MatrixXd f(1, n), df(1, n);
  for (int k = 0; k < n; ++k) {
    const double s = static_cast<double>(k) / (n - 1);
    f(0, k) = 1 + 2 * s - 3 * s * s + 0.5 * std::pow(s, 3) + 0.7 * std::pow(s, 4);
    df(0, k) = 2 - 6 * s + 1.5 * s * s + 2.8 * std::pow(s, 3);
  }
  CHECK(max_abs(grid_derivative(f) - df) < 1e-10);
  Eigen::MatrixXd cubic(1, n), integral(1, n);
  for (int k = 0; k < n; ++k) {
    const double s = static_cast<double>(k) / (n - 1);
    cubic(0, k) = 1 - s + 4 * s * s * s;
    integral(0, k) = s - s * s / 2 + s * s * s * s;
  }
  CHECK(max_abs(grid_cumulative_integral(cubic) - integral) < 1e-13);
}

TEST_CASE("inverse_esrvf examples") {
  QBranch q = QBranch::zero(5, 1.0);
  q.q.row(0).setOnes();
  const Branch b = inverse_esrvf(q, Vec3::Zero());
  CHECK(max_abs(b.points - fixtures::straight(1.0, 5).points) < 1e-14);
  const Branch z = inverse_esrvf(QBranch::zero(6, 1.0), Vec3(1, 2, 3));
  CHECK(z.is_null());
  CHECK(z.start() == Vec3(1, 2, 3));
}

TEST_CASE("property: branch round trip within 1e-6 at N = 200") {
  fixtures::Rng rng(17);
  for (int i = 0; i < 25; ++i) {
    Branch b = fixtures::sample_curve(
        fixtures::random_curve(rng, Vec3(fixtures::uniform(rng, -1, 1), 0, 0), Vec3(0.2, 1, 0.4), 1.3, 0.4), 200,
        0.08, 0.01);
    const double c = i % 3 == 0 ? 0.0 : 1.0;
    const Branch back = inverse_esrvf(esrvf(b, c), b.start());
    CHECK(max_abs(back.points - b.points) < 1e-6);
    if (c > 0) CHECK(max_abs(back.radii - b.radii) < 1e-6);
  }
}

TEST_CASE("inverse clamps negative radii and zero thickness weight gives zero radii") {
  QBranch q = QBranch::zero(5, 1.0);
  q.q.row(0).setOnes();
  q.q.row(3).setConstant(-1.0);
  q.start_thickness = 0.1;
  const Branch b = inverse_esrvf(q, Vec3::Zero());
  CHECK(b.radii.minCoeff() == 0.0);
  q.c = 0.0;
  CHECK(inverse_esrvf(q, Vec3::Zero()).radii.isZero(0));
}

TEST_CASE("qdist examples and metric axioms") {
  const QBranch line = esrvf(fixtures::straight(1.0, 31));
  const QBranch zero = QBranch::zero(31, 1.0);
  CHECK(qdist(line, line) == 0.0);
  CHECK(qdist(line, zero) == doctest::Approx(1.0).epsilon(1e-12));

  fixtures::Rng rng(9);
  std::normal_distribution<double> g;
  for (int i = 0; i < 50; ++i) {
    QBranch a = QBranch::zero(21, 1), b = a, c = a;
    for (auto* q : {&a, &b, &c})
      for (Eigen::Index k = 0; k < 21; ++k)
        for (int r = 0; r < 4; ++r) q->q(r, k) = g(rng);
    CHECK(qdist(a, b) == qdist(b, a));
    CHECK(qdist(a, b) >= 0.0);
    CHECK(qdist(a, c) <= qdist(a, b) + qdist(b, c) + 1e-12);
  }
  CHECK_THROWS_AS(qdist(line, QBranch::zero(30, 1.0)), GridMismatch);
}

TEST_CASE("qdist quadrature agrees with Simpson on a smooth pair") {
  fixtures::Rng rng(31);
  const Branch a = fixtures::sample_curve(fixtures::random_curve(rng, Vec3::Zero(), Vec3::UnitX(), 1.0), 401);
  const Branch b = fixtures::sample_curve(fixtures::random_curve(rng, Vec3::Zero(), Vec3::UnitY(), 1.2), 401);
  const QBranch qa = esrvf(a), qb = esrvf(b);
  const Eigen::VectorXd integrand = (qa.q - qb.q).colwise().squaredNorm().transpose();
  CHECK(qdist_squared(qa, qb) == doctest::Approx(simpson(integrand)).epsilon(1e-5));
}

TEST_CASE("rotate_q acts on the spatial rows only") {
  const QBranch line = esrvf(fixtures::straight(1.0, 9));
  const Mat3 rz = Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ()).toRotationMatrix();
  const QBranch r = rotate_q(line, rz);
  CHECK(max_abs(r.q.row(1).array() - 1.0) < 1e-15);
  CHECK(max_abs(r.q.row(0)) < 1e-15);
  CHECK(max_abs(rotate_q(line, Mat3::Identity()).q - line.q) == 0.0);

  fixtures::Rng rng(4);
  Branch b = fixtures::sample_curve(fixtures::random_curve(rng, Vec3::Zero(), Vec3::UnitX(), 1.0), 40, 0.2, 0.05);
  const QBranch q = esrvf(b);
  const QBranch rq = rotate_q(q, fixtures::random_rotation(rng));
  CHECK(std::abs(qnorm_squared(rq) - qnorm_squared(q)) < 1e-12);
  CHECK(rq.q.row(3) == q.q.row(3));

  Mat3 reflection = Mat3::Identity();
  reflection(2, 2) = -1;
  CHECK_THROWS_AS(rotate_q(q, reflection), InvalidRotation);
  CHECK_THROWS_AS(rotate_q(q, 2.0 * Mat3::Identity()), InvalidRotation);
}

TEST_CASE("warp validation and evaluation") {
  Warp w{Eigen::VectorXd::LinSpaced(5, 0, 1).array().square()};
  CHECK_NOTHROW(w.validate());
  CHECK(w(0.5) == doctest::Approx(0.25));
  CHECK(w.inverse(0.25) == doctest::Approx(0.5));
  Warp flat{Eigen::VectorXd(5)};
  flat.values << 0, 0.5, 0.5, 0.5, 1;
  CHECK(flat.inverse(0.5) == doctest::Approx(0.25));
  Warp bad{Eigen::VectorXd(4)};
  bad.values << 0, 0.6, 0.4, 1;
  CHECK_THROWS_AS(bad.validate(), InvalidWarp);
  bad.values << 0.1, 0.2, 0.4, 1;
  CHECK_THROWS_AS(bad.validate(), InvalidWarp);
  CHECK_THROWS_AS(reparam_q(QBranch::zero(4, 1), Warp{Eigen::VectorXd(Eigen::Vector4d(0, 0.6, 0.4, 1))}), InvalidWarp);
}

TEST_CASE("reparam_q is the identity for the identity warp") {
  fixtures::Rng rng(8);
  const QBranch q = esrvf(fixtures::sample_curve(fixtures::random_curve(rng, Vec3::Zero(), Vec3::UnitZ(), 1.0), 60));
  CHECK(max_abs(reparam_q(q, Warp::identity(60)).q - q.q) < 1e-12);
}

TEST_CASE("reparam_q approximately preserves the norm and commutes with esrvf") {
  const std::size_t n = 200;
  Warp gamma{Eigen::VectorXd(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const double s = static_cast<double>(k) / (n - 1);
    gamma.values(static_cast<Eigen::Index>(k)) = 0.5 * s * s + 0.5 * s;
  }
  fixtures::Rng rng(12);
  for (int i = 0; i < 10; ++i) {
    const auto curve = fixtures::random_curve(rng, Vec3::Zero(), Vec3(1, 1, 0), 1.0, 0.3);
    const Branch b = fixtures::sample_curve(curve, n, 0.1, 0.02);
    const QBranch q = esrvf(b);
    const QBranch qg = reparam_q(q, gamma);
    CHECK(std::abs(std::sqrt(qnorm_squared(qg)) - std::sqrt(qnorm_squared(q))) / std::sqrt(qnorm_squared(q)) < 1e-3);
    // esrvf(b o gamma), with b o gamma evaluated on the analytic curve.
    const Branch bg = fixtures::sample_curve([&](double s) { return curve(0.5 * s * s + 0.5 * s); }, n, 0.1, 0.02);
    Branch bg_r = bg;
    for (std::size_t k = 0; k < n; ++k) {
      const double s = static_cast<double>(k) / (n - 1);
      bg_r.radii(static_cast<Eigen::Index>(k)) = 0.1 + (0.02 - 0.1) * (0.5 * s * s + 0.5 * s);
    }
    CHECK(max_abs(qg.q - esrvf(bg_r).q) < 3e-3);
  }
}

TEST_CASE("property: tree round trip through SRVFT at N = 200") {
  fixtures::Rng rng(44);
  for (int i = 0; i < 10; ++i) {
    const Tree t = normalize(fixtures::random_tree(rng, {200, 3, 1, 3}));
    const SRVFT q = tree_to_srvft(t);
    CHECK(branch_count(q) == t.branch_count());
    CHECK(max_point_distance(srvft_to_tree(q), t) < 1e-6);
  }
}

TEST_CASE("reconstructed children start on their parent") {
  const Tree t = fixtures::comb({0.25, 0.75}, 200);
  const Tree back = srvft_to_tree(tree_to_srvft(t));
  for (const auto& c : back.children) CHECK((c.tree.main.start() - back.main.at(c.s)).norm() < 1e-12);
  const auto [padded, other] = pad_null_branches(t, fixtures::comb({0.2, 0.5, 0.8}, 200));
  const Tree rebuilt = srvft_to_tree(tree_to_srvft(padded));
  const auto& null_child = rebuilt.children.back();
  CHECK(null_child.tree.main.is_null());
  CHECK((null_child.tree.main.start() - rebuilt.main.at(null_child.s)).norm() < 1e-12);
}

TEST_CASE("interpolate and structure helpers") {
  const SRVFT a = tree_to_srvft(fixtures::comb({0.3}));
  SRVFT b = a;
  b.children[0].s = 0.7;
  CHECK(interpolate(a, b, 0.5).children[0].s == doctest::Approx(0.5));
  CHECK(same_structure(a, b));
  CHECK_FALSE(same_structure(a, tree_to_srvft(fixtures::comb({}))));
  CHECK_THROWS_AS(interpolate(a, tree_to_srvft(fixtures::comb({0.1, 0.2})), 0.5), StructureMismatch);
  const Mat3 r = Eigen::AngleAxisd(0.3, Vec3::UnitX()).toRotationMatrix();
  CHECK(max_abs(rotate_srvft(a, r).children[0].tree.q0.q - rotate_q(a.children[0].tree.q0, r).q) < 1e-15);
}

TEST_CASE("metric weights validation") {
  CHECK_NOTHROW(MetricWeights{}.validate());
  CHECK_THROWS_AS((MetricWeights{-1, 1, 1}.validate()), DomainError);
  CHECK_THROWS_AS((MetricWeights{0, 0, 0}.validate()), DomainError);
  CHECK(MetricWeights::neuronal().lambda_m == 0.2);
}
