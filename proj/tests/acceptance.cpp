// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "fixtures.hpp"
#include "treeshape/assignment.hpp"
#include "treeshape/errors.hpp"
#include "treeshape/io.hpp"
#include "treeshape/statistics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

using namespace treeshape;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double q_norm(const SRVFT& q, const MetricWeights& w) {
  double sum = w.lambda_m * qnorm_squared(q.q0);
  for (const auto& c : q.children) sum += w.lambda_s * std::pow(q_norm(c.tree, w), 2);
  return std::sqrt(sum);
}

MatchOptions match_at(std::size_t n) {
  MatchOptions o;
  o.samples_per_branch = n;
  return o;
}

std::vector<Tree> fixture_set() {
  fixtures::Rng rng(2024);
  std::vector<Tree> out;
  for (int i = 0; i < 4; ++i) out.push_back(fixtures::random_tree(rng, {150, 2, 1, 3}));
  for (int i = 0; i < 2; ++i) out.push_back(fixtures::random_tree(rng, {150, 3, 1, 2}));
  out.push_back(fixtures::comb({0.25, 0.5, 0.75}));
  return out;
}

// ---- 1 -----------------------------------------------------------------------

Outcome round_trip() {
  fixtures::Rng rng(1);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Tree t = fixtures::random_tree(rng, {200, 3, 1, 3});
    worst = std::max(worst, max_point_distance(srvft_to_tree(tree_to_srvft(t)), t));
  }
  return {worst < 1e-6, fmt("max pointwise error %.2e over 20 trees at N=200", worst)};
}

// ---- 2 -----------------------------------------------------------------------

Outcome self_distance() {
  double worst = 0.0;
  for (const auto& t : fixture_set()) worst = std::max(worst, invariant_distance(t, t, {}, match_at(100)).distance);
  return {worst < 1e-6, fmt("max d(T, T) = %.2e over 7 fixtures", worst)};
}

// ---- 3 -----------------------------------------------------------------------

Outcome invariance() {
  fixtures::Rng rng(3);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Tree t = fixtures::random_tree(rng, {150, 2 + static_cast<std::size_t>(i % 5 == 4), 1, 3});
    Tree u = t;
    switch (i % 4) {
      case 0: u = rotate_tree(t, fixtures::random_rotation(rng)); break;
      case 1: u = fixtures::shuffle_children(t, rng); break;
      case 2: u = fixtures::reparameterize(t, rng); break;
      default:
        u = rotate_tree(fixtures::shuffle_children(fixtures::reparameterize(t, rng), rng), fixtures::random_rotation(rng));
    }
    const auto r = invariant_distance(t, u, {}, match_at(100));
    worst = std::max(worst, r.distance / q_norm(r.registered.source, {}));
  }
  return {worst < 1e-2, fmt("max d / |Q| = %.2e over 50 transformed copies", worst)};
}

// ---- 4 -----------------------------------------------------------------------

double brute_assignment(const Eigen::MatrixXd& c) {
  std::vector<std::size_t> p(static_cast<std::size_t>(c.rows()));
  std::iota(p.begin(), p.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p[i]));
    best = std::min(best, s);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

Outcome assignment_oracle() {
  fixtures::Rng rng(4);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 7;
    Eigen::MatrixXd c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = fixtures::uniform(rng, 0.0, 10.0);
    if (solve_assignment(c).cost != brute_assignment(c)) ++mismatches;
  }
  return {mismatches == 0, fmt("%.0f of 200 matrices differ from brute force", mismatches)};
}

// ---- 5 -----------------------------------------------------------------------

double enumerate_paths(const QBranch& q1, const QBranch& q2, int k, int l, double acc) {
  const int last = static_cast<int>(q1.size()) - 1;
  if (k == last && l == last) return acc;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [di, dj] : detail::dp_stencil()) {
    const int i = k + di, j = l + dj;
    if (i > last || j > last) continue;
    best = std::min(best, enumerate_paths(q1, q2, i, j, acc + detail::dp_segment_cost(q1, q2, k, l, i, j)));
  }
  return best;
}

Outcome dp_oracle() {
  fixtures::Rng rng(5);
  int mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(trial % 7);
    auto curve = [&] {
      return esrvf(fixtures::sample_curve(fixtures::random_curve(rng, Vec3::Zero(), Vec3(fixtures::uniform(rng, -1, 1), 1, 0.3), 1.0, 0.6), n), 0.0);
    };
    const QBranch a = curve(), b = curve();
    if (dp_reparam(a, b).path_cost != enumerate_paths(a, b, 0, 0, 0.0)) ++mismatches;
  }
  return {mismatches == 0, fmt("%.0f of 50 pairs (N = 4..10) differ from exhaustive enumeration", mismatches)};
}

// ---- 6 -----------------------------------------------------------------------

Outcome procrustes() {
  fixtures::Rng rng(6);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Tree p = normalize(resample_tree(fixtures::random_tree(rng, {100, 3, 1, 3}), 80));
    const SRVFT q = tree_to_srvft(pad_null_branches(p, p).first, 0.0);
    const Mat3 r = fixtures::random_rotation(rng);
    const Mat3 o = procrustes_rotation(q, rotate_srvft(q, r), {});
    worst = std::max(worst, (o * r - Mat3::Identity()).norm());
  }
  return {worst < 1e-6, fmt("max |O R - I|_F = %.2e over 50 planted rotations", worst)};
}

// ---- 7 -----------------------------------------------------------------------

Outcome monotone_descent() {
  const auto trees = fixture_set();
  double worst = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < trees.size(); ++i)
    for (std::size_t j = i + 1; j < trees.size(); ++j) {
      const auto r = invariant_distance(trees[i], trees[j], {}, match_at(60));
      for (std::size_t k = 1; k < r.alignment.history.size(); ++k)
        worst = std::max(worst, r.alignment.history[k] - r.alignment.history[k - 1]);
      ++pairs;
    }
  return {worst <= 1e-9, fmt("largest per-iteration increase %.2e over %.0f pairs", worst, pairs)};
}

// ---- 8 -----------------------------------------------------------------------

Outcome geodesic_checks() {
  fixtures::Rng rng(8);
  double endpoint = 0.0, proportional = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Tree a = fixtures::random_tree(rng, {150, 2, 1, 3});
    const Tree b = fixtures::random_tree(rng, {150, 2, 1, 3});
    const Geodesic g = geodesic(a, b, {}, match_at(100));
    endpoint = std::max({endpoint, tree_distance(g.at(0.0), g.source, {}), tree_distance(g.at(1.0), g.target_aligned, {})});
    endpoint = std::max(endpoint, max_point_distance(eval_geodesic(g, 0.0), srvft_to_tree(g.source)));
    endpoint = std::max(endpoint, max_point_distance(eval_geodesic(g, 1.0), srvft_to_tree(g.target_aligned)));
    for (double ta : {0.0, 0.2, 0.45, 0.7})
      for (double tb : {0.1, 0.5, 0.9, 1.0}) {
        const double expected = std::abs(ta - tb) * g.length;
        proportional = std::max(proportional, std::abs(tree_distance(g.at(ta), g.at(tb), {}) - expected) / expected);
      }
  }
  return {endpoint < 1e-6 && proportional < 1e-6,
          fmt("endpoint error %.2e, proportionality error %.2e (relative)", endpoint, proportional)};
}

// ---- 9 -----------------------------------------------------------------------

Outcome anti_shrinkage() {
  double smallest = std::numeric_limits<double>::infinity();
  int wins = 0;
  for (int i = 0; i < 10; ++i) {
    const Tree up{fixtures::planar_arc(1.0, 1.5 + 0.5 * i, 101), {}};
    const Tree down{fixtures::planar_arc(1.0, -2.0 - 0.3 * i, 101), {}};
    MatchOptions o = match_at(101);
    o.thickness_weight = 0.0;
    const auto r = invariant_distance(up, down, {}, o);
    const double srvf = fixtures::arc_length(eval_geodesic(geodesic_from(r, {}), 0.5).main);
    const Branch naive(0.5 * (r.source_tree.main.points + r.target_tree.main.points), Eigen::VectorXd::Zero(101));
    const double linear = fixtures::arc_length(naive);
    smallest = std::min(smallest, srvf - linear);
    wins += srvf > linear;
  }
  return {wins == 10, fmt("%.0f of 10 arc pairs; smallest length gain at t=0.5 is %.3f", wins, smallest)};
}

// ---- 10 ----------------------------------------------------------------------

Outcome karcher() {
  fixtures::Rng rng(10);
  KarcherOptions o;
  o.match = match_at(60);
  const MetricWeights w;

  const Tree single = fixtures::random_tree(rng, {150, 2, 1, 3});
  const double m1 = tree_distance(karcher_mean({single}, w, o).mean, tree_to_srvft(prepare_tree(single, o.match)), w);

  const Tree a = fixtures::random_tree(rng, {150, 2, 1, 2});
  const Tree b = fixtures::random_tree(rng, {150, 2, 1, 2});
  const SRVFT mid = geodesic(a, b, w, o.match).at(0.5);
  KarcherOptions first = o;
  first.max_iterations = 1;
  const double m2 = tree_distance(karcher_mean({a, b}, w, first).mean, mid, w);
  const SRVFT converged = karcher_mean({a, b}, w, o).mean;
  const double drift = same_structure(converged, mid) ? tree_distance(converged, mid, w) : -1.0;

  double increase = 0.0;
  for (std::size_t m = 2; m <= 6; ++m) {
    std::vector<Tree> trees;
    for (std::size_t i = 0; i < m; ++i) trees.push_back(fixtures::random_tree(rng, {120, 2, 1, 2}));
    const auto r = karcher_mean(trees, w, o);
    for (std::size_t k = 1; k < r.objective.size(); ++k) increase = std::max(increase, r.objective[k] - r.objective[k - 1]);
  }
  Outcome out{m1 == 0.0 && m2 < 1e-4 && increase <= 1e-9,
              fmt("m=1 error %.1e, m=2 first-update midpoint error %.2e, max objective increase %.1e", m1, m2, increase)};
  out.detail += fmt(" (converged m=2 mean sits %.3f from the midpoint)", drift);
  return out;
}

// ---- 11, 12 ------------------------------------------------------------------

struct Model {
  KarcherResult karcher;
  ShapeModel model;
};

const Model& six_tree_model() {
  static const Model m = [] {
    fixtures::Rng rng(11);
    std::vector<Tree> trees;
    for (int i = 0; i < 6; ++i) trees.push_back(fixtures::random_tree(rng, {120, 2, 1, 2}));
    KarcherOptions o;
    o.match = match_at(60);
    Model out;
    out.karcher = karcher_mean(trees, MetricWeights::botanical(), o);
    out.model = fit_pca_registered(out.karcher.mean, out.karcher.registered, MetricWeights::botanical());
    return out;
  }();
  return m;
}

Outcome pca() {
  const auto& [karcher, model] = six_tree_model();
  const Eigen::Index k = model.eigenvectors.cols();
  const double ortho = (model.eigenvectors.transpose() * model.eigenvectors - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
  double recon = 0.0;
  for (const auto& s : karcher.registered)
    recon = std::max(recon, (flatten(synthesize_srvft(model, project(model, s)), model.weights) - flatten(s, model.weights))
                                .cwiseAbs()
                                .maxCoeff());
  const auto ratios = cumulative_ratios(model);
  const bool ends = ratios.size() == 5 && std::abs(ratios.back() - 1.0) < 5e-3;
  return {ortho < 1e-10 && recon < 1e-6 && ends,
          fmt("orthonormality %.1e, reconstruction %.1e, ratio at k=m-1 is %.2f", ortho, recon, ratios.back())};
}

Outcome synthesis() {
  const auto& model = six_tree_model().model;
  const bool zero = max_point_distance(synthesize(model, Eigen::VectorXd::Zero(5)), srvft_to_tree(model.mean)) == 0.0;
  bool reproducible = true;
  double largest = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto a = sample_coefficients(5, 77, i, 1.0);
    const auto b = sample_coefficients(5, 77, i, 1.0);
    reproducible = reproducible && a == b && max_point_distance(synthesize(model, a), synthesize(model, b)) == 0.0;
    largest = std::max(largest, a.cwiseAbs().maxCoeff());
  }
  return {zero && reproducible && largest <= 1.0,
          fmt("mean exact: %.0f, bit-reproducible: %.0f, largest |a_i| = %.3f", zero, reproducible, largest)};
}

// ---- 13 ----------------------------------------------------------------------

Tree mirror_fixture() {
  Tree t{fixtures::sample_curve([](double s) -> Vec3 { return Vec3(0, 0.1 * s * s, s); }, 100), {}};
  const Vec3 base = t.main.at(0.5);
  for (double sign : {1.0, -1.0})
    t.children.push_back({0.5, Tree{fixtures::sample_curve([=](double s) -> Vec3 {
                                        return base + Vec3(sign * 0.3 * s, 0.2 * s, 0.3 * s + 0.2 * s * s);
                                      }, 100), {}}});
  return t;
}

Outcome symmetry() {
  fixtures::Rng rng(13);
  const MetricWeights w = MetricWeights::botanical();
  const MatchOptions o = match_at(60);
  double involution = 0.0;
  for (int i = 0; i < 5; ++i) {
    const Tree t = fixtures::random_tree(rng, {100, 3, 1, 3});
    const Vec3 n(fixtures::uniform(rng, -1, 1), fixtures::uniform(rng, -1, 1), fixtures::uniform(rng, -1, 1));
    involution = std::max(involution, max_point_distance(reflect(reflect(t, n), n), t));
  }
  const Tree mirror = mirror_fixture();
  const double scale = q_norm(tree_to_srvft(prepare_tree(mirror, o)), w);
  const double symmetric = symmetrize(mirror, Vec3::UnitX(), w, o).asymmetry / scale;

  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Tree t = fixtures::random_tree(rng, {150, 2, 1, 3});
    const auto first = symmetrize(t, Vec3::UnitX(), w, o);
    const auto second = symmetrize(first.symmetric, Vec3::UnitX(), w, o);
    worst = std::max(worst, second.asymmetry / first.asymmetry);
  }
  return {involution < 1e-12 && symmetric < 1e-3 && worst <= 0.05,
          fmt("involution %.1e, symmetric fixture %.1e x scale, worst residual asymmetry %.1f%%", involution, symmetric,
              100.0 * worst)};
}

// ---- 14 ----------------------------------------------------------------------

// Each tree has a branchy and a bare child. Sliding favors pairing by position,
// subtree shape favors pairing the branchy children across positions.
Tree crossed(bool branchy_first) {
  Tree t{fixtures::straight(1.0, 60, Vec3::Zero(), Vec3::UnitZ()), {}};
  for (double s : {0.2, 0.8}) {
    const Vec3 base = t.main.at(s);
    Tree child{fixtures::straight(0.5, 60, base, Vec3(1, 0, 1).normalized()), {}};
    if ((s < 0.5) == branchy_first)
      for (double u : {0.4, 0.7})
        child.children.push_back({u, Tree{fixtures::straight(0.3, 60, child.main.at(u), Vec3(0, 1, 1).normalized()), {}}});
    t.children.push_back({s, child});
  }
  return t;
}

std::size_t null_matches(const Registration& r) {
  std::size_t n = 0;
  const auto map = io::correspondence_map(r);
  for (const auto& p : map["pairs"]) n += p["tree1"].is_null() || p["tree2"].is_null();
  return n;
}

Outcome configuration() {
  const auto b = MetricWeights::botanical();
  const auto n = MetricWeights::neuronal();
  const bool presets = b.lambda_m == 1.0 && b.lambda_s == 1.0 && b.lambda_p == 1.0 && n.lambda_m == 0.2 &&
                       n.lambda_s == 1.0 && n.lambda_p == 0.2;
  const Tree a = crossed(true), c = crossed(false);
  const auto low = null_matches(invariant_distance(a, c, {1.0, 1e-4, 1.0}, match_at(60)));
  const auto high = null_matches(invariant_distance(a, c, {1.0, 1.0, 1.0}, match_at(60)));
  return {presets && low > high, fmt("presets exact: %.0f; null matches %.0f at lambda_s=1e-4 vs %.0f at 1", presets, low, high)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"SRVF round trip", round_trip},
      {"self-distance", self_distance},
      {"invariance suite", invariance},
      {"assignment oracle", assignment_oracle},
      {"DP oracle", dp_oracle},
      {"Procrustes recovery", procrustes},
      {"monotone descent", monotone_descent},
      {"geodesic endpoints and proportionality", geodesic_checks},
      {"anti-shrinkage", anti_shrinkage},
      {"Karcher mean", karcher},
      {"PCA identities", pca},
      {"synthesis", synthesis},
      {"symmetrization", symmetry},
      {"configuration fidelity", configuration},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !out.pass;
    std::printf("%s %2zu %s: %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
