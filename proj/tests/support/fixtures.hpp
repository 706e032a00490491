#pragma once

#include "treeshape/srvf.hpp"
#include "treeshape/tree.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace fixtures {

using treeshape::Branch;
using treeshape::Mat3;
using treeshape::Tree;
using treeshape::Vec3;

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi);

/// Smooth analytic curve c(s), s in [0,1].
using Curve = std::function<Vec3(double)>;

Branch sample_curve(const Curve& curve, std::size_t n, double r0 = 0.05, double r1 = 0.02);

/// Gently bent non-planar curve of roughly `length` leaving `start` along `dir`.
Curve random_curve(Rng& rng, const Vec3& start, const Vec3& dir, double length, double bend = 0.25);

struct TreeSpec {
  std::size_t samples = 200;
  std::size_t levels = 2;
  std::size_t min_children = 1;
  std::size_t max_children = 3;
};

/// Random smooth tree. Child attachment parameters are distinct and sorted.
Tree random_tree(Rng& rng, const TreeSpec& spec = {});

/// Uniform random rotation (Haar) from the test generator.
Mat3 random_rotation(Rng& rng);

/// Randomly permutes every child list (guaranteed to change the order of a
/// list with at least two entries).
Tree shuffle_children(const Tree& tree, Rng& rng);

/// Smooth monotone warp s + a sin(k pi s) / (k pi) with |a| < 1.
double warp(double s, double a, int k);

/// Resamples every branch at warp(s_k) and moves attachment parameters so that
/// subtrees stay at the same points.
Tree reparameterize(const Tree& tree, Rng& rng);

/// Straight segment along +x from `start` with the given length and n samples.
Branch straight(double length, std::size_t n, const Vec3& start = Vec3::Zero(), const Vec3& dir = Vec3::UnitX());

/// Planar circular arc in the xy-plane of given arc length and curvature.
Branch planar_arc(double length, double curvature, std::size_t n);

/// Tree with one trunk and children at the given s (short straight-ish twigs).
Tree comb(const std::vector<double>& s, std::size_t n = 60);

double arc_length(const Branch& b);

}  // namespace fixtures
