// treeshape: elastic shape analysis of tree-like curves from the command line.

#include "treeshape/errors.hpp"
#include "treeshape/io.hpp"
#include "treeshape/statistics.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace treeshape;

namespace {

constexpr int kUsage = 2;
constexpr int kData = 3;
constexpr int kNumerical = 4;

struct Shared {
  std::string preset = "botanical";
  std::optional<double> lambda_m, lambda_s, lambda_p;
  std::size_t samples = 100;
  std::size_t iterations = 5;
  std::size_t restarts = 1;
  std::size_t levels = 0;
  bool no_scale = false;
  double thickness = 1.0;
  std::uint64_t seed = 0;

  MetricWeights weights() const {
    MetricWeights w = preset == "neuron" ? MetricWeights::neuronal() : MetricWeights::botanical();
    if (lambda_m) w.lambda_m = *lambda_m;
    if (lambda_s) w.lambda_s = *lambda_s;
    if (lambda_p) w.lambda_p = *lambda_p;
    w.validate();
    return w;
  }

  MatchOptions match() const {
    MatchOptions o;
    o.samples_per_branch = samples;
    o.scale_invariant = !no_scale;
    o.thickness_weight = thickness;
    o.match_thickness_weight = 0.0;
    o.align.max_iterations = iterations;
    o.align.restarts = restarts;
    o.align.n_levels = levels;
    o.align.seed = seed;
    return o;
  }
};

void add_shared(CLI::App& app, Shared& s) {
  app.add_option("--preset", s.preset, "Weight preset")->check(CLI::IsMember({"botanical", "neuron"}))->capture_default_str();
  app.add_option("--lambda-m", s.lambda_m, "Bending/stretching weight of main branches");
  app.add_option("--lambda-s", s.lambda_s, "Weight of subtree distances");
  app.add_option("--lambda-p", s.lambda_p, "Weight of attachment sliding");
  app.add_option("--samples-per-branch", s.samples, "Samples per resampled branch")->check(CLI::Range(4, 100000))->capture_default_str();
  app.add_option("--iterations", s.iterations, "Rotation/matching alternations")->capture_default_str();
  app.add_option("--restarts", s.restarts, "Initial rotations tried")->check(CLI::Range(1, 1000))->capture_default_str();
  app.add_option("--levels", s.levels, "Hierarchy levels used for matching (0 = all)")->capture_default_str();
  app.add_flag("--no-scale-normalize", s.no_scale, "Keep absolute size");
  app.add_option("--thickness-weight", s.thickness, "Thickness weight of reported results (matching uses 0)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--seed", s.seed, "Random seed")->capture_default_str();
}

Tree load(const fs::path& path) {
  const Tree t = io::read_tree(path);
  std::size_t lifted = 0;
  limit_depth(t, kMaxLevels, &lifted);
  if (lifted > 0)
    std::cerr << "warning: " << path.string() << ": " << lifted << " subtree(s) deeper than " << kMaxLevels
              << " levels attached to their level-" << kMaxLevels << " ancestor\n";
  return t;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

void write_tree(const std::string& path, const Tree& tree) {
  write_text(path, io::format_tree_document({std::string(io::kFormatVersion), {}, strip_null_branches(tree)}));
}

Vec3 plane_normal(const std::string& plane) {
  if (plane == "x") return Vec3::UnitX();
  if (plane == "y") return Vec3::UnitY();
  if (plane == "z") return Vec3::UnitZ();
  std::istringstream in(plane);
  Vec3 n;
  char c1 = 0, c2 = 0;
  if (!(in >> n.x() >> c1 >> n.y() >> c2 >> n.z()) || c1 != ',' || c2 != ',' || !(in >> std::ws).eof())
    throw CLI::ValidationError("--plane", "expected x, y, z or nx,ny,nz");
  return n;
}

std::string frame_name(const char* stem, std::size_t k) {
  char name[64];
  std::snprintf(name, sizeof name, "%s_%03zu.json", stem, k);
  return name;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elastic shape analysis of tree-like 3D curves"};
  app.require_subcommand(1);
  Shared shared;

  std::string a, b, out, out_dir, plane = "x";
  std::vector<std::string> files;
  std::size_t frames = 8, count = 1, components = 0, karcher_iterations = 20;
  std::optional<double> clamp;
  std::uint64_t sample_seed = 0;

  auto* distance = app.add_subcommand("distance", "Invariant distance between two trees");
  distance->add_option("A", a)->required()->check(CLI::ExistingFile);
  distance->add_option("B", b)->required()->check(CLI::ExistingFile);
  distance->add_option("-o,--out", out, "Alignment summary (JSON)");

  auto* match = app.add_subcommand("match", "Branch correspondences between two trees");
  match->add_option("A", a)->required()->check(CLI::ExistingFile);
  match->add_option("B", b)->required()->check(CLI::ExistingFile);
  match->add_option("-o,--out", out, "Correspondence map (JSON, default stdout)");

  auto* geo = app.add_subcommand("geodesic", "Frames along the geodesic between two trees");
  geo->add_option("A", a)->required()->check(CLI::ExistingFile);
  geo->add_option("B", b)->required()->check(CLI::ExistingFile);
  geo->add_option("--frames", frames, "Number of frames")->check(CLI::Range(2, 100000))->capture_default_str();
  geo->add_option("-o,--out-dir", out_dir, "Output directory")->default_val("geodesic");

  auto* mean = app.add_subcommand("mean", "Karcher mean of a collection");
  mean->add_option("FILES", files)->required()->check(CLI::ExistingFile);
  mean->add_option("-o,--out", out, "Mean tree (JSON, default stdout)");
  mean->add_option("--karcher-iterations", karcher_iterations, "Outer iterations")->capture_default_str();

  auto* pca = app.add_subcommand("pca", "Shape model of a collection");
  pca->add_option("FILES", files)->required()->check(CLI::ExistingFile);
  pca->add_option("-o,--out", out, "Shape model (JSON)")->required();
  pca->add_option("--karcher-iterations", karcher_iterations, "Outer iterations")->capture_default_str();

  auto* sample = app.add_subcommand("sample", "Random trees from a shape model");
  sample->add_option("MODEL", a)->required()->check(CLI::ExistingFile);
  sample->add_option("--count", count, "Number of trees")->capture_default_str();
  sample->add_option("--seed", sample_seed, "Random seed")->capture_default_str();
  sample->add_option("--clamp", clamp, "Clamp coefficients to [-c, c]")->check(CLI::NonNegativeNumber);
  sample->add_option("--components", components, "Modes used (0 = enough for 99% of the variance)")->capture_default_str();
  sample->add_option("-o,--out-dir", out_dir, "Output directory")->default_val("samples");

  auto* sym = app.add_subcommand("symmetrize", "Asymmetry score and nearest mirror-symmetric tree");
  sym->add_option("A", a)->required()->check(CLI::ExistingFile);
  sym->add_option("--plane", plane, "Mirror plane normal: x, y, z or nx,ny,nz")->capture_default_str();
  sym->add_option("-o,--out", out, "Symmetric tree (JSON)");

  for (auto* cmd : {distance, match, geo, mean, pca, sym}) add_shared(*cmd, shared);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    const MetricWeights w = shared.weights();
    const MatchOptions options = shared.match();
    KarcherOptions karcher;
    karcher.match = options;
    karcher.max_iterations = karcher_iterations;

    if (*distance) {
      const auto r = invariant_distance(load(a), load(b), w, options);
      std::printf("%.6f\n", r.distance);
      if (!out.empty()) write_text(out, io::alignment_summary(r).dump(2) + "\n");
    } else if (*match) {
      const auto r = invariant_distance(load(a), load(b), w, options);
      write_text(out, io::correspondence_map(r).dump(2) + "\n");
    } else if (*geo) {
      const Geodesic g = geodesic(load(a), load(b), w, options);
      auto trees = sample_geodesic(g, frames);
      for (auto& t : trees) t = strip_null_branches(t);
      io::write_geodesic_frames(out_dir, trees);
      std::printf("%.6f\n", g.length);
    } else if (*mean) {
      std::vector<Tree> trees;
      for (const auto& f : files) trees.push_back(load(f));
      const auto r = karcher_mean(trees, w, karcher);
      write_tree(out, srvft_to_tree(r.mean));
      if (!out.empty()) std::printf("%.6f\n", r.objective.back());
    } else if (*pca) {
      std::vector<Tree> trees;
      for (const auto& f : files) trees.push_back(load(f));
      const ShapeModel model = fit_pca(trees, w, karcher);
      io::write_shape_model(out, model);
      const auto ratios = cumulative_ratios(model);
      std::printf("%-4s %-14s %s\n", "k", "eigenvalue", "cumulative");
      for (std::size_t k = 0; k < ratios.size(); ++k)
        std::printf("%-4zu %-14.6e %.2f\n", k + 1, model.eigenvalues(static_cast<Eigen::Index>(k)), ratios[k]);
    } else if (*sample) {
      const ShapeModel model = io::read_shape_model(a);
      const std::size_t k = components > 0 ? components : leading_components(model);
      fs::create_directories(out_dir);
      for (std::size_t i = 0; i < count; ++i) {
        const auto coefficients = sample_coefficients(k, sample_seed, i, clamp);
        write_tree((fs::path(out_dir) / frame_name("sample", i)).string(), synthesize(model, coefficients));
      }
    } else if (*sym) {
      const auto r = symmetrize(load(a), plane_normal(plane), w, options);
      std::printf("%.6f\n", r.asymmetry);
      if (!out.empty()) write_tree(out, r.symmetric);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return 0;
}
