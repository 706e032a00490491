#include "treeshape/errors.hpp"
#include "treeshape/io.hpp"
#include "treeshape/statistics.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

namespace py = pybind11;
using namespace treeshape;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

Tree make_tree(const Points& points, const Eigen::VectorXd& radii,
               const std::vector<std::pair<double, Tree>>& children) {
  Tree t;
  t.main = Branch(points.transpose(), radii);
  for (const auto& [s, sub] : children) t.children.push_back({s, sub});
  t.validate();
  return t;
}

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

MatchOptions options_or_default(const std::optional<MatchOptions>& o) { return o.value_or(MatchOptions{}); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Elastic shape analysis of tree-like 3D curves";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<MetricWeights>(m, "MetricWeights")
      .def(py::init([](double lm, double ls, double lp) { return MetricWeights{lm, ls, lp}; }),
           py::arg("lambda_m") = 1.0, py::arg("lambda_s") = 1.0, py::arg("lambda_p") = 1.0)
      .def_readwrite("lambda_m", &MetricWeights::lambda_m)
      .def_readwrite("lambda_s", &MetricWeights::lambda_s)
      .def_readwrite("lambda_p", &MetricWeights::lambda_p)
      .def_static("botanical", &MetricWeights::botanical)
      .def_static("neuronal", &MetricWeights::neuronal)
      .def("__repr__", [](const MetricWeights& w) {
        return "MetricWeights(" + std::to_string(w.lambda_m) + ", " + std::to_string(w.lambda_s) + ", " +
               std::to_string(w.lambda_p) + ")";
      });

  py::class_<MatchOptions>(m, "MatchOptions")
      .def(py::init<>())
      .def_readwrite("samples_per_branch", &MatchOptions::samples_per_branch)
      .def_readwrite("scale_invariant", &MatchOptions::scale_invariant)
      .def_readwrite("thickness_weight", &MatchOptions::thickness_weight)
      .def_property(
          "iterations", [](const MatchOptions& o) { return o.align.max_iterations; },
          [](MatchOptions& o, std::size_t v) { o.align.max_iterations = v; })
      .def_property(
          "restarts", [](const MatchOptions& o) { return o.align.restarts; },
          [](MatchOptions& o, std::size_t v) { o.align.restarts = v; })
      .def_property(
          "levels", [](const MatchOptions& o) { return o.align.n_levels; },
          [](MatchOptions& o, std::size_t v) { o.align.n_levels = v; })
      .def_property(
          "seed", [](const MatchOptions& o) { return o.align.seed; },
          [](MatchOptions& o, std::uint64_t v) { o.align.seed = v; });

  py::class_<Tree>(m, "Tree")
      .def(py::init(&make_tree), py::arg("points"), py::arg("radii"),
           py::arg("children") = std::vector<std::pair<double, Tree>>{},
           "Main branch as an (N, 3) array with N radii; children as (s, Tree) pairs.")
      .def_property_readonly("points", [](const Tree& t) { return Points(t.main.points.transpose()); })
      .def_property_readonly("radii", [](const Tree& t) { return Eigen::VectorXd(t.main.radii); })
      .def_property_readonly("children",
                             [](const Tree& t) {
                               std::vector<std::pair<double, Tree>> out;
                               for (const auto& c : t.children) out.emplace_back(c.s, c.tree);
                               return out;
                             })
      .def_property_readonly("length", [](const Tree& t) { return t.main.length(); })
      .def("branch_count", &Tree::branch_count)
      .def("depth", &Tree::depth)
      .def("to_json", [](const Tree& t) { return io::format_tree_document({std::string(io::kFormatVersion), {}, t}); })
      .def_static("from_json", [](const std::string& text) { return io::parse_tree_document(text).tree; });

  m.def("load", &io::read_tree, py::arg("path"), "Read a tree document (.json) or SWC file (.swc).");
  m.def(
      "save",
      [](const std::filesystem::path& path, const Tree& tree) {
        io::write_tree_document(path, {std::string(io::kFormatVersion), {}, tree});
      },
      py::arg("path"), py::arg("tree"));
  m.def("parse_swc", &io::parse_swc, py::arg("text"));
  m.def("normalize", &normalize, py::arg("tree"), py::arg("scale_invariant") = true);
  m.def("rotate", &rotate_tree, py::arg("tree"), py::arg("rotation"));
  m.def("max_point_distance", &max_point_distance, py::arg("a"), py::arg("b"));

  py::class_<Registration>(m, "Registration")
      .def_readonly("distance", &Registration::distance)
      .def_property_readonly("rotation", [](const Registration& r) { return r.alignment.rotation; })
      .def_property_readonly("history", [](const Registration& r) { return r.alignment.history; })
      .def_property_readonly("correspondence", [](const Registration& r) { return to_python(io::correspondence_map(r)); })
      .def_property_readonly("summary", [](const Registration& r) { return to_python(io::alignment_summary(r)); });

  m.def(
      "register",
      [](const Tree& a, const Tree& b, const MetricWeights& w, const std::optional<MatchOptions>& o) {
        return invariant_distance(a, b, w, options_or_default(o));
      },
      py::arg("a"), py::arg("b"), py::arg("weights") = MetricWeights{}, py::arg("options") = py::none());
  m.def(
      "distance",
      [](const Tree& a, const Tree& b, const MetricWeights& w, const std::optional<MatchOptions>& o) {
        return invariant_distance(a, b, w, options_or_default(o)).distance;
      },
      py::arg("a"), py::arg("b"), py::arg("weights") = MetricWeights{}, py::arg("options") = py::none());

  py::class_<Geodesic>(m, "Geodesic")
      .def_readonly("length", &Geodesic::length)
      .def("at", &eval_geodesic, py::arg("t"))
      .def("frames", &sample_geodesic, py::arg("count"));
  m.def(
      "geodesic",
      [](const Tree& a, const Tree& b, const MetricWeights& w, const std::optional<MatchOptions>& o) {
        return geodesic(a, b, w, options_or_default(o));
      },
      py::arg("a"), py::arg("b"), py::arg("weights") = MetricWeights{}, py::arg("options") = py::none());

  m.def(
      "karcher_mean",
      [](const std::vector<Tree>& trees, const MetricWeights& w, const std::optional<MatchOptions>& o,
         std::size_t iterations) {
        KarcherOptions k;
        k.match = options_or_default(o);
        k.max_iterations = iterations;
        return strip_null_branches(srvft_to_tree(karcher_mean(trees, w, k).mean));
      },
      py::arg("trees"), py::arg("weights") = MetricWeights{}, py::arg("options") = py::none(),
      py::arg("iterations") = 20);

  py::class_<ShapeModel>(m, "ShapeModel")
      .def_readonly("eigenvalues", &ShapeModel::eigenvalues)
      .def_readonly("sample_count", &ShapeModel::sample_count)
      .def_property_readonly("mean", [](const ShapeModel& s) { return strip_null_branches(srvft_to_tree(s.mean)); })
      .def_property_readonly("cumulative_ratios", &cumulative_ratios)
      .def("leading_components", &leading_components, py::arg("threshold") = 0.99)
      .def(
          "synthesize",
          [](const ShapeModel& s, const Eigen::VectorXd& a) { return strip_null_branches(synthesize(s, a)); },
          py::arg("coefficients"))
      .def(
          "sample",
          [](const ShapeModel& s, std::size_t count, std::uint64_t seed, std::optional<double> clamp,
             std::size_t components) {
            const std::size_t k = components > 0 ? components : leading_components(s);
            std::vector<Tree> out;
            for (std::size_t i = 0; i < count; ++i)
              out.push_back(strip_null_branches(synthesize(s, sample_coefficients(k, seed, i, clamp))));
            return out;
          },
          py::arg("count") = 1, py::arg("seed") = 0, py::arg("clamp") = py::none(), py::arg("components") = 0)
      .def("save", [](const ShapeModel& s, const std::filesystem::path& p) { io::write_shape_model(p, s); })
      .def_static("load", &io::read_shape_model);
  m.def(
      "fit_pca",
      [](const std::vector<Tree>& trees, const MetricWeights& w, const std::optional<MatchOptions>& o) {
        KarcherOptions k;
        k.match = options_or_default(o);
        return fit_pca(trees, w, k);
      },
      py::arg("trees"), py::arg("weights") = MetricWeights{}, py::arg("options") = py::none());

  m.def("reflect", &reflect, py::arg("tree"), py::arg("normal"));
  m.def(
      "symmetrize",
      [](const Tree& t, const Vec3& normal, const MetricWeights& w, const std::optional<MatchOptions>& o) {
        const auto r = symmetrize(t, normal, w, options_or_default(o));
        return py::make_tuple(r.asymmetry, r.symmetric);
      },
      py::arg("tree"), py::arg("normal") = Vec3::UnitX(), py::arg("weights") = MetricWeights{},
      py::arg("options") = py::none());
}
