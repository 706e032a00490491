#include "treeshape/io.hpp"

#include "treeshape/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace treeshape::io {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

void check_version(const json& doc) {
  if (!doc.is_object()) throw SchemaError("document must be a JSON object");
  const auto it = doc.find("version");
  if (it == doc.end() || !it->is_string()) throw SchemaError("missing version string");
  const auto v = it->get<std::string>();
  const auto major = v.substr(0, v.find('.'));
  if (major != kFormatVersion.substr(0, kFormatVersion.find('.')))
    throw UnsupportedVersion("unsupported format version " + v);
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object()) throw SchemaError("expected an object holding '" + std::string(key) + "'");
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& j, const char* what) {
  if (!j.is_number()) throw SchemaError(std::string(what) + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(std::string(what) + " must be finite");
  return v;
}

// ---- trees ----------------------------------------------------------------

Tree tree_from_json(const json& j, std::size_t depth) {
  if (depth > 64) throw SchemaError("tree nesting too deep");
  Tree tree;
  const json& main = field(j, "main");
  const json& points = field(main, "points");
  const json& radii = field(main, "radii");
  if (!points.is_array() || !radii.is_array()) throw SchemaError("points and radii must be arrays");
  if (points.size() != radii.size()) throw SchemaError("points and radii differ in length");
  if (points.size() < 2) throw SchemaError("a branch needs at least two points");
  const auto n = static_cast<Eigen::Index>(points.size());
  tree.main.points.resize(3, n);
  tree.main.radii.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const json& p = points[static_cast<std::size_t>(k)];
    if (!p.is_array() || p.size() != 3) throw SchemaError("every point needs three coordinates");
    for (Eigen::Index r = 0; r < 3; ++r) tree.main.points(r, k) = number(p[static_cast<std::size_t>(r)], "coordinate");
    tree.main.radii(k) = number(radii[static_cast<std::size_t>(k)], "radius");
    if (tree.main.radii(k) < 0.0) throw SchemaError("radii must be nonnegative");
  }
  if (j.contains("children")) {
    const json& kids = j["children"];
    if (!kids.is_array()) throw SchemaError("children must be an array");
    for (const json& c : kids) {
      const double s = number(field(c, "s"), "attachment parameter");
      if (s < 0.0 || s > 1.0) throw SchemaError("attachment parameter outside [0, 1]");
      tree.children.push_back({s, tree_from_json(field(c, "tree"), depth + 1)});
    }
  }
  return tree;
}

json tree_to_json(const Tree& tree) {
  json points = json::array();
  for (Eigen::Index k = 0; k < tree.main.points.cols(); ++k)
    points.push_back({tree.main.points(0, k), tree.main.points(1, k), tree.main.points(2, k)});
  json radii = json::array();
  for (Eigen::Index k = 0; k < tree.main.radii.size(); ++k) radii.push_back(tree.main.radii(k));
  json children = json::array();
  for (const auto& c : tree.children) children.push_back({{"s", c.s}, {"tree", tree_to_json(c.tree)}});
  return {{"main", {{"points", std::move(points)}, {"radii", std::move(radii)}}}, {"children", std::move(children)}};
}

void put_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void put_string(std::string& out, const std::string& s) { out += json(s).dump(); }

void put_indent(std::string& out, int level) { out.append(static_cast<std::size_t>(2 * level), ' '); }

void put_tree(std::string& out, const Tree& tree, int level) {
  out += "{\n";
  put_indent(out, level + 1);
  out += "\"main\": {\n";
  put_indent(out, level + 2);
  out += "\"points\": [";
  for (Eigen::Index k = 0; k < tree.main.points.cols(); ++k) {
    out += k == 0 ? "\n" : ",\n";
    put_indent(out, level + 3);
    out += '[';
    for (Eigen::Index r = 0; r < 3; ++r) {
      if (r > 0) out += ", ";
      put_number(out, tree.main.points(r, k));
    }
    out += ']';
  }
  out += "\n";
  put_indent(out, level + 2);
  out += "],\n";
  put_indent(out, level + 2);
  out += "\"radii\": [";
  for (Eigen::Index k = 0; k < tree.main.radii.size(); ++k) {
    if (k > 0) out += ", ";
    put_number(out, tree.main.radii(k));
  }
  out += "]\n";
  put_indent(out, level + 1);
  out += "},\n";
  put_indent(out, level + 1);
  out += "\"children\": [";
  for (std::size_t i = 0; i < tree.children.size(); ++i) {
    out += i == 0 ? "\n" : ",\n";
    put_indent(out, level + 2);
    out += "{\"s\": ";
    put_number(out, tree.children[i].s);
    out += ", \"tree\": ";
    put_tree(out, tree.children[i].tree, level + 2);
    out += '}';
  }
  if (!tree.children.empty()) {
    out += "\n";
    put_indent(out, level + 1);
  }
  out += "]\n";
  put_indent(out, level);
  out += '}';
}

}  // namespace

TreeDocument parse_tree_document(std::string_view text) {
  const json doc = parse_json(text);
  check_version(doc);
  TreeDocument out;
  out.version = doc["version"].get<std::string>();
  if (doc.contains("units")) {
    if (!doc["units"].is_string()) throw SchemaError("units must be a string");
    out.units = doc["units"].get<std::string>();
  }
  out.tree = tree_from_json(field(doc, "tree"), 0);
  try {
    out.tree.validate();
  } catch (const DataError& e) {
    throw SchemaError(e.what());
  }
  return out;
}

TreeDocument read_tree_document(const std::filesystem::path& path) { return parse_tree_document(read_file(path)); }

std::string format_tree_document(const TreeDocument& document) {
  if (!document.tree.main.points.allFinite() || !document.tree.main.radii.allFinite())
    throw SchemaError("cannot serialize non-finite values");
  std::string out = "{\n  \"version\": ";
  put_string(out, document.version);
  out += ",\n  \"units\": ";
  put_string(out, document.units);
  out += ",\n  \"tree\": ";
  put_tree(out, document.tree, 1);
  out += "\n}\n";
  return out;
}

void write_tree_document(const std::filesystem::path& path, const TreeDocument& document) {
  write_file(path, format_tree_document(document));
}

Tree read_tree(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".swc" || ext == ".SWC") return read_swc(path);
  return read_tree_document(path).tree;
}

Tree read_swc(const std::filesystem::path& path) { return parse_swc(read_file(path)); }

// ---- correspondences --------------------------------------------------------

namespace {

json path_json(const std::vector<std::size_t>& path) {
  json out = json::array();
  for (std::size_t i : path) out.push_back(i);
  return out;
}

void collect_pairs(const Tree& a, const Tree& b, const Correspondence& corr, std::vector<std::size_t>& pa,
                   std::vector<std::size_t>& pb, json& pairs) {
  const bool null_a = a.main.is_null();
  const bool null_b = b.main.is_null();
  if (!null_a || !null_b) {
    json entry;
    entry["color"] = pairs.size();
    entry["tree1"] = null_a ? json(nullptr) : path_json(pa);
    entry["tree2"] = null_b ? json(nullptr) : path_json(pb);
    pairs.push_back(std::move(entry));
  }
  for (std::size_t i = 0; i < corr.permutation.size(); ++i) {
    const std::size_t j = corr.permutation[i];
    pa.push_back(i);
    pb.push_back(j);
    collect_pairs(a.children.at(i).tree, b.children.at(j).tree, corr.children.at(i), pa, pb, pairs);
    pa.pop_back();
    pb.pop_back();
  }
}

std::size_t count_null(const Tree& t) {
  std::size_t n = t.main.is_null() ? 1 : 0;
  for (const auto& c : t.children) n += count_null(c.tree);
  return n;
}

}  // namespace

json correspondence_map(const Registration& registration) {
  json pairs = json::array();
  std::vector<std::size_t> pa, pb;
  collect_pairs(registration.source_tree, registration.target_tree, registration.alignment.correspondence, pa, pb,
                pairs);
  return {{"version", std::string(kFormatVersion)}, {"pairs", std::move(pairs)}};
}

json alignment_summary(const Registration& registration) {
  const auto& a = registration.alignment;
  json rotation = json::array();
  for (int r = 0; r < 3; ++r) rotation.push_back({a.rotation(r, 0), a.rotation(r, 1), a.rotation(r, 2)});
  return {{"version", std::string(kFormatVersion)},
          {"distance", registration.distance},
          {"matching_distance", a.distance},
          {"rotation", std::move(rotation)},
          {"history", a.history},
          {"branches", registration.source_tree.branch_count()},
          {"null_branches_tree1", count_null(registration.source_tree)},
          {"null_branches_tree2", count_null(registration.target_tree)}};
}

// ---- geodesic frames --------------------------------------------------------

namespace {

double frame_t(std::size_t k, std::size_t count) {
  return k + 1 == count ? 1.0 : static_cast<double>(k) / static_cast<double>(count - 1);
}

}  // namespace

void write_geodesic_frames(const std::filesystem::path& directory, const std::vector<Tree>& frames,
                           const std::string& units) {
  if (frames.size() < 2) throw DomainError("a geodesic needs at least two frames");
  std::filesystem::create_directories(directory);
  json index = json::array();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%03zu.json", k);
    write_tree_document(directory / name, {std::string(kFormatVersion), units, frames[k]});
    index.push_back({{"file", name}, {"t", frame_t(k, frames.size())}});
  }
  const json doc = {{"version", std::string(kFormatVersion)}, {"frames", std::move(index)}};
  write_file(directory / "index.json", doc.dump(2) + "\n");
}

json multi_frame_document(const std::vector<Tree>& frames, const std::string& units) {
  if (frames.size() < 2) throw DomainError("a geodesic needs at least two frames");
  json list = json::array();
  for (std::size_t k = 0; k < frames.size(); ++k)
    list.push_back({{"t", frame_t(k, frames.size())}, {"tree", tree_to_json(frames[k])}});
  return {{"version", std::string(kFormatVersion)}, {"units", units}, {"frames", std::move(list)}};
}

// ---- representations and models ---------------------------------------------

json srvft_to_json(const SRVFT& srvft) {
  json q = json::array();
  for (Eigen::Index k = 0; k < srvft.q0.q.cols(); ++k)
    q.push_back({srvft.q0.q(0, k), srvft.q0.q(1, k), srvft.q0.q(2, k), srvft.q0.q(3, k)});
  json children = json::array();
  for (const auto& c : srvft.children) children.push_back({{"s", c.s}, {"tree", srvft_to_json(c.tree)}});
  return {{"q", std::move(q)},
          {"c", srvft.q0.c},
          {"start_thickness", srvft.q0.start_thickness},
          {"origin", {srvft.origin.x(), srvft.origin.y(), srvft.origin.z()}},
          {"children", std::move(children)}};
}

SRVFT srvft_from_json(const json& j) {
  SRVFT out;
  const json& q = field(j, "q");
  if (!q.is_array() || q.size() < 2) throw SchemaError("q needs at least two samples");
  out.q0.q.resize(4, static_cast<Eigen::Index>(q.size()));
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (!q[k].is_array() || q[k].size() != 4) throw SchemaError("every q sample needs four components");
    for (std::size_t r = 0; r < 4; ++r)
      out.q0.q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = number(q[k][r], "q component");
  }
  out.q0.c = number(field(j, "c"), "thickness weight");
  out.q0.start_thickness = number(field(j, "start_thickness"), "start thickness");
  const json& origin = field(j, "origin");
  if (!origin.is_array() || origin.size() != 3) throw SchemaError("origin needs three coordinates");
  for (std::size_t r = 0; r < 3; ++r) out.origin(static_cast<Eigen::Index>(r)) = number(origin[r], "origin");
  const json& kids = field(j, "children");
  if (!kids.is_array()) throw SchemaError("children must be an array");
  for (const json& c : kids) out.children.push_back({number(field(c, "s"), "attachment parameter"), srvft_from_json(field(c, "tree"))});
  return out;
}

json shape_model_to_json(const ShapeModel& model) {
  json vectors = json::array();
  for (Eigen::Index i = 0; i < model.eigenvectors.cols(); ++i)
    vectors.push_back(std::vector<double>(model.eigenvectors.col(i).data(),
                                          model.eigenvectors.col(i).data() + model.eigenvectors.rows()));
  return {{"version", std::string(kFormatVersion)},
          {"weights",
           {{"lambda_m", model.weights.lambda_m}, {"lambda_s", model.weights.lambda_s}, {"lambda_p", model.weights.lambda_p}}},
          {"samples_per_branch", model.mean.q0.size()},
          {"thickness_weight", model.mean.q0.c},
          {"sample_count", model.sample_count},
          {"mean", srvft_to_json(model.mean)},
          {"eigenvalues", std::vector<double>(model.eigenvalues.data(), model.eigenvalues.data() + model.eigenvalues.size())},
          {"eigenvectors", std::move(vectors)},
          {"cumulative_ratios", cumulative_ratios(model)}};
}

ShapeModel shape_model_from_json(const json& j) {
  check_version(j);
  ShapeModel model;
  const json& w = field(j, "weights");
  model.weights = {number(field(w, "lambda_m"), "lambda_m"), number(field(w, "lambda_s"), "lambda_s"),
                   number(field(w, "lambda_p"), "lambda_p")};
  try {
    model.weights.validate();
  } catch (const NumericalError& e) {
    throw SchemaError(e.what());
  }
  const json& count = field(j, "sample_count");
  if (!count.is_number_unsigned()) throw SchemaError("sample_count must be a nonnegative integer");
  model.sample_count = count.get<std::size_t>();
  model.mean = srvft_from_json(field(j, "mean"));

  const json& values = field(j, "eigenvalues");
  const json& vectors = field(j, "eigenvectors");
  if (!values.is_array() || !vectors.is_array() || values.size() != vectors.size())
    throw SchemaError("eigenvalues and eigenvectors differ in count");
  const auto dim = flatten(model.mean, model.weights).size();
  model.eigenvalues.resize(static_cast<Eigen::Index>(values.size()));
  model.eigenvectors.resize(dim, static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    model.eigenvalues(static_cast<Eigen::Index>(i)) = number(values[i], "eigenvalue");
    if (!vectors[i].is_array() || static_cast<Eigen::Index>(vectors[i].size()) != dim)
      throw SchemaError("eigenvector length does not match the mean's layout");
    for (Eigen::Index r = 0; r < dim; ++r)
      model.eigenvectors(r, static_cast<Eigen::Index>(i)) = number(vectors[i][static_cast<std::size_t>(r)], "eigenvector entry");
  }
  return model;
}

void write_shape_model(const std::filesystem::path& path, const ShapeModel& model) {
  write_file(path, shape_model_to_json(model).dump(1) + "\n");
}

ShapeModel read_shape_model(const std::filesystem::path& path) {
  return shape_model_from_json(parse_json(read_file(path)));
}

}  // namespace treeshape::io
