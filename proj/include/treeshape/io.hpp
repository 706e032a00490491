#pragma once

#include "treeshape/metric.hpp"
#include "treeshape/statistics.hpp"
#include "treeshape/tree.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace treeshape::io {

inline constexpr std::string_view kFormatVersion = "1.0";

struct TreeDocument {
  std::string version{kFormatVersion};
  std::string units;
  Tree tree;
};

/// Throws UnsupportedVersion on a different major version and SchemaError on
/// any structural violation.
TreeDocument parse_tree_document(std::string_view text);
TreeDocument read_tree_document(const std::filesystem::path& path);

/// Deterministic text with every number printed to 17 significant digits.
std::string format_tree_document(const TreeDocument& document);
void write_tree_document(const std::filesystem::path& path, const TreeDocument& document);

/// Standard 7-column SWC ("id type x y z radius parent"); '#' starts a comment.
/// The main branch is the longest root-to-tip path. Throws ParseError with the
/// offending line number.
Tree parse_swc(std::string_view text);
Tree read_swc(const std::filesystem::path& path);

/// Reads a TreeDocument (.json) or SWC (.swc) file.
Tree read_tree(const std::filesystem::path& path);

/// Pairs of matched branches as child-index paths from the root; null on the
/// side where the partner is a null branch.
nlohmann::json correspondence_map(const Registration& registration);

nlohmann::json alignment_summary(const Registration& registration);

/// frame_000.json ... plus index.json listing the t values.
void write_geodesic_frames(const std::filesystem::path& directory, const std::vector<Tree>& frames,
                           const std::string& units = {});
nlohmann::json multi_frame_document(const std::vector<Tree>& frames, const std::string& units = {});

nlohmann::json srvft_to_json(const SRVFT& srvft);
SRVFT srvft_from_json(const nlohmann::json& json);

nlohmann::json shape_model_to_json(const ShapeModel& model);
ShapeModel shape_model_from_json(const nlohmann::json& json);
void write_shape_model(const std::filesystem::path& path, const ShapeModel& model);
ShapeModel read_shape_model(const std::filesystem::path& path);

}  // namespace treeshape::io
