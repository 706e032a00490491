#include "treeshape/errors.hpp"
#include "treeshape/io.hpp"
#include "treeshape/skeleton.hpp"

#include <charconv>
#include <sstream>
#include <unordered_map>

namespace treeshape::io {

namespace {

struct Record {
  long long id;
  Vec3 position;
  double radius;
  long long parent;
  std::size_t line;
};

template <typename T>
T parse_field(const std::string& token, std::size_t line, const char* what) {
  T value{};
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ParseError(line, std::string("invalid ") + what + " '" + token + "'");
  return value;
}

}  // namespace

Tree parse_swc(std::string_view text) {
  std::vector<Record> records;
  std::unordered_map<long long, std::size_t> index;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream fields(raw);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    if (tokens.size() != 7)
      throw ParseError(line, "expected 7 fields (id type x y z radius parent), found " + std::to_string(tokens.size()));
    Record r{};
    r.id = parse_field<long long>(tokens[0], line, "id");
    parse_field<long long>(tokens[1], line, "type");
    for (int k = 0; k < 3; ++k) r.position(k) = parse_field<double>(tokens[static_cast<std::size_t>(2 + k)], line, "coordinate");
    r.radius = parse_field<double>(tokens[5], line, "radius");
    r.parent = parse_field<long long>(tokens[6], line, "parent");
    r.line = line;
    if (!r.position.allFinite() || !std::isfinite(r.radius) || r.radius < 0.0)
      throw ParseError(line, "coordinates must be finite and the radius nonnegative");
    if (!index.emplace(r.id, records.size()).second) throw ParseError(line, "duplicate id " + std::to_string(r.id));
    records.push_back(r);
  }
  if (records.empty()) throw ParseError(line, "no SWC records");

  SkeletonGraph graph;
  std::size_t roots = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    graph.positions.push_back(r.position);
    graph.radii.push_back(r.radius);
    if (r.parent < 0) {
      if (++roots > 1) throw ParseError(r.line, "more than one root record");
      graph.root = i;
      continue;
    }
    const auto it = index.find(r.parent);
    if (it == index.end()) throw ParseError(r.line, "missing parent " + std::to_string(r.parent));
    if (it->second == i) throw ParseError(r.line, "record is its own parent");
    graph.edges.emplace_back(it->second, i);
  }

  // Every record must reach the root by following parents.
  std::vector<char> state(records.size(), 0);  // 0 unknown, 1 on stack, 2 reaches root
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::vector<std::size_t> chain;
    std::size_t v = i;
    while (state[v] == 0 && records[v].parent >= 0) {
      state[v] = 1;
      chain.push_back(v);
      v = index.at(records[v].parent);
    }
    if (state[v] == 1) throw ParseError(records[v].line, "parent chain forms a cycle");
    if (roots == 0) throw ParseError(records[i].line, "no root record (parent -1)");
    for (std::size_t c : chain) state[c] = 2;
    state[v] = 2;
  }

  try {
    return select_main_branch(graph, MainBranchRule::Neuronal);
  } catch (const DegenerateTree& e) {
    throw ParseError(records.front().line, e.what());
  }
}

}  // namespace treeshape::io
