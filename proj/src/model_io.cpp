#include "cskin/model_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cskin {

namespace fs = std::filesystem;

double unit_scale_to_mm(Unit unit) {
  switch (unit) {
    case Unit::mm: return 1.0;
    case Unit::cm: return 10.0;
    case Unit::m: return 1000.0;
  }
  return 1.0;
}

Unit parse_unit(std::string_view name) {
  if (name == "mm") return Unit::mm;
  if (name == "cm") return Unit::cm;
  if (name == "m") return Unit::m;
  throw Error(ErrorKind::ParseError, "unknown unit '" + std::string(name) + "' (expected mm, cm or m)");
}

std::string_view unit_name(Unit unit) {
  switch (unit) {
    case Unit::mm: return "mm";
    case Unit::cm: return "cm";
    case Unit::m: return "m";
  }
  return "mm";
}

void BlendshapeModel::validate() const {
  const std::size_t n = rest.size();
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    if (deltas[k].size() != n) {
      throw Error(ErrorKind::DimensionMismatch, "delta shape " + std::to_string(k) + " has " +
                                                    std::to_string(deltas[k].size()) + " vertices, expected " +
                                                    std::to_string(n));
    }
  }
  std::set<Edge> seen;
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n) throw Error(ErrorKind::IndexOutOfRange, "edge index out of range");
    if (a == b) throw Error(ErrorKind::InvalidArgument, "self-edge on vertex " + std::to_string(a));
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate edge " + std::to_string(a) + "-" + std::to_string(b));
    }
  }
  if (!(unit_scale_to_mm > 0.0)) throw Error(ErrorKind::InvalidArgument, "unit_scale_to_mm must be positive");
}

double BlendshapeModel::bbox_diagonal() const {
  if (rest.empty()) return 0.0;
  Vec3 lo = rest.front();
  Vec3 hi = rest.front();
  for (const auto& v : rest) {
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::min(lo[d], v[d]);
      hi[d] = std::max(hi[d], v[d]);
    }
  }
  return norm({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
}

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    std::size_t end = pos;
    while (end < s.size() && s[end] != ' ' && s[end] != '\t') ++end;
    if (end > pos) out.push_back(s.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

double parse_double(std::string_view token, const std::string& where) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(ErrorKind::MeshParseError, where + ": bad number '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

ObjMesh parse_obj(std::string_view text, const std::string& source_name) {
  ObjMesh mesh;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    const auto line = trim(text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos));
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto tokens = split_ws(line);
    const std::string where = source_name + ":" + std::to_string(line_no);
    if (tokens[0] == "v") {
      if (tokens.size() < 4) throw Error(ErrorKind::MeshParseError, where + ": vertex needs 3 coordinates");
      mesh.vertices.push_back(
          {parse_double(tokens[1], where), parse_double(tokens[2], where), parse_double(tokens[3], where)});
    } else if (tokens[0] == "f") {
      if (tokens.size() < 4) throw Error(ErrorKind::MeshParseError, where + ": face needs at least 3 vertices");
      std::vector<std::uint32_t> face;
      for (std::size_t t = 1; t < tokens.size(); ++t) {
        const auto index_token = tokens[t].substr(0, tokens[t].find('/'));
        long long index = 0;
        const auto [ptr, ec] =
            std::from_chars(index_token.data(), index_token.data() + index_token.size(), index);
        if (ec != std::errc() || ptr != index_token.data() + index_token.size() || index == 0) {
          throw Error(ErrorKind::MeshParseError, where + ": bad face index '" + std::string(tokens[t]) + "'");
        }
        // Negative indices are relative to the vertices read so far.
        const long long resolved =
            index > 0 ? index - 1 : static_cast<long long>(mesh.vertices.size()) + index;
        if (resolved < 0) throw Error(ErrorKind::MeshParseError, where + ": face index out of range");
        face.push_back(static_cast<std::uint32_t>(resolved));
      }
      mesh.faces.push_back(std::move(face));
    }
  }
  for (const auto& face : mesh.faces) {
    for (auto idx : face) {
      if (idx >= mesh.vertices.size()) {
        throw Error(ErrorKind::MeshParseError, source_name + ": face references vertex " + std::to_string(idx + 1) +
                                                   " but only " + std::to_string(mesh.vertices.size()) +
                                                   " vertices exist");
      }
    }
  }
  return mesh;
}

ObjMesh read_obj(const fs::path& path) { return parse_obj(read_text(path), path.string()); }

void write_obj(const fs::path& path, std::span<const Vec3> vertices,
               std::span<const std::vector<std::uint32_t>> faces) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write '" + path.string() + "'");
  out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& v : vertices) out << "v " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  for (const auto& face : faces) {
    out << 'f';
    for (auto idx : face) out << ' ' << idx + 1;
    out << '\n';
  }
}

std::vector<Edge> edges_from_faces(const std::vector<std::vector<std::uint32_t>>& faces,
                                   std::size_t num_vertices) {
  std::vector<Edge> edges;
  for (const auto& face : faces) {
    for (std::size_t a = 0; a < face.size(); ++a) {
      const auto u = face[a];
      const auto v = face[(a + 1) % face.size()];
      if (u == v) continue;
      if (u >= num_vertices || v >= num_vertices) {
        throw Error(ErrorKind::IndexOutOfRange, "face references vertex outside the mesh");
      }
      edges.emplace_back(std::min(u, v), std::max(u, v));
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

ShapeManifest parse_manifest(std::string_view json_text, const fs::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "manifest must be a JSON object");
  if (!doc.contains("rest") || !doc["rest"].is_string()) {
    throw Error(ErrorKind::ParseError, "manifest needs a string field 'rest'");
  }
  if (!doc.contains("shapes") || !doc["shapes"].is_array()) {
    throw Error(ErrorKind::ParseError, "manifest needs an array field 'shapes'");
  }
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  ShapeManifest manifest;
  manifest.rest_path = resolve(doc["rest"].get<std::string>());
  for (const auto& entry : doc["shapes"]) {
    if (!entry.is_string()) throw Error(ErrorKind::ParseError, "manifest 'shapes' entries must be strings");
    manifest.shape_paths.push_back(resolve(entry.get<std::string>()));
  }
  if (manifest.shape_paths.empty()) throw Error(ErrorKind::EmptyShapeList, "manifest lists no shapes");
  std::set<fs::path> distinct(manifest.shape_paths.begin(), manifest.shape_paths.end());
  if (distinct.size() != manifest.shape_paths.size()) {
    throw Error(ErrorKind::ParseError, "manifest lists the same shape path twice");
  }
  if (doc.contains("unit")) {
    if (!doc["unit"].is_string()) throw Error(ErrorKind::ParseError, "manifest 'unit' must be a string");
    manifest.unit = parse_unit(doc["unit"].get<std::string>());
  }
  return manifest;
}

ShapeManifest load_manifest(const fs::path& path) {
  return parse_manifest(read_text(path), path.parent_path());
}

void write_manifest(const fs::path& path, const ShapeManifest& manifest) {
  const fs::path base = path.parent_path();
  auto rel = [&](const fs::path& p) { return p.lexically_relative(base).generic_string(); };
  nlohmann::json doc;
  doc["rest"] = rel(manifest.rest_path);
  doc["shapes"] = nlohmann::json::array();
  for (const auto& p : manifest.shape_paths) doc["shapes"].push_back(rel(p));
  doc["unit"] = std::string(unit_name(manifest.unit));
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

BlendshapeModel load_blendshape_set(const ShapeManifest& manifest) {
  const ObjMesh rest = read_obj(manifest.rest_path);
  BlendshapeModel model;
  model.rest = rest.vertices;
  model.unit_scale_to_mm = manifest.unit_scale_to_mm();
  model.edges = edges_from_faces(rest.faces, rest.vertices.size());
  model.deltas.reserve(manifest.shape_paths.size());
  for (const auto& path : manifest.shape_paths) {
    const ObjMesh shape = read_obj(path);
    if (shape.vertices.size() != rest.vertices.size()) {
      throw Error(ErrorKind::VertexCountMismatch, path.string() + ": expected " +
                                                      std::to_string(rest.vertices.size()) + " vertices, got " +
                                                      std::to_string(shape.vertices.size()));
    }
    std::vector<Vec3> delta(shape.vertices.size());
    for (std::size_t i = 0; i < delta.size(); ++i) {
      for (int d = 0; d < 3; ++d) delta[i][d] = shape.vertices[i][d] - rest.vertices[i][d];
    }
    model.deltas.push_back(std::move(delta));
  }
  model.validate();
  return model;
}

std::vector<Vec3> absolute_shape(const BlendshapeModel& model, std::size_t k) {
  std::vector<Vec3> out(model.rest);
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (int d = 0; d < 3; ++d) out[i][d] += model.deltas.at(k)[i][d];
  }
  return out;
}

std::vector<Vec3> blend_shapes(const BlendshapeModel& model, std::span<const double> c) {
  if (c.size() != model.num_shapes()) {
    throw Error(ErrorKind::LengthMismatch, "expected " + std::to_string(model.num_shapes()) + " blendweights, got " +
                                               std::to_string(c.size()));
  }
  std::vector<Vec3> out(model.rest);
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c[k] == 0.0) continue;
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (int d = 0; d < 3; ++d) out[i][d] += c[k] * model.deltas[k][i][d];
    }
  }
  return out;
}

}  // namespace cskin
