#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cskin/transform_algebra.hpp"

namespace cskin {

enum class Unit { mm, cm, m };

/// Millimeters per model unit.
double unit_scale_to_mm(Unit unit);
Unit parse_unit(std::string_view name);
std::string_view unit_name(Unit unit);

using Edge = std::pair<std::uint32_t, std::uint32_t>;

/// Rest pose plus S delta shapes (shape minus rest), all in model units.
struct BlendshapeModel {
  std::vector<Vec3> rest;
  std::vector<std::vector<Vec3>> deltas;  // [k][i]
  std::vector<Edge> edges;                // unordered pairs stored with first < second
  double unit_scale_to_mm = 1.0;

  std::size_t num_vertices() const { return rest.size(); }
  std::size_t num_shapes() const { return deltas.size(); }

  /// Throws DimensionMismatch / IndexOutOfRange / InvalidArgument if any invariant fails.
  void validate() const;

  /// Length of the rest-pose bounding-box diagonal in model units.
  double bbox_diagonal() const;
};

struct ShapeManifest {
  std::filesystem::path rest_path;
  std::vector<std::filesystem::path> shape_paths;
  Unit unit = Unit::mm;

  double unit_scale_to_mm() const { return cskin::unit_scale_to_mm(unit); }
};

struct ObjMesh {
  std::vector<Vec3> vertices;
  std::vector<std::vector<std::uint32_t>> faces;  // zero-based
};

/// Reads the `v` and `f` records of an OBJ file; every other record is ignored.
ObjMesh read_obj(const std::filesystem::path& path);
ObjMesh parse_obj(std::string_view text, const std::string& source_name = "<memory>");
void write_obj(const std::filesystem::path& path, std::span<const Vec3> vertices,
               std::span<const std::vector<std::uint32_t>> faces = {});

/// Boundary edges of every face, deduplicated, sorted.
std::vector<Edge> edges_from_faces(const std::vector<std::vector<std::uint32_t>>& faces,
                                   std::size_t num_vertices);

ShapeManifest load_manifest(const std::filesystem::path& path);
ShapeManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir);
void write_manifest(const std::filesystem::path& path, const ShapeManifest& manifest);

BlendshapeModel load_blendshape_set(const ShapeManifest& manifest);

/// Absolute positions of shape k (rest + delta).
std::vector<Vec3> absolute_shape(const BlendshapeModel& model, std::size_t k);

/// Direct delta-blendshape evaluation: rest + sum_k c_k delta_k.
std::vector<Vec3> blend_shapes(const BlendshapeModel& model, std::span<const double> c);

}  // namespace cskin
