#include <doctest.h>

#include "cskin/eval.hpp"
#include "cskin/model_io.hpp"
#include "temp_dir.hpp"

using namespace cskin;

namespace {

const char* kTriangle =
    "# unit triangle\n"
    "o tri\n"
    "v 0 0 0\n"
    "v 1 0 0\n"
    "vn 0 0 1\n"
    "v 0 1 0\n"
    "vt 0 0\n"
    "f 1/1/1 2/2/1 3/3/1\n";

}  // namespace

TEST_CASE("OBJ subset keeps only v and f records") {
  const ObjMesh mesh = parse_obj(kTriangle);
  REQUIRE(mesh.vertices.size() == 3);
  REQUIRE(mesh.faces.size() == 1);
  CHECK(mesh.faces[0] == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(mesh.vertices[1] == Vec3{1.0, 0.0, 0.0});
}

TEST_CASE("OBJ negative indices and malformed input") {
  const ObjMesh mesh = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf -3 -2 -1\n");
  CHECK(mesh.faces[0] == std::vector<std::uint32_t>{1, 2, 3});
  CHECK_THROWS_AS(parse_obj("v 0 0\n"), Error);
  CHECK_THROWS_AS(parse_obj("v 0 0 x\n"), Error);
  CHECK_THROWS_AS(parse_obj("v 0 0 0\nf 1 2 3\n"), Error);
}

TEST_CASE("edges from faces are deduplicated unordered pairs") {
  const std::vector<std::vector<std::uint32_t>> faces{{0, 1, 2}, {2, 1, 3}, {0, 2, 3, 4}};
  const auto edges = edges_from_faces(faces, 5);
  CHECK(edges.size() <= 3 * faces.size() + 1);
  for (const auto& [a, b] : edges) CHECK(a < b);
  const std::vector<Edge> expected{{0, 1}, {0, 2}, {0, 4}, {1, 2}, {1, 3}, {2, 3}, {3, 4}};
  CHECK(edges == expected);
}

TEST_CASE("manifest parsing") {
  TempDir dir;
  SUBCASE("rest + two shapes, unit cm") {
    const auto path = dir.write("m.json", R"({"rest": "rest.obj", "shapes": ["a.obj", "b.obj"], "unit": "cm"})");
    const ShapeManifest m = load_manifest(path);
    CHECK(m.shape_paths.size() == 2);
    CHECK(m.shape_paths[0] == dir.path() / "a.obj");
    CHECK(m.shape_paths[1] == dir.path() / "b.obj");
    CHECK(m.unit_scale_to_mm() == 10.0);
  }
  SUBCASE("zero shapes") {
    const auto path = dir.write("m.json", R"({"rest": "rest.obj", "shapes": []})");
    try {
      load_manifest(path);
      FAIL("expected EmptyShapeList");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EmptyShapeList);
    }
  }
  SUBCASE("missing file") {
    try {
      load_manifest(dir.path() / "nope.json");
      FAIL("expected MissingFile");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MissingFile);
    }
  }
  SUBCASE("not JSON") {
    const auto path = dir.write("m.json", "{rest: ");
    try {
      load_manifest(path);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ParseError);
    }
  }
  SUBCASE("duplicate shape paths and bad unit") {
    CHECK_THROWS_AS(load_manifest(dir.write("d.json", R"({"rest": "r.obj", "shapes": ["a.obj", "a.obj"]})")), Error);
    CHECK_THROWS_AS(load_manifest(dir.write("u.json", R"({"rest": "r.obj", "shapes": ["a.obj"], "unit": "in"})")),
                    Error);
  }
}

TEST_CASE("load_blendshape_set computes deltas against the rest pose") {
  TempDir dir;
  dir.write("rest.obj", kTriangle);
  dir.write("same.obj", kTriangle);
  dir.write("moved.obj", "v 1 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  dir.write("short.obj", "v 0 0 0\nv 1 0 0\n");

  SUBCASE("identity and single moved vertex") {
    const auto manifest =
        load_manifest(dir.write("m.json", R"({"rest": "rest.obj", "shapes": ["same.obj", "moved.obj"]})"));
    const BlendshapeModel model = load_blendshape_set(manifest);
    REQUIRE(model.num_shapes() == 2);
    for (const auto& d : model.deltas[0]) CHECK(d == Vec3{0.0, 0.0, 0.0});
    CHECK(model.deltas[1][0] == Vec3{1.0, 0.0, 0.0});
    CHECK(model.deltas[1][1] == Vec3{0.0, 0.0, 0.0});
    CHECK(model.deltas[1][2] == Vec3{0.0, 0.0, 0.0});
    CHECK(model.edges.size() == 3);
    CHECK(model.unit_scale_to_mm == 1.0);
  }
  SUBCASE("vertex count mismatch") {
    const auto manifest = load_manifest(dir.write("m.json", R"({"rest": "rest.obj", "shapes": ["short.obj"]})"));
    try {
      load_blendshape_set(manifest);
      FAIL("expected VertexCountMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::VertexCountMismatch);
    }
  }
  SUBCASE("bad mesh") {
    dir.write("bad.obj", "v 0 zero 0\n");
    const auto manifest = load_manifest(dir.write("m.json", R"({"rest": "rest.obj", "shapes": ["bad.obj"]})"));
    try {
      load_blendshape_set(manifest);
      FAIL("expected MeshParseError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MeshParseError);
    }
  }
}

TEST_CASE("writing absolute shapes and reloading reproduces the model") {
  SynthParams params;
  params.vertices = 60;
  params.shapes = 3;
  params.nnz = 10;
  const SynthResult synth = synth_blendshapes(params);
  TempDir dir;
  const auto manifest_path = write_synth(dir.path(), synth, Unit::cm);
  const BlendshapeModel loaded = load_blendshape_set(load_manifest(manifest_path));
  REQUIRE(loaded.num_vertices() == synth.model.num_vertices());
  REQUIRE(loaded.num_shapes() == synth.model.num_shapes());
  CHECK(loaded.edges == synth.model.edges);
  CHECK(loaded.unit_scale_to_mm == 10.0);
  for (std::size_t k = 0; k < loaded.num_shapes(); ++k) {
    const auto original = absolute_shape(synth.model, k);
    const auto reloaded = absolute_shape(loaded, k);
    for (std::size_t i = 0; i < original.size(); ++i) {
      for (int d = 0; d < 3; ++d) CHECK(reloaded[i][d] == doctest::Approx(original[i][d]).epsilon(1e-12));
    }
  }
}

TEST_CASE("model validation rejects bad edges") {
  BlendshapeModel model;
  model.rest = {{0, 0, 0}, {1, 0, 0}};
  model.deltas = {{{0, 0, 0}, {0, 0, 0}}};
  model.edges = {{0, 1}};
  CHECK_NOTHROW(model.validate());
  model.edges = {{0, 0}};
  CHECK_THROWS_AS(model.validate(), Error);
  model.edges = {{0, 1}, {1, 0}};
  CHECK_THROWS_AS(model.validate(), Error);
  model.edges = {{0, 2}};
  CHECK_THROWS_AS(model.validate(), Error);
  model.edges.clear();
  model.deltas[0].pop_back();
  CHECK_THROWS_AS(model.validate(), Error);
}
