#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cskin/cli.hpp"
#include "cskin/decomposition.hpp"
#include "cskin/eval.hpp"
#include "temp_dir.hpp"

using namespace cskin;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string str(const std::filesystem::path& p) { return p.string(); }

}  // namespace

TEST_CASE("CLI pipeline: synth, decompose, evaluate, play, sparsify, report-memory, bench") {
  TempDir dir;
  const auto data = dir.path() / "synth";
  Run r = run({"synth", "--n", "120", "--s", "5", "--bones", "3", "--influences", "2", "--nnz", "15", "-o", str(data)});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto manifest = data / "manifest.json";
  REQUIRE(std::filesystem::exists(manifest));

  const auto csd = dir.path() / "fit.csd";
  const auto progress = dir.path() / "progress.csv";
  r = run({"decompose", str(manifest), "-o", str(csd), "--bones", "3", "--influences", "2", "--nnz", "15", "--iters",
           "300", "--seed", "7", "--progress", str(progress), "--progress-every", "50"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("MAE_mm=") != std::string::npos);
  {
    std::ifstream in(progress);
    std::string header;
    std::getline(in, header);
    CHECK(header == "iteration,loss,MAE,MXE");
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == 7);
  }

  const auto hist = dir.path() / "hist.csv";
  r = run({"evaluate", str(manifest), str(csd), "--hist", str(hist)});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("MXE_mm=") != std::string::npos);
  CHECK(std::filesystem::exists(hist));

  const auto anim = dir.path() / "anim.csv";
  write_animation_csv(anim, {{0, 0, 0, 0, 0}, {1, 0.5f, -0.5f, 2, 0}, {0.1f, 0.2f, 0.3f, 0.4f, 0.5f}});
  r = run({"play", str(csd), str(anim), "-o", str(dir.path() / "frames")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(std::filesystem::exists(dir.path() / "frames" / "frame_00002.csv"));
  r = run({"play", str(csd), str(anim), "-o", str(dir.path() / "objs"), "--format", "obj"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(read_obj(dir.path() / "objs" / "frame_00000.obj").vertices.size() == 120);

  const auto sparse = dir.path() / "sparse.csd";
  r = run({"sparsify", str(csd), "--t-thresh", "1", "--r-thresh", "1", "--unit", "cm", "-o", str(sparse)});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(load_decomposition(sparse).theta.nonzeros() <= load_decomposition(csd).theta.nonzeros());

  r = run({"report-memory", str(csd)});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("dense_bytes=360") != std::string::npos);

  r = run({"bench", str(csd), str(anim), "--reps", "2"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("flop_ratio=") != std::string::npos);
}

TEST_CASE("CLI HD preset and deterministic output") {
  TempDir dir;
  const auto data = dir.path() / "synth";
  REQUIRE(run({"synth", "--n", "60", "--s", "3", "--bones", "3", "--nnz", "9", "-o", str(data)}).code == 0);
  const auto manifest = str(data / "manifest.json");
  const auto a = dir.path() / "a.csd";
  const auto b = dir.path() / "b.csd";
  REQUIRE(run({"decompose", manifest, "-o", str(a), "--bones", "3", "--iters", "50", "--hd"}).code == 0);
  REQUIRE(run({"decompose", manifest, "-o", str(b), "--bones", "3", "--iters", "50", "--hd"}).code == 0);
  const Decomposition da = load_decomposition(a);
  CHECK(da.max_influences == 3);
  std::ifstream fa(a), fb(b);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
}

TEST_CASE("CLI errors") {
  SUBCASE("unknown flag exits 2 with usage") {
    const Run r = run({"report-memory", "x.csd", "--frobnicate"});
    CHECK(r.code == 2);
    CHECK(r.err.find("Usage") != std::string::npos);
  }
  SUBCASE("no subcommand") { CHECK(run({}).code == 2); }
  SUBCASE("module errors exit nonzero with a message") {
    const Run r = run({"report-memory", "/nonexistent/x.csd"});
    CHECK(r.code == 1);
    CHECK(r.err.find("MissingFile") != std::string::npos);
  }
  SUBCASE("help exits 0") {
    const Run r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("decompose") != std::string::npos);
  }
}
