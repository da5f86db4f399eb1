#include <doctest.h>

#include <numeric>
#include <sstream>

#include "cskin/decomposer.hpp"
#include "cskin/eval.hpp"

using namespace cskin;

namespace {

/// Single-bone decomposition with zero transforms: residuals equal the deltas.
Decomposition identity_decomposition(const BlendshapeModel& model) {
  WeightMatrix w(model.num_vertices(), 1);
  for (std::size_t i = 0; i < model.num_vertices(); ++i) w(i, 0) = 1.0;
  return make_decomposition(model.rest, w, TransformParams(model.num_shapes(), 1), 1);
}

}  // namespace

TEST_CASE("evaluate") {
  BlendshapeModel model;
  model.rest = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  model.deltas = {{{1, 0, 0}, {0, 2, 0}, {0, 0, 3}}};

  SUBCASE("residual norms 1, 2, 3") {
    const ErrorStats stats = evaluate(model, identity_decomposition(model));
    CHECK(stats.mae == doctest::Approx(2.0));
    CHECK(stats.mxe == 3.0);
    CHECK(stats.histogram.counts.size() == kHistogramBins);
    CHECK(std::accumulate(stats.histogram.counts.begin(), stats.histogram.counts.end(), std::size_t{0}) == 3);
    CHECK(stats.histogram.counts.back() == 1);
  }
  SUBCASE("reports millimeters") {
    model.unit_scale_to_mm = 10.0;
    const ErrorStats stats = evaluate(model, identity_decomposition(model));
    CHECK(stats.mae == doctest::Approx(20.0));
    CHECK(stats.mxe == doctest::Approx(30.0));
  }
  SUBCASE("zero residual") {
    for (auto& d : model.deltas[0]) d = {0, 0, 0};
    const ErrorStats stats = evaluate(model, identity_decomposition(model));
    CHECK(stats.mae == 0.0);
    CHECK(stats.mxe == 0.0);
    CHECK(stats.histogram.counts[0] == 3);
  }
  SUBCASE("dimension mismatch") {
    BlendshapeModel other = model;
    other.deltas.push_back(other.deltas[0]);
    CHECK_THROWS_AS(evaluate(other, identity_decomposition(model)), Error);
  }
}

TEST_CASE("evaluate on a fitted synthetic model") {
  SynthParams params;
  params.vertices = 100;
  params.shapes = 4;
  params.nnz = 16;
  const SynthResult synth = synth_blendshapes(params);
  SolverConfig config;
  config.bones = 4;
  config.influences = 2;
  config.nnz_budget = 16;
  config.iterations = 200;
  const Decomposition decomp = decompose(synth.model, config);

  const ErrorStats a = evaluate(synth.model, decomp);
  const ErrorStats b = evaluate(synth.model, decomp);
  CHECK(a.mae == b.mae);
  CHECK(a.mxe == b.mxe);
  CHECK(a.histogram.counts == b.histogram.counts);
  CHECK(a.mae <= a.mxe);

  const std::size_t pairs = 100 * 4;
  CHECK(std::accumulate(a.histogram.counts.begin(), a.histogram.counts.end(), std::size_t{0}) == pairs);
  double weighted = 0.0;
  for (std::size_t bin = 0; bin < kHistogramBins; ++bin) {
    weighted += static_cast<double>(a.histogram.counts[bin]) * 0.5 * (a.histogram.edges[bin] + a.histogram.edges[bin + 1]);
  }
  const double width = a.histogram.edges[1] - a.histogram.edges[0];
  CHECK(std::abs(weighted - static_cast<double>(pairs) * a.mae) <= static_cast<double>(pairs) * width);

  std::ostringstream csv;
  write_histogram_csv(csv, a.histogram);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "bin_lo,bin_hi,count");
  std::size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == kHistogramBins);
}

TEST_CASE("synth_blendshapes") {
  SynthParams params;
  params.vertices = 200;
  params.shapes = 8;
  params.bones = 4;
  params.influences = 2;
  params.nnz = 30;
  const SynthResult a = synth_blendshapes(params);

  SUBCASE("ground truth has zero residual") {
    const Residuals res = residual(a.model, a.ground_truth.dense_weights(), a.ground_truth.dense_theta());
    double worst = 0.0;
    for (const auto& shape : res) {
      for (const auto& r : shape) worst = std::max(worst, norm(r));
    }
    CHECK(worst < 1e-12);
    CHECK(evaluate(a.model, a.ground_truth).mxe < 1e-9);
  }
  SUBCASE("deterministic in the seed") {
    const SynthResult b = synth_blendshapes(params);
    CHECK(a.model.rest == b.model.rest);
    CHECK(a.model.deltas == b.model.deltas);
    CHECK(a.ground_truth == b.ground_truth);
    params.seed = 2;
    CHECK(!(synth_blendshapes(params).model.deltas == a.model.deltas));
  }
  SUBCASE("shape of the fixture") {
    CHECK(a.ground_truth.theta.nonzeros() == 30);
    CHECK_NOTHROW(a.ground_truth.validate());
    CHECK(a.model.num_vertices() == 200);
    CHECK(a.model.num_shapes() == 8);
    CHECK(!a.model.edges.empty());
    CHECK(a.model.edges.size() <= 3 * a.faces.size());
    for (const auto& idx : a.ground_truth.weights.indices) CHECK(idx.size() <= 2);
  }
  SUBCASE("bad parameters") {
    params.influences = 5;
    CHECK_THROWS_AS(synth_blendshapes(params), Error);
    params.influences = 2;
    params.nnz = 8 * 4 * 6 + 1;
    CHECK_THROWS_AS(synth_blendshapes(params), Error);
  }
}

TEST_CASE("animation CSV") {
  std::istringstream in("0,1,0.5\n\n-1.5, 2 ,3\r\n");
  const auto frames = parse_animation_csv(in);
  REQUIRE(frames.size() == 2);
  CHECK(frames[0] == std::vector<float>{0.0f, 1.0f, 0.5f});
  CHECK(frames[1] == std::vector<float>{-1.5f, 2.0f, 3.0f});
  std::istringstream bad("0,abc\n");
  CHECK_THROWS_AS(parse_animation_csv(bad), Error);
}
