#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "cskin/decomposition.hpp"
#include "cskin/model_io.hpp"

namespace cskin {

inline constexpr std::size_t kHistogramBins = 64;

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges, mm
  std::vector<std::size_t> counts;
};

/// Per-vertex-per-shape residual norms reported in millimeters.
struct ErrorStats {
  double mae = 0.0;
  double mxe = 0.0;
  Histogram histogram;
};

/// Residual norms E_ik of a decomposition against the model, indexed [k][i], in model units.
std::vector<std::vector<double>> error_norms(const BlendshapeModel& model, const Decomposition& decomp);

/// Uniform histogram over [0, max] with `bins` bins; the top edge is inclusive.
Histogram make_histogram(std::span<const double> values, double max_value, std::size_t bins = kHistogramBins);

ErrorStats evaluate(const BlendshapeModel& model, const Decomposition& decomp);

void write_histogram_csv(std::ostream& out, const Histogram& histogram);

struct SynthParams {
  std::uint64_t seed = 1;
  std::size_t vertices = 200;
  std::size_t shapes = 8;
  std::size_t bones = 4;
  std::size_t influences = 2;
  std::size_t nnz = 24;
  double radius = 1.0;
  double rotation_scale = 0.3;     // radians
  double translation_scale = 0.3;  // model units
  Unit unit = Unit::cm;
};

struct SynthResult {
  BlendshapeModel model;
  std::vector<std::vector<std::uint32_t>> faces;
  Decomposition ground_truth;
};

/// Deformed-sphere rest mesh, smooth K-sparse weights, and a transform array with exactly `nnz` nonzeros.
/// Deltas are generated from the 32-bit ground truth, so its residual is zero up to 64-bit rounding.
SynthResult synth_blendshapes(const SynthParams& params);

/// Writes rest.obj, shape_XXX.obj, manifest.json and ground_truth.csd into `dir`.
std::filesystem::path write_synth(const std::filesystem::path& dir, const SynthResult& synth, Unit unit);

/// One frame per line, S comma-separated values.
std::vector<std::vector<float>> read_animation_csv(const std::filesystem::path& path);
std::vector<std::vector<float>> parse_animation_csv(std::istream& in);
void write_animation_csv(const std::filesystem::path& path, const std::vector<std::vector<float>>& frames);

}  // namespace cskin
