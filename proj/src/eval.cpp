#include "cskin/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "cskin/decomposer.hpp"

namespace cskin {

namespace fs = std::filesystem;

std::vector<std::vector<double>> error_norms(const BlendshapeModel& model, const Decomposition& decomp) {
  if (decomp.num_vertices != model.num_vertices() || decomp.num_shapes != model.num_shapes()) {
    throw Error(ErrorKind::DimensionMismatch,
                "decomposition is N=" + std::to_string(decomp.num_vertices) + " S=" +
                    std::to_string(decomp.num_shapes) + ", model is N=" + std::to_string(model.num_vertices()) +
                    " S=" + std::to_string(model.num_shapes()));
  }
  // The decomposition carries its own (32-bit) rest pose; residuals use it with the model's deltas.
  BlendshapeModel target = model;
  target.rest = decomp.rest_double();
  const Residuals res = residual(target, decomp.dense_weights(), decomp.dense_theta());
  std::vector<std::vector<double>> norms(res.size());
  for (std::size_t k = 0; k < res.size(); ++k) {
    norms[k].reserve(res[k].size());
    for (const auto& r : res[k]) norms[k].push_back(norm(r));
  }
  return norms;
}

Histogram make_histogram(std::span<const double> values, double max_value, std::size_t bins) {
  Histogram h;
  h.counts.assign(bins, 0);
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = max_value * static_cast<double>(b) / static_cast<double>(bins);
  for (double v : values) {
    std::size_t bin = 0;
    if (max_value > 0.0) {
      bin = static_cast<std::size_t>(v / max_value * static_cast<double>(bins));
      bin = std::min(bin, bins - 1);
    }
    ++h.counts[bin];
  }
  return h;
}

namespace {

/// Pairwise summation keeps the mean independent of how the (i, k) pairs are chunked.
double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) return std::accumulate(values.begin(), values.end(), 0.0);
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.subspan(0, half)) + pairwise_sum(values.subspan(half));
}

}  // namespace

ErrorStats evaluate(const BlendshapeModel& model, const Decomposition& decomp) {
  const auto norms = error_norms(model, decomp);
  std::vector<double> flat;
  flat.reserve(model.num_vertices() * model.num_shapes());
  for (const auto& shape : norms) {
    for (double e : shape) flat.push_back(e * model.unit_scale_to_mm);
  }
  ErrorStats stats;
  if (!flat.empty()) {
    stats.mae = pairwise_sum(flat) / static_cast<double>(flat.size());
    stats.mxe = *std::max_element(flat.begin(), flat.end());
  }
  stats.histogram = make_histogram(flat, stats.mxe);
  return stats;
}

void write_histogram_csv(std::ostream& out, const Histogram& histogram) {
  out << "bin_lo,bin_hi,count\n";
  out.precision(10);
  for (std::size_t b = 0; b < histogram.counts.size(); ++b) {
    out << histogram.edges[b] << ',' << histogram.edges[b + 1] << ',' << histogram.counts[b] << '\n';
  }
}

SynthResult synth_blendshapes(const SynthParams& params) {
  if (params.vertices < 4 || params.shapes < 1 || params.bones < 1 || params.influences < 1 ||
      params.influences > params.bones || params.nnz < 1) {
    throw Error(ErrorKind::InvalidArgument, "synth parameters must be positive with influences <= bones");
  }
  const std::size_t capacity = params.shapes * params.bones * kParamsPerBlock;
  if (params.nnz > capacity) {
    throw Error(ErrorKind::InvalidArgument, "nnz exceeds the " + std::to_string(capacity) + " transform parameters");
  }
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = params.vertices;

  // Spiral point set on a sphere: consecutive turns are `stride` vertices apart, so (i, i+1, i+stride)
  // triangles tile a closed-band surface with exactly n vertices.
  const std::size_t stride =
      std::max<std::size_t>(3, static_cast<std::size_t>(std::lround(std::sqrt(2.0 * static_cast<double>(n)))));
  const double bump_a = 0.1 + 0.1 * unit(rng);
  const double bump_b = 0.05 + 0.1 * unit(rng);
  const double phase = 2.0 * std::numbers::pi * unit(rng);
  SynthResult out;
  BlendshapeModel& model = out.model;
  model.unit_scale_to_mm = unit_scale_to_mm(params.unit);
  model.rest.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double ring = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double azimuth = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(stride);
    const double polar = std::acos(z);
    const double radius = params.radius * (1.0 + bump_a * std::sin(2.0 * polar) * std::cos(3.0 * azimuth + phase) +
                                           bump_b * std::cos(3.0 * polar));
    const Vec3f v = {static_cast<float>(radius * ring * std::cos(azimuth)),
                     static_cast<float>(radius * ring * std::sin(azimuth)), static_cast<float>(radius * z)};
    model.rest[i] = {v[0], v[1], v[2]};
  }
  for (std::size_t i = 0; i + stride + 1 < n; ++i) {
    const auto a = static_cast<std::uint32_t>(i);
    const auto s = static_cast<std::uint32_t>(stride);
    out.faces.push_back({a, a + 1, a + s});
    out.faces.push_back({a + 1, a + s + 1, a + s});
  }
  model.edges = edges_from_faces(out.faces, n);

  // Weights: Gaussian falloff around randomly chosen vertices, projected to K influences.
  std::vector<std::size_t> vertex_order(n);
  std::iota(vertex_order.begin(), vertex_order.end(), std::size_t{0});
  std::shuffle(vertex_order.begin(), vertex_order.end(), rng);
  const double falloff = 0.8 * params.radius;
  WeightMatrix weights(n, params.bones);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < params.bones; ++j) {
      const Vec3& c = model.rest[vertex_order[j % n]];
      const Vec3 diff = {model.rest[i][0] - c[0], model.rest[i][1] - c[1], model.rest[i][2] - c[2]};
      weights(i, j) = std::exp(-dot(diff, diff) / (falloff * falloff));
    }
  }
  project_weights(weights, params.influences);
  for (auto& w : weights.values) w = static_cast<float>(w);

  // Transforms: exactly nnz nonzero parameters at random positions with magnitudes bounded away from zero.
  TransformParams theta(params.shapes, params.bones);
  std::vector<std::size_t> slots(capacity);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  std::shuffle(slots.begin(), slots.end(), rng);
  for (std::size_t e = 0; e < params.nnz; ++e) {
    const std::size_t slot = slots[e];
    const bool rotation = slot % kParamsPerBlock < 3;
    const double scale = rotation ? params.rotation_scale : params.translation_scale;
    const double magnitude = scale * (0.3 + 0.7 * unit(rng));
    const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
    theta.values[slot] = static_cast<float>(sign * magnitude);
  }

  model.deltas.assign(params.shapes, std::vector<Vec3>(n));
  for (std::size_t k = 0; k < params.shapes; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      Vec3 acc{0.0, 0.0, 0.0};
      for (std::size_t j = 0; j < params.bones; ++j) {
        const double w = weights(i, j);
        if (w == 0.0) continue;
        const Params6 p = theta.block(k, j);
        const Vec3 rv = cross(p.r, model.rest[i]);
        for (int d = 0; d < 3; ++d) acc[d] += w * (rv[d] + p.t[d]);
      }
      model.deltas[k][i] = acc;
    }
  }
  model.validate();
  out.ground_truth = make_decomposition(model.rest, weights, theta, params.influences);
  return out;
}

fs::path write_synth(const fs::path& dir, const SynthResult& synth, Unit unit) {
  fs::create_directories(dir);
  ShapeManifest manifest;
  manifest.unit = unit;
  manifest.rest_path = dir / "rest.obj";
  write_obj(manifest.rest_path, synth.model.rest, synth.faces);
  for (std::size_t k = 0; k < synth.model.num_shapes(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "shape_%03zu.obj", k);
    manifest.shape_paths.push_back(dir / name);
    write_obj(manifest.shape_paths.back(), absolute_shape(synth.model, k), synth.faces);
  }
  const fs::path manifest_path = dir / "manifest.json";
  write_manifest(manifest_path, manifest);
  save_decomposition(dir / "ground_truth.csd", synth.ground_truth);
  return manifest_path;
}

std::vector<std::vector<float>> parse_animation_csv(std::istream& in) {
  std::vector<std::vector<float>> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<float> frame;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        frame.push_back(std::stof(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorKind::ParseError, "animation line " + std::to_string(line_no) + ": bad value '" + cell + "'");
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::vector<std::vector<float>> read_animation_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open '" + path.string() + "'");
  return parse_animation_csv(in);
}

void write_animation_csv(const fs::path& path, const std::vector<std::vector<float>>& frames) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write '" + path.string() + "'");
  out.precision(9);
  for (const auto& frame : frames) {
    for (std::size_t k = 0; k < frame.size(); ++k) out << (k ? "," : "") << frame[k];
    out << '\n';
  }
}

}  // namespace cskin
