#include "cskin/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace cskin {

namespace {

void check_length(std::size_t got, std::size_t expected) {
  if (got != expected) {
    throw Error(ErrorKind::LengthMismatch,
                "blendweight vector has " + std::to_string(got) + " entries, expected " + std::to_string(expected));
  }
}

// Keeps the optimizer from discarding benchmark results.
volatile float g_bench_sink = 0.0f;

void consume(std::span<const float> values) {
  float acc = 0.0f;
  for (float v : values) acc += v;
  g_bench_sink = g_bench_sink + acc;
}

}  // namespace

std::vector<float> blend_params(const CSRMatrix& csr, std::span<const float> c) {
  check_length(c.size(), csr.cols);
  std::vector<float> params(csr.rows, 0.0f);
  for (std::uint32_t row = 0; row < csr.rows; ++row) {
    float acc = 0.0f;
    for (auto e = csr.row_ptr[row]; e < csr.row_ptr[row + 1]; ++e) acc += csr.values[e] * c[csr.col_idx[e]];
    params[row] = acc;
  }
  return params;
}

std::vector<Affine34f> blend_transforms(const CSRMatrix& csr, std::span<const float> c) {
  const std::vector<float> params = blend_params(csr, c);
  std::vector<Affine34f> transforms(csr.rows / kParamsPerBlock);
  for (std::size_t j = 0; j < transforms.size(); ++j) {
    Params6f p;
    for (std::size_t d = 0; d < kParamsPerBlock; ++d) p[d] = params[j * kParamsPerBlock + d];
    transforms[j] = identity_plus_hat(p);
  }
  return transforms;
}

std::vector<Vec3f> apply_lbs(const SparseWeights& weights, std::span<const Affine34f> transforms,
                             std::span<const Vec3f> rest) {
  if (weights.num_vertices() != rest.size()) {
    throw Error(ErrorKind::DimensionMismatch, "weights and rest pose disagree on vertex count");
  }
  std::vector<Vec3f> out(rest.size());
  for (std::size_t i = 0; i < rest.size(); ++i) {
    Vec3f acc{0.0f, 0.0f, 0.0f};
    const auto& idx = weights.indices[i];
    const auto& val = weights.values[i];
    for (std::size_t e = 0; e < idx.size(); ++e) {
      if (idx[e] >= transforms.size()) {
        throw Error(ErrorKind::IndexOutOfRange, "vertex " + std::to_string(i) + " references bone " +
                                                    std::to_string(idx[e]) + " of " +
                                                    std::to_string(transforms.size()));
      }
      const Vec3f moved = transforms[idx[e]].apply(rest[i]);
      for (int d = 0; d < 3; ++d) acc[d] += val[e] * moved[d];
    }
    out[i] = acc;
  }
  return out;
}

Frame play_frame(const Decomposition& decomp, std::span<const float> c) {
  check_length(c.size(), decomp.num_shapes);
  return apply_lbs(decomp.weights, blend_transforms(decomp.theta, c), decomp.rest);
}

std::vector<Frame> play(const Decomposition& decomp, const std::vector<std::vector<float>>& animation) {
  std::vector<Frame> frames;
  frames.reserve(animation.size());
  for (const auto& c : animation) frames.push_back(play_frame(decomp, c));
  return frames;
}

MemoryReport memory_report(std::size_t bones, std::size_t shapes, std::size_t nnz) {
  MemoryReport report;
  report.dense_bytes = kParamsPerBlock * bones * shapes * sizeof(float);
  report.sparse_bytes =
      nnz * sizeof(float) + nnz * sizeof(std::uint32_t) + (kParamsPerBlock * bones + 1) * sizeof(std::uint32_t);
  report.ratio = static_cast<double>(report.dense_bytes) / static_cast<double>(report.sparse_bytes);
  return report;
}

MemoryReport memory_report(const Decomposition& decomp) {
  return memory_report(decomp.num_bones, decomp.num_shapes, decomp.theta.nonzeros());
}

TransformParams sparsify_dense(const TransformParams& theta, double translation_threshold,
                               double rotation_threshold) {
  if (!(translation_threshold >= 0.0) || !(rotation_threshold >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "thresholds must be non-negative");
  }
  TransformParams out = theta;
  for (std::size_t k = 0; k < theta.shapes; ++k) {
    for (std::size_t j = 0; j < theta.bones; ++j) {
      Params6 p = theta.block(k, j);
      if (norm(p.r) < rotation_threshold) p.r = {0.0, 0.0, 0.0};
      if (norm(p.t) < translation_threshold) p.t = {0.0, 0.0, 0.0};
      out.set_block(k, j, p);
    }
  }
  return out;
}

BenchReport bench_blend(const Decomposition& decomp, const std::vector<std::vector<float>>& frames,
                        std::size_t repetitions) {
  if (repetitions < 1) throw Error(ErrorKind::InvalidArgument, "repetitions must be at least 1");
  for (const auto& c : frames) check_length(c.size(), decomp.num_shapes);

  const CSRMatrix& csr = decomp.theta;
  const std::size_t rows = csr.rows;
  const std::size_t cols = csr.cols;
  std::vector<float> dense(rows * cols, 0.0f);
  for (std::size_t row = 0; row < rows; ++row) {
    for (auto e = csr.row_ptr[row]; e < csr.row_ptr[row + 1]; ++e) dense[row * cols + csr.col_idx[e]] = csr.values[e];
  }

  BenchReport report;
  report.frames = frames.size();
  report.repetitions = repetitions;
  report.sparse_flops = 2 * csr.nonzeros();
  report.dense_flops = 2 * rows * cols;

  using clock = std::chrono::steady_clock;
  std::vector<float> params(rows);
  report.sparse_seconds = std::numeric_limits<double>::infinity();
  report.dense_seconds = std::numeric_limits<double>::infinity();
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    auto start = clock::now();
    for (const auto& c : frames) {
      for (std::size_t row = 0; row < rows; ++row) {
        float acc = 0.0f;
        for (auto e = csr.row_ptr[row]; e < csr.row_ptr[row + 1]; ++e) acc += csr.values[e] * c[csr.col_idx[e]];
        params[row] = acc;
      }
      consume(params);
    }
    report.sparse_seconds =
        std::min(report.sparse_seconds, std::chrono::duration<double>(clock::now() - start).count());

    start = clock::now();
    for (const auto& c : frames) {
      for (std::size_t row = 0; row < rows; ++row) {
        const float* a = dense.data() + row * cols;
        float acc = 0.0f;
        for (std::size_t col = 0; col < cols; ++col) acc += a[col] * c[col];
        params[row] = acc;
      }
      consume(params);
    }
    report.dense_seconds = std::min(report.dense_seconds, std::chrono::duration<double>(clock::now() - start).count());
  }
  return report;
}

}  // namespace cskin
