#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cskin/decomposition.hpp"

namespace cskin {

/// params = csr * c (length 6P), computed in 32-bit.
std::vector<float> blend_params(const CSRMatrix& csr, std::span<const float> c);

/// M_j = I + hat(params_j) for every bone.
std::vector<Affine34f> blend_transforms(const CSRMatrix& csr, std::span<const float> c);

/// sum_j w_ij M_j (v_i, 1) over the stored (at most K) influences of each vertex.
std::vector<Vec3f> apply_lbs(const SparseWeights& weights, std::span<const Affine34f> transforms,
                             std::span<const Vec3f> rest);

using Frame = std::vector<Vec3f>;

Frame play_frame(const Decomposition& decomp, std::span<const float> c);
std::vector<Frame> play(const Decomposition& decomp, const std::vector<std::vector<float>>& animation);

struct MemoryReport {
  std::size_t sparse_bytes = 0;
  std::size_t dense_bytes = 0;
  double ratio = 0.0;  // dense / sparse
};

MemoryReport memory_report(std::size_t bones, std::size_t shapes, std::size_t nnz);
MemoryReport memory_report(const Decomposition& decomp);

/// Zeroes t_kj when |t_kj| < translation_threshold (model units) and r_kj when |r_kj| < rotation_threshold (radians).
TransformParams sparsify_dense(const TransformParams& theta, double translation_threshold, double rotation_threshold);

struct BenchReport {
  std::size_t frames = 0;
  std::size_t repetitions = 0;
  std::size_t sparse_flops = 0;  // per frame
  std::size_t dense_flops = 0;   // per frame
  double sparse_seconds = 0.0;   // best repetition, all frames
  double dense_seconds = 0.0;

  double flop_ratio() const { return sparse_flops ? static_cast<double>(dense_flops) / sparse_flops : 0.0; }
};

/// Times the sparse CSR matvec against a dense 6P x S matvec over `frames`, best of `repetitions`.
BenchReport bench_blend(const Decomposition& decomp, const std::vector<std::vector<float>>& frames,
                        std::size_t repetitions);

}  // namespace cskin
