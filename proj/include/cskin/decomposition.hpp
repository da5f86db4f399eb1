#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cskin/dense.hpp"

namespace cskin {

/// Compressed row storage of the transform parameters: 6P rows (row = 6 j + d), S columns.
struct CSRMatrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint32_t> row_ptr;  // rows + 1 offsets
  std::vector<std::uint32_t> col_idx;
  std::vector<float> values;

  std::size_t nonzeros() const { return values.size(); }

  /// Throws InvalidArgument / IndexOutOfRange when the storage is malformed.
  void validate() const;

  bool operator==(const CSRMatrix&) const = default;
};

/// Per-vertex sparse weights, bone indices strictly increasing within a vertex.
struct SparseWeights {
  std::vector<std::vector<std::uint32_t>> indices;
  std::vector<std::vector<float>> values;

  std::size_t num_vertices() const { return indices.size(); }

  bool operator==(const SparseWeights&) const = default;
};

/// The serialized artifact: rest pose, sparse weights, sparse transforms, all at 32-bit.
struct Decomposition {
  std::uint32_t num_vertices = 0;
  std::uint32_t num_shapes = 0;
  std::uint32_t num_bones = 0;
  std::uint32_t max_influences = 0;
  std::vector<Vec3f> rest;
  SparseWeights weights;
  CSRMatrix theta;

  /// Checks sizes, index ranges, weight constraints (tolerance 1e-6) and CSR structure.
  void validate() const;

  WeightMatrix dense_weights() const;
  TransformParams dense_theta() const;
  std::vector<Vec3> rest_double() const;

  bool operator==(const Decomposition&) const = default;
};

CSRMatrix build_csr(const TransformParams& theta);
TransformParams densify(const CSRMatrix& csr);

SparseWeights sparsify_weights(const WeightMatrix& weights);

/// Packs dense optimizer state into the 32-bit artifact. Zero entries are dropped.
Decomposition make_decomposition(std::span<const Vec3> rest, const WeightMatrix& weights,
                                 const TransformParams& theta, std::size_t max_influences);

/// Parameter ordering tag written to every .csd file.
inline constexpr const char* kParamOrder = "r1 r2 r3 t1 t2 t3";

std::string to_json(const Decomposition& decomp);
Decomposition decomposition_from_json(const std::string& text);
void save_decomposition(const std::filesystem::path& path, const Decomposition& decomp);
Decomposition load_decomposition(const std::filesystem::path& path);

}  // namespace cskin
