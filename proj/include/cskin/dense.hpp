#pragma once

#include <cstddef>
#include <vector>

#include "cskin/transform_algebra.hpp"

namespace cskin {

/// Dense N x P skinning weights, row-major.
struct WeightMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  WeightMatrix() = default;
  WeightMatrix(std::size_t n, std::size_t p) : rows(n), cols(p), values(n * p, 0.0) {}

  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }

  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }

  bool operator==(const WeightMatrix&) const = default;
};

/// Dense S x P x 6 transform parameters. Linear index (k * P + j) * 6 + d, i.e. lexicographic in (k, j, d).
struct TransformParams {
  std::size_t shapes = 0;
  std::size_t bones = 0;
  std::vector<double> values;

  TransformParams() = default;
  TransformParams(std::size_t s, std::size_t p) : shapes(s), bones(p), values(s * p * kParamsPerBlock, 0.0) {}

  static std::size_t index(std::size_t bones, std::size_t k, std::size_t j, std::size_t d) {
    return (k * bones + j) * kParamsPerBlock + d;
  }
  double operator()(std::size_t k, std::size_t j, std::size_t d) const { return values[index(bones, k, j, d)]; }
  double& operator()(std::size_t k, std::size_t j, std::size_t d) { return values[index(bones, k, j, d)]; }

  Params6 block(std::size_t k, std::size_t j) const {
    Params6 p;
    for (std::size_t d = 0; d < kParamsPerBlock; ++d) p[d] = (*this)(k, j, d);
    return p;
  }
  void set_block(std::size_t k, std::size_t j, const Params6& p) {
    for (std::size_t d = 0; d < kParamsPerBlock; ++d) (*this)(k, j, d) = p[d];
  }

  std::size_t nonzeros() const {
    std::size_t count = 0;
    for (double v : values) count += v != 0.0;
    return count;
  }

  bool operator==(const TransformParams&) const = default;
};

}  // namespace cskin
