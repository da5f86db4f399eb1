#include "cskin/decomposition.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cskin {

using nlohmann::json;

void CSRMatrix::validate() const {
  if (row_ptr.size() != static_cast<std::size_t>(rows) + 1) {
    throw Error(ErrorKind::InvalidArgument, "row_ptr must have rows + 1 entries");
  }
  if (col_idx.size() != values.size()) throw Error(ErrorKind::InvalidArgument, "col_idx and values differ in length");
  if (row_ptr.front() != 0 || row_ptr.back() != values.size()) {
    throw Error(ErrorKind::InvalidArgument, "row_ptr must start at 0 and end at nnz");
  }
  for (std::uint32_t row = 0; row < rows; ++row) {
    if (row_ptr[row] > row_ptr[row + 1]) throw Error(ErrorKind::InvalidArgument, "row_ptr must be nondecreasing");
    for (auto e = row_ptr[row]; e < row_ptr[row + 1]; ++e) {
      if (col_idx[e] >= cols) throw Error(ErrorKind::IndexOutOfRange, "CSR column index out of range");
      if (e > row_ptr[row] && col_idx[e] <= col_idx[e - 1]) {
        throw Error(ErrorKind::InvalidArgument, "CSR column indices must be strictly increasing within a row");
      }
    }
  }
}

CSRMatrix build_csr(const TransformParams& theta) {
  CSRMatrix csr;
  csr.rows = static_cast<std::uint32_t>(theta.bones * kParamsPerBlock);
  csr.cols = static_cast<std::uint32_t>(theta.shapes);
  csr.row_ptr.assign(csr.rows + 1, 0);
  for (std::size_t j = 0; j < theta.bones; ++j) {
    for (std::size_t d = 0; d < kParamsPerBlock; ++d) {
      const std::size_t row = j * kParamsPerBlock + d;
      for (std::size_t k = 0; k < theta.shapes; ++k) {
        const auto value = static_cast<float>(theta(k, j, d));
        if (value == 0.0f) continue;
        csr.col_idx.push_back(static_cast<std::uint32_t>(k));
        csr.values.push_back(value);
      }
      csr.row_ptr[row + 1] = static_cast<std::uint32_t>(csr.values.size());
    }
  }
  return csr;
}

TransformParams densify(const CSRMatrix& csr) {
  TransformParams theta(csr.cols, csr.rows / kParamsPerBlock);
  for (std::uint32_t row = 0; row < csr.rows; ++row) {
    const std::size_t j = row / kParamsPerBlock;
    const std::size_t d = row % kParamsPerBlock;
    for (auto e = csr.row_ptr[row]; e < csr.row_ptr[row + 1]; ++e) theta(csr.col_idx[e], j, d) = csr.values[e];
  }
  return theta;
}

SparseWeights sparsify_weights(const WeightMatrix& weights) {
  SparseWeights out;
  out.indices.resize(weights.rows);
  out.values.resize(weights.rows);
  for (std::size_t i = 0; i < weights.rows; ++i) {
    for (std::size_t j = 0; j < weights.cols; ++j) {
      const auto w = static_cast<float>(weights(i, j));
      if (w == 0.0f) continue;
      out.indices[i].push_back(static_cast<std::uint32_t>(j));
      out.values[i].push_back(w);
    }
  }
  return out;
}

Decomposition make_decomposition(std::span<const Vec3> rest, const WeightMatrix& weights,
                                 const TransformParams& theta, std::size_t max_influences) {
  if (weights.rows != rest.size() || weights.cols != theta.bones) {
    throw Error(ErrorKind::DimensionMismatch, "weights, rest pose and transforms disagree on N or P");
  }
  Decomposition decomp;
  decomp.num_vertices = static_cast<std::uint32_t>(rest.size());
  decomp.num_shapes = static_cast<std::uint32_t>(theta.shapes);
  decomp.num_bones = static_cast<std::uint32_t>(theta.bones);
  decomp.max_influences = static_cast<std::uint32_t>(max_influences);
  decomp.rest.reserve(rest.size());
  for (const auto& v : rest) {
    decomp.rest.push_back({static_cast<float>(v[0]), static_cast<float>(v[1]), static_cast<float>(v[2])});
  }
  decomp.weights = sparsify_weights(weights);
  decomp.theta = build_csr(theta);
  return decomp;
}

void Decomposition::validate() const {
  if (rest.size() != num_vertices || weights.indices.size() != num_vertices ||
      weights.values.size() != num_vertices) {
    throw Error(ErrorKind::DimensionMismatch, "rest pose / weights do not have N entries");
  }
  if (max_influences < 1 || max_influences > num_bones) {
    throw Error(ErrorKind::InvalidArgument, "K must lie in [1, P]");
  }
  for (std::size_t i = 0; i < num_vertices; ++i) {
    const auto& idx = weights.indices[i];
    const auto& val = weights.values[i];
    if (idx.size() != val.size()) throw Error(ErrorKind::DimensionMismatch, "weight indices/values length differ");
    if (idx.size() > max_influences) {
      throw Error(ErrorKind::InvalidArgument, "vertex " + std::to_string(i) + " has more than K influences");
    }
    double sum = 0.0;
    for (std::size_t e = 0; e < idx.size(); ++e) {
      if (idx[e] >= num_bones) throw Error(ErrorKind::IndexOutOfRange, "weight bone index out of range");
      if (e > 0 && idx[e] <= idx[e - 1]) {
        throw Error(ErrorKind::InvalidArgument, "weight bone indices must be strictly increasing");
      }
      if (!(val[e] >= 0.0f)) throw Error(ErrorKind::InvalidArgument, "negative weight");
      sum += val[e];
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw Error(ErrorKind::InvalidArgument, "weights of vertex " + std::to_string(i) + " do not sum to 1");
    }
  }
  if (theta.rows != num_bones * kParamsPerBlock || theta.cols != num_shapes) {
    throw Error(ErrorKind::DimensionMismatch, "theta CSR must be 6P x S");
  }
  theta.validate();
}

WeightMatrix Decomposition::dense_weights() const {
  WeightMatrix w(num_vertices, num_bones);
  for (std::size_t i = 0; i < num_vertices; ++i) {
    for (std::size_t e = 0; e < weights.indices[i].size(); ++e) w(i, weights.indices[i][e]) = weights.values[i][e];
  }
  return w;
}

TransformParams Decomposition::dense_theta() const { return densify(theta); }

std::vector<Vec3> Decomposition::rest_double() const {
  std::vector<Vec3> out;
  out.reserve(rest.size());
  for (const auto& v : rest) out.push_back({v[0], v[1], v[2]});
  return out;
}

std::string to_json(const Decomposition& decomp) {
  json doc;
  doc["version"] = 1;
  doc["N"] = decomp.num_vertices;
  doc["S"] = decomp.num_shapes;
  doc["P"] = decomp.num_bones;
  doc["K"] = decomp.max_influences;
  doc["rest"] = decomp.rest;
  doc["weights"] = {{"indices", decomp.weights.indices}, {"values", decomp.weights.values}};
  doc["theta_csr"] = {
      {"row_ptr", decomp.theta.row_ptr}, {"col_idx", decomp.theta.col_idx}, {"values", decomp.theta.values}};
  doc["param_order"] = kParamOrder;
  return doc.dump();
}

Decomposition decomposition_from_json(const std::string& text) {
  Decomposition decomp;
  try {
    const json doc = json::parse(text);
    if (doc.at("version").get<int>() != 1) throw Error(ErrorKind::ParseError, "unsupported .csd version");
    if (doc.at("param_order").get<std::string>() != kParamOrder) {
      throw Error(ErrorKind::ParseError, "unsupported param_order");
    }
    decomp.num_vertices = doc.at("N").get<std::uint32_t>();
    decomp.num_shapes = doc.at("S").get<std::uint32_t>();
    decomp.num_bones = doc.at("P").get<std::uint32_t>();
    decomp.max_influences = doc.at("K").get<std::uint32_t>();
    decomp.rest = doc.at("rest").get<std::vector<Vec3f>>();
    decomp.weights.indices = doc.at("weights").at("indices").get<std::vector<std::vector<std::uint32_t>>>();
    decomp.weights.values = doc.at("weights").at("values").get<std::vector<std::vector<float>>>();
    const auto& csr = doc.at("theta_csr");
    decomp.theta.rows = decomp.num_bones * static_cast<std::uint32_t>(kParamsPerBlock);
    decomp.theta.cols = decomp.num_shapes;
    decomp.theta.row_ptr = csr.at("row_ptr").get<std::vector<std::uint32_t>>();
    decomp.theta.col_idx = csr.at("col_idx").get<std::vector<std::uint32_t>>();
    decomp.theta.values = csr.at("values").get<std::vector<float>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed .csd: ") + e.what());
  }
  decomp.validate();
  return decomp;
}

void save_decomposition(const std::filesystem::path& path, const Decomposition& decomp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write '" + path.string() + "'");
  out << to_json(decomp) << '\n';
}

Decomposition load_decomposition(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return decomposition_from_json(ss.str());
}

}  // namespace cskin
