#include "cskin/decomposer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

namespace cskin {

SolverConfig SolverConfig::hd(std::size_t bones, std::size_t iterations) {
  SolverConfig config;
  config.bones = bones;
  config.influences = std::min<std::size_t>(32, bones);
  config.nnz_budget = std::nullopt;
  config.p = 12.0;
  config.lambda = 0.0;
  config.iterations = iterations;
  return config;
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
  if (bones < 1) fail("bone count must be at least 1");
  if (influences < 1 || influences > bones) fail("influences must lie in [1, bones]");
  if (nnz_budget && *nnz_budget < 1) fail("transform budget must be at least 1");
  if (!(p >= 1.0)) fail("loss exponent must be >= 1");
  if (!(lambda >= 0.0)) fail("lambda must be non-negative");
  if (!(lr > 0.0)) fail("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("Adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) fail("Adam eps must be positive");
  if (iterations < 1) fail("iterations must be at least 1");
  if (!(init_sigma >= 0.0)) fail("init_sigma must be non-negative");
}

namespace {

void check_dimensions(const BlendshapeModel& model, const WeightMatrix& weights, const TransformParams& theta) {
  if (weights.rows != model.num_vertices() || theta.shapes != model.num_shapes() || weights.cols != theta.bones) {
    throw Error(ErrorKind::DimensionMismatch,
                "model has N=" + std::to_string(model.num_vertices()) + " S=" + std::to_string(model.num_shapes()) +
                    "; weights are " + std::to_string(weights.rows) + "x" + std::to_string(weights.cols) +
                    "; transforms are S=" + std::to_string(theta.shapes) + " P=" + std::to_string(theta.bones));
  }
}

/// Weight-blended rotation and translation for vertex row `w` and shape k.
inline void blend_params(std::span<const double> w, const TransformParams& theta, std::size_t k, Vec3& r, Vec3& t) {
  r = {0.0, 0.0, 0.0};
  t = {0.0, 0.0, 0.0};
  const double* block = theta.values.data() + k * theta.bones * kParamsPerBlock;
  for (std::size_t j = 0; j < w.size(); ++j, block += kParamsPerBlock) {
    const double wij = w[j];
    if (wij == 0.0) continue;
    r[0] += wij * block[0];
    r[1] += wij * block[1];
    r[2] += wij * block[2];
    t[0] += wij * block[3];
    t[1] += wij * block[4];
    t[2] += wij * block[5];
  }
}

inline Vec3 residual_at(const BlendshapeModel& model, std::span<const double> w, const TransformParams& theta,
                        std::size_t k, std::size_t i) {
  Vec3 r, t;
  blend_params(w, theta, k, r, t);
  const Vec3 rv = cross(r, model.rest[i]);
  const Vec3& delta = model.deltas[k][i];
  return {delta[0] - rv[0] - t[0], delta[1] - rv[1] - t[1], delta[2] - rv[2] - t[2]};
}

/// |x|^p for the data term.
inline double power_norm(double e, double p) { return p == 2.0 ? e * e : std::pow(e, p); }

struct ChunkResult {
  double data_loss = 0.0;
  double error_sum = 0.0;
  double error_max = 0.0;
  std::vector<double> grad_theta;
};

void gradient_chunk(const BlendshapeModel& model, const WeightMatrix& weights, const TransformParams& theta, double p,
                    std::size_t begin, std::size_t end, WeightMatrix& grad_w, ChunkResult& out) {
  const std::size_t bones = theta.bones;
  out.grad_theta.assign(theta.values.size(), 0.0);
  for (std::size_t i = begin; i < end; ++i) {
    const Vec3& v = model.rest[i];
    const auto w = weights.row(i);
    auto gw = grad_w.row(i);
    for (std::size_t k = 0; k < theta.shapes; ++k) {
      const Vec3 res = residual_at(model, w, theta, k, i);
      const double e = norm(res);
      out.data_loss += power_norm(e, p);
      out.error_sum += e;
      out.error_max = std::max(out.error_max, e);

      // d|res|^p / d res = p |res|^(p-2) res; zero at res = 0 (subgradient choice for p < 2).
      double scale;
      if (p == 2.0) {
        scale = 2.0;
      } else if (e == 0.0) {
        scale = 0.0;
      } else {
        scale = p * std::pow(e, p - 2.0);
      }
      // q = dL/d(prediction) = -scale * res
      const Vec3 q = {-scale * res[0], -scale * res[1], -scale * res[2]};
      if (q[0] == 0.0 && q[1] == 0.0 && q[2] == 0.0) continue;
      const Vec3 vxq = cross(v, q);

      const double* block = theta.values.data() + k * bones * kParamsPerBlock;
      double* gblock = out.grad_theta.data() + k * bones * kParamsPerBlock;
      for (std::size_t j = 0; j < bones; ++j, block += kParamsPerBlock, gblock += kParamsPerBlock) {
        // prediction_j = r_kj x v + t_kj, and q . (r x v) = r . (v x q)
        gw[j] += block[0] * vxq[0] + block[1] * vxq[1] + block[2] * vxq[2] + block[3] * q[0] + block[4] * q[1] +
                 block[5] * q[2];
        const double wij = w[j];
        if (wij == 0.0) continue;
        gblock[0] += wij * vxq[0];
        gblock[1] += wij * vxq[1];
        gblock[2] += wij * vxq[2];
        gblock[3] += wij * q[0];
        gblock[4] += wij * q[1];
        gblock[5] += wij * q[2];
      }
    }
  }
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

Residuals residual(const BlendshapeModel& model, const WeightMatrix& weights, const TransformParams& theta) {
  check_dimensions(model, weights, theta);
  Residuals out(model.num_shapes(), std::vector<Vec3>(model.num_vertices()));
  for (std::size_t k = 0; k < model.num_shapes(); ++k) {
    for (std::size_t i = 0; i < model.num_vertices(); ++i) out[k][i] = residual_at(model, weights.row(i), theta, k, i);
  }
  return out;
}

double loss(const Residuals& residuals, double p, const WeightMatrix& weights, std::span<const Edge> edges,
            double lambda) {
  if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "loss exponent must be >= 1");
  double data = 0.0;
  for (const auto& shape : residuals) {
    for (const auto& r : shape) data += power_norm(norm(r), p);
  }
  double smooth = 0.0;
  if (lambda != 0.0) {
    for (const auto& [a, b] : edges) {
      if (a >= weights.rows || b >= weights.rows) throw Error(ErrorKind::IndexOutOfRange, "edge index out of range");
      for (std::size_t j = 0; j < weights.cols; ++j) {
        const double diff = weights(a, j) - weights(b, j);
        smooth += diff * diff;
      }
    }
  }
  return data + lambda * smooth;
}

LossGradient loss_gradient(const BlendshapeModel& model, const WeightMatrix& weights, const TransformParams& theta,
                           double p, double lambda, std::size_t threads) {
  check_dimensions(model, weights, theta);
  const std::size_t n = model.num_vertices();
  LossGradient out;
  out.grad_weights = WeightMatrix(n, theta.bones);
  out.grad_theta = TransformParams(theta.shapes, theta.bones);

  const std::size_t chunks = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  std::vector<ChunkResult> partial(chunks);
  auto range = [&](std::size_t c) { return std::pair{n * c / chunks, n * (c + 1) / chunks}; };
  if (chunks == 1) {
    gradient_chunk(model, weights, theta, p, 0, n, out.grad_weights, partial[0]);
  } else {
    std::vector<std::jthread> workers;
    workers.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
      workers.emplace_back([&, c] {
        const auto [begin, end] = range(c);
        gradient_chunk(model, weights, theta, p, begin, end, out.grad_weights, partial[c]);
      });
    }
  }

  double data_loss = 0.0;
  double error_sum = 0.0;
  for (const auto& part : partial) {
    data_loss += part.data_loss;
    error_sum += part.error_sum;
    out.max_error = std::max(out.max_error, part.error_max);
    for (std::size_t e = 0; e < part.grad_theta.size(); ++e) out.grad_theta.values[e] += part.grad_theta[e];
  }
  const std::size_t pairs = n * model.num_shapes();
  out.mean_error = pairs ? error_sum / static_cast<double>(pairs) : 0.0;

  double smooth = 0.0;
  if (lambda != 0.0) {
    for (const auto& [a, b] : model.edges) {
      for (std::size_t j = 0; j < weights.cols; ++j) {
        const double diff = weights(a, j) - weights(b, j);
        smooth += diff * diff;
        out.grad_weights(a, j) += 2.0 * lambda * diff;
        out.grad_weights(b, j) -= 2.0 * lambda * diff;
      }
    }
  }
  out.loss = data_loss + lambda * smooth;

  if (!std::isfinite(out.loss) || !all_finite(out.grad_weights.values) || !all_finite(out.grad_theta.values)) {
    throw Error(ErrorKind::NonFiniteGradient, "loss or gradient is not finite");
  }
  return out;
}

namespace {

void adam_update(AdamMoments& moments, std::span<double> params, std::span<const double> grads, std::size_t step,
                 const AdamHyper& hyper) {
  if (moments.first.size() != params.size() || grads.size() != params.size()) {
    throw Error(ErrorKind::DimensionMismatch, "Adam state does not match parameter count");
  }
  const double correction1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
  const double correction2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
  for (std::size_t e = 0; e < params.size(); ++e) {
    const double g = grads[e];
    double& m = moments.first[e];
    double& v = moments.second[e];
    m = hyper.beta1 * m + (1.0 - hyper.beta1) * g;
    v = hyper.beta2 * v + (1.0 - hyper.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[e] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

}  // namespace

void adam_step(AdamState& state, WeightMatrix& weights, TransformParams& theta, const WeightMatrix& grad_weights,
               const TransformParams& grad_theta, const AdamHyper& hyper) {
  ++state.step;
  adam_update(state.weights, weights.values, grad_weights.values, state.step, hyper);
  adam_update(state.theta, theta.values, grad_theta.values, state.step, hyper);
}

void project_weights(WeightMatrix& weights, std::size_t max_influences) {
  const std::size_t p = weights.cols;
  const std::size_t keep = std::min(max_influences, p);
  std::vector<std::size_t> order(p);
  for (std::size_t i = 0; i < weights.rows; ++i) {
    auto row = weights.row(i);
    // Largest original entry (lowest index on ties) for the degenerate-row fallback.
    const std::size_t fallback =
        static_cast<std::size_t>(std::max_element(row.begin(), row.end(), std::less<>{}) - row.begin());
    for (auto& w : row) w = std::max(w, 0.0);
    if (keep < p) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                       [&](std::size_t a, std::size_t b) { return row[a] > row[b] || (row[a] == row[b] && a < b); });
      for (std::size_t e = keep; e < p; ++e) row[order[e]] = 0.0;
    }
    double sum = 0.0;
    for (double w : row) sum += w;
    if (sum < 1e-12) {
      std::fill(row.begin(), row.end(), 0.0);
      row[fallback] = 1.0;
      continue;
    }
    for (auto& w : row) w /= sum;
  }
}

void project_transforms(TransformParams& theta, std::size_t budget) {
  auto& values = theta.values;
  if (budget >= values.size()) return;
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(budget), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     const double ma = std::abs(values[a]);
                     const double mb = std::abs(values[b]);
                     return ma > mb || (ma == mb && a < b);
                   });
  for (std::size_t e = budget; e < order.size(); ++e) values[order[e]] = 0.0;
}

ProgressSink csv_progress_sink(std::ostream& out) {
  out << "iteration,loss,MAE,MXE\n";
  return [&out](const ProgressRecord& rec) {
    out << rec.iteration << ',' << rec.loss << ',' << rec.mae_mm << ',' << rec.mxe_mm << '\n';
  };
}

DenseSolution initial_guess(const BlendshapeModel& model, const SolverConfig& config) {
  config.validate();
  DenseSolution start{WeightMatrix(model.num_vertices(), config.bones),
                      TransformParams(model.num_shapes(), config.bones), 0.0};
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, config.init_sigma);
  for (auto& w : start.weights.values) w = noise(rng);
  for (auto& x : start.theta.values) x = noise(rng);
  project_weights(start.weights, config.influences);
  if (config.nnz_budget) project_transforms(start.theta, *config.nnz_budget);
  return start;
}

DenseSolution optimize(const BlendshapeModel& model, const SolverConfig& config, DenseSolution state,
                       const DecomposeHooks& hooks) {
  config.validate();
  model.validate();
  if (model.num_vertices() == 0 || model.num_shapes() == 0) {
    throw Error(ErrorKind::InvalidArgument, "model needs at least one vertex and one shape");
  }
  check_dimensions(model, state.weights, state.theta);
  if (state.theta.bones != config.bones) throw Error(ErrorKind::DimensionMismatch, "start has wrong bone count");

  const AdamHyper hyper{config.lr, config.beta1, config.beta2, config.eps};
  AdamState adam(state.weights.values.size(), state.theta.values.size());
  const double to_mm = model.unit_scale_to_mm;
  auto report = [&](std::size_t iteration, const LossGradient& g) {
    if (hooks.progress) hooks.progress({iteration, g.loss, g.mean_error * to_mm, g.max_error * to_mm});
  };

  for (std::size_t it = 0; it < config.iterations; ++it) {
    LossGradient g;
    try {
      g = loss_gradient(model, state.weights, state.theta, config.p, config.lambda, config.threads);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonFiniteGradient) throw;
      throw Error(ErrorKind::NonFiniteGradient, "diverged at iteration " + std::to_string(it));
    }
    if (config.progress_interval != 0 && it % config.progress_interval == 0) report(it, g);
    adam_step(adam, state.weights, state.theta, g.grad_weights, g.grad_theta, hyper);
    project_weights(state.weights, config.influences);
    if (config.nnz_budget) project_transforms(state.theta, *config.nnz_budget);
    if (hooks.after_projection) hooks.after_projection(it + 1, state.weights, state.theta);
  }

  const LossGradient last = loss_gradient(model, state.weights, state.theta, config.p, config.lambda, config.threads);
  state.final_loss = last.loss;
  report(config.iterations, last);
  return state;
}

Decomposition decompose(const BlendshapeModel& model, const SolverConfig& config, const DecomposeHooks& hooks) {
  const DenseSolution solution = optimize(model, config, initial_guess(model, config), hooks);
  return make_decomposition(model.rest, solution.weights, solution.theta, config.influences);
}

}  // namespace cskin
