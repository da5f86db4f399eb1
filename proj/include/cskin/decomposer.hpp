#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "cskin/decomposition.hpp"
#include "cskin/model_io.hpp"

namespace cskin {

struct SolverConfig {
  std::size_t bones = 40;
  std::size_t influences = 8;
  std::optional<std::size_t> nnz_budget = 6000;  // nullopt: transforms stay dense
  double p = 2.0;
  double lambda = 1e-4;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.9;
  double eps = 1e-8;
  std::size_t iterations = 20000;
  std::uint64_t seed = 0;
  double init_sigma = 1e-2;
  /// 0 or 1 runs the deterministic single-threaded reference path.
  std::size_t threads = 0;
  /// Report progress every this many iterations (0 disables intermediate reports).
  std::size_t progress_interval = 100;

  /// High-detail preset: p = 12, up to 32 influences, no transform budget, no regularization.
  static SolverConfig hd(std::size_t bones, std::size_t iterations = 20000);

  void validate() const;
};

/// Per (shape, vertex) residual: delta - sum_j w_ij hat(theta_kj) (v_i, 1). Indexed [k][i].
using Residuals = std::vector<std::vector<Vec3>>;

Residuals residual(const BlendshapeModel& model, const WeightMatrix& weights, const TransformParams& theta);

/// sum_{i,k} |r_ki|^p + lambda * sum_edges |w_a - w_b|^2
double loss(const Residuals& residuals, double p, const WeightMatrix& weights, std::span<const Edge> edges,
            double lambda);

struct LossGradient {
  double loss = 0.0;
  double mean_error = 0.0;  // model units
  double max_error = 0.0;   // model units
  WeightMatrix grad_weights;
  TransformParams grad_theta;
};

/// Analytic gradient of `loss` with respect to every weight and transform parameter.
/// Throws NonFiniteGradient if the loss or any gradient entry is not finite.
LossGradient loss_gradient(const BlendshapeModel& model, const WeightMatrix& weights, const TransformParams& theta,
                           double p, double lambda, std::size_t threads = 0);

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.9;
  double eps = 1e-8;
};

struct AdamMoments {
  std::vector<double> first;
  std::vector<double> second;

  explicit AdamMoments(std::size_t size = 0) : first(size, 0.0), second(size, 0.0) {}
};

struct AdamState {
  AdamMoments weights;
  AdamMoments theta;
  std::size_t step = 0;

  AdamState() = default;
  AdamState(std::size_t weight_count, std::size_t theta_count) : weights(weight_count), theta(theta_count) {}
};

/// Bias-corrected Adam update of both variable groups; advances state.step by one.
void adam_step(AdamState& state, WeightMatrix& weights, TransformParams& theta, const WeightMatrix& grad_weights,
               const TransformParams& grad_theta, const AdamHyper& hyper);

/// Per row: clamp negatives to zero, keep the K largest (lower bone index wins ties), normalize.
/// A row whose clamped sum is below 1e-12 becomes one-hot on its largest original entry.
void project_weights(WeightMatrix& weights, std::size_t max_influences);

/// Keeps the `budget` entries of largest magnitude over the whole array (lower linear index wins ties).
void project_transforms(TransformParams& theta, std::size_t budget);

struct ProgressRecord {
  std::size_t iteration = 0;
  double loss = 0.0;
  double mae_mm = 0.0;
  double mxe_mm = 0.0;
};

using ProgressSink = std::function<void(const ProgressRecord&)>;

/// Writes `iteration,loss,MAE,MXE` lines (header first) to `out`.
ProgressSink csv_progress_sink(std::ostream& out);

struct DecomposeHooks {
  ProgressSink progress;
  /// Called after the projections of every iteration with the 1-based iteration count.
  std::function<void(std::size_t, const WeightMatrix&, const TransformParams&)> after_projection;
};

struct DenseSolution {
  WeightMatrix weights;
  TransformParams theta;
  double final_loss = 0.0;
};

/// Gaussian initialization (mean 0, std init_sigma) from the seeded generator, projected onto the constraints.
DenseSolution initial_guess(const BlendshapeModel& model, const SolverConfig& config);

/// Runs `config.iterations` Adam steps with projection from the given starting point.
DenseSolution optimize(const BlendshapeModel& model, const SolverConfig& config, DenseSolution start,
                       const DecomposeHooks& hooks = {});

Decomposition decompose(const BlendshapeModel& model, const SolverConfig& config, const DecomposeHooks& hooks = {});

}  // namespace cskin
