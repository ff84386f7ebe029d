#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cosco/tensor.hpp"

namespace cosco::optim {

/// Heavy-ball SGD: v <- momentum * v + g; theta <- theta - lr * v.
struct SgdState {
  double lr = 0.01;
  double momentum = 0.9;
  // One buffer per parameter, in parameter order; sized lazily on the first step.
  std::vector<std::vector<double>> velocity;
};

/// Sharpness-aware wrapper configuration plus scratch reused across steps.
struct SamConfig {
  double rho = 0.1;
  std::vector<std::vector<double>> saved;         // theta before perturbing
  std::vector<std::vector<double>> perturbation;  // last epsilon-hat
  double last_grad_norm = 0.0;
  double last_loss = 0.0;  // L(theta) from the ascent pass
};

/// Whether a loss evaluation may fold batch statistics into running statistics.
enum class StatUpdate { kUpdate, kFreeze };

/// Forward pass over a fixed batch returning a scalar loss recorded on the current tape.
using LossFn = std::function<Tensor(StatUpdate)>;

/// Applies one momentum update from the gradients currently held by `params`.
/// Throws StateError when a parameter has no gradient buffer.
void sgd_step(std::span<Parameter> params, SgdState& state);

/// L2 norm of all parameter gradients concatenated in parameter order.
double grad_global_norm(std::span<const Parameter> params);

/// rho * g / ||g|| per parameter, or all zeros when ||g|| == 0.
std::vector<std::vector<double>> sam_perturbation(std::span<const Parameter> params, double rho);

/// One plain step: zero grads, evaluate, backward, momentum update. Returns the loss.
/// Non-finite loss or gradient throws NumericError before parameters change.
double sgd_descent_step(std::span<Parameter> params, const LossFn& loss_fn, SgdState& sgd);

/// One SAM step on a fixed batch:
///   g = grad L(theta); e = rho g/||g||; w = grad L(theta + e); restore theta; SGD with w.
/// Makes exactly two loss_fn calls; only the first may update running statistics. The
/// parameters are restored from a saved copy, so no residual perturbation remains.
/// Returns L(theta + e). On non-finite values the parameters are restored and
/// NumericError is thrown.
double sam_step(std::span<Parameter> params, const LossFn& loss_fn, SamConfig& sam, SgdState& sgd);

}  // namespace cosco::optim
