#include "cosco/optim.hpp"

#include <algorithm>
#include <cmath>

#include "cosco/errors.hpp"

namespace cosco::optim {

namespace {

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void check_grads_finite(std::span<const Parameter> params, const char* where) {
  for (const auto& p : params) {
    if (!all_finite(p.value.grad())) {
      throw NumericError(std::string(where) + ": non-finite gradient in '" + p.name + "'");
    }
  }
}

// Runs loss_fn + backward, leaving gradients in params. The tape is cleared on failure so
// a half-recorded graph never leaks into the next evaluation.
double evaluate_gradient(std::span<Parameter> params, const LossFn& loss_fn, StatUpdate stats, const char* where) {
  zero_grad(params);
  try {
    Tensor loss = loss_fn(stats);
    const double value = loss.item();
    if (!std::isfinite(value)) throw NumericError(std::string(where) + ": non-finite loss");
    backward(loss);
    check_grads_finite(params, where);
    return value;
  } catch (...) {
    GradientTape::current().clear();
    throw;
  }
}

}  // namespace

void sgd_step(std::span<Parameter> params, SgdState& state) {
  for (const auto& p : params) {
    if (!p.value.has_grad()) throw StateError("sgd_step: parameter '" + p.name + "' has no gradient");
  }
  if (state.velocity.size() != params.size()) {
    state.velocity.clear();
    for (const auto& p : params) state.velocity.emplace_back(p.value.numel(), 0.0);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].value.mutable_data();
    const auto g = params[i].value.grad();
    auto& v = state.velocity[i];
    if (v.size() != theta.size()) throw StateError("sgd_step: velocity shape mismatch for '" + params[i].name + "'");
    for (std::size_t j = 0; j < theta.size(); ++j) {
      v[j] = state.momentum * v[j] + g[j];
      theta[j] -= state.lr * v[j];
    }
  }
}

double grad_global_norm(std::span<const Parameter> params) {
  double total = 0.0;
  for (const auto& p : params) {
    for (double g : p.value.grad()) total += g * g;
  }
  return std::sqrt(total);
}

std::vector<std::vector<double>> sam_perturbation(std::span<const Parameter> params, double rho) {
  const double norm = grad_global_norm(params);
  std::vector<std::vector<double>> eps;
  eps.reserve(params.size());
  for (const auto& p : params) {
    const auto g = p.value.grad();
    std::vector<double> e(p.value.numel(), 0.0);
    if (norm > 0.0 && !g.empty()) {
      const double factor = rho / norm;
      for (std::size_t j = 0; j < e.size(); ++j) e[j] = factor * g[j];
    }
    eps.push_back(std::move(e));
  }
  return eps;
}

double sgd_descent_step(std::span<Parameter> params, const LossFn& loss_fn, SgdState& sgd) {
  const double loss = evaluate_gradient(params, loss_fn, StatUpdate::kUpdate, "sgd step");
  sgd_step(params, sgd);
  return loss;
}

double sam_step(std::span<Parameter> params, const LossFn& loss_fn, SamConfig& sam, SgdState& sgd) {
  if (sam.rho < 0.0) throw ConfigError("sam_step: rho must be nonnegative");
  sam.last_loss = evaluate_gradient(params, loss_fn, StatUpdate::kUpdate, "sam ascent pass");
  sam.last_grad_norm = grad_global_norm(params);
  sam.perturbation = sam_perturbation(params, sam.rho);

  sam.saved.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].value.mutable_data();
    sam.saved[i].assign(theta.begin(), theta.end());
    const auto& e = sam.perturbation[i];
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] += e[j];
  }
  auto restore = [&] {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto theta = params[i].value.mutable_data();
      std::copy(sam.saved[i].begin(), sam.saved[i].end(), theta.begin());
    }
  };

  double perturbed_loss = 0.0;
  try {
    perturbed_loss = evaluate_gradient(params, loss_fn, StatUpdate::kFreeze, "sam descent pass");
  } catch (...) {
    restore();
    throw;
  }
  restore();
  sgd_step(params, sgd);
  return perturbed_loss;
}

}  // namespace cosco::optim
