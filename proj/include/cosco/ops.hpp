#pragma once

#include <span>
#include <vector>

#include "cosco/tensor.hpp"

namespace cosco {

// Differentiable tensor operations. Every op validates shapes and throws DimensionError
// on mismatch; outputs track gradients when any input does and grad mode is on.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
Tensor square(const Tensor& x);
Tensor exp(const Tensor& x);
/// sqrt(x + eps) elementwise.
Tensor sqrt_eps(const Tensor& x, double eps);
/// max(0, x); the subgradient at exactly 0 is 0.
Tensor relu(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// [N,K] x [K,M] -> [N,M].
Tensor matmul(const Tensor& a, const Tensor& b);

/// Stride-1 convolution with zero "same" padding: (K-1)/2 on the left, the rest on the
/// right, so output length equals input length.
/// input [N,C_in,T], weight [C_out,C_in,K], bias [C_out] -> [N,C_out,T].
Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias);

/// Running statistics of one batch-norm layer. Variance is the unbiased batch estimate.
struct BatchNormStats {
  explicit BatchNormStats(std::size_t channels)
      : running_mean(Tensor::zeros({channels})), running_var(Tensor::full({channels}, 1.0)) {}

  Tensor running_mean;
  Tensor running_var;
};

enum class NormMode { kTrain, kEval };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// x [N,C,T], gamma/beta [C]. Train mode normalizes with batch statistics over N*T and, if
/// update_stats, folds them into `stats` with momentum 0.1. Eval mode uses `stats`.
Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                   NormMode mode, bool update_stats = true);

/// [N,C,T] -> [N,C], mean over time.
Tensor global_avg_pool(const Tensor& x);

/// x [N,E], weight [C,E], bias [C] -> x * weight^T + bias.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Row-wise log-softmax of [N,C], max-subtracted.
Tensor log_softmax(const Tensor& x);

/// Squared euclidean distances between rows: a [N,E], b [C,E] -> [N,C].
Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b);

/// Mean negative log-likelihood: -(1/N) sum_i logp[i, targets[i]] for logp [N,C].
Tensor nll_mean(const Tensor& logp, std::span<const int> targets);

}  // namespace cosco
