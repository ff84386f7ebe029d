#include "cosco/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "cosco/errors.hpp"

namespace cosco {

namespace {

using StoragePtr = std::shared_ptr<TensorStorage>;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;

bool tracking(std::initializer_list<const Tensor*> inputs) {
  if (!grad_mode_enabled()) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
}

Tensor make_output(Shape shape, std::vector<double> values, bool track) {
  Tensor out = Tensor::from(std::move(shape), std::move(values), false);
  // Non-leaf outputs get their grad buffer lazily, when something flows into them.
  if (track) out.storage()->requires_grad = true;
  return out;
}

std::vector<double>& grad_of(const StoragePtr& s) {
  if (s->grad.empty()) s->grad.assign(s->data.size(), 0.0);
  return s->grad;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_to_string(t.shape()));
  }
}

// Elementwise unary op y = f(x) with dy/dx = df(x, y).
template <typename F, typename DF>
Tensor unary(const Tensor& x, F f, DF df) {
  const auto xs = x.data();
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f(xs[i]);
  const bool track = tracking({&x});
  Tensor y = make_output(x.shape(), std::move(out), track);
  if (track) {
    StoragePtr xs_p = x.storage();
    StoragePtr ys_p = y.storage();
    GradientTape::current().record(y, [xs_p, ys_p, df](std::span<const double> gy) {
      auto& gx = grad_of(xs_p);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * df(xs_p->data[i], ys_p->data[i]);
    });
  }
  return y;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  const auto as = a.data();
  const auto bs = b.data();
  std::vector<double> out(as.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = as[i] + bs[i];
  const bool track = tracking({&a, &b});
  Tensor y = make_output(a.shape(), std::move(out), track);
  if (track) {
    StoragePtr ap = a.storage(), bp = b.storage();
    GradientTape::current().record(y, [ap, bp](std::span<const double> gy) {
      for (const auto& p : {ap, bp}) {
        if (!p->requires_grad) continue;
        auto& g = grad_of(p);
        for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i];
      }
    });
  }
  return y;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  const auto as = a.data();
  const auto bs = b.data();
  std::vector<double> out(as.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = as[i] - bs[i];
  const bool track = tracking({&a, &b});
  Tensor y = make_output(a.shape(), std::move(out), track);
  if (track) {
    StoragePtr ap = a.storage(), bp = b.storage();
    GradientTape::current().record(y, [ap, bp](std::span<const double> gy) {
      if (ap->requires_grad) {
        auto& g = grad_of(ap);
        for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i];
      }
      if (bp->requires_grad) {
        auto& g = grad_of(bp);
        for (std::size_t i = 0; i < gy.size(); ++i) g[i] -= gy[i];
      }
    });
  }
  return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  const auto as = a.data();
  const auto bs = b.data();
  std::vector<double> out(as.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = as[i] * bs[i];
  const bool track = tracking({&a, &b});
  Tensor y = make_output(a.shape(), std::move(out), track);
  if (track) {
    StoragePtr ap = a.storage(), bp = b.storage();
    GradientTape::current().record(y, [ap, bp](std::span<const double> gy) {
      if (ap->requires_grad) {
        auto& g = grad_of(ap);
        for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * bp->data[i];
      }
      if (bp->requires_grad) {
        auto& g = grad_of(bp);
        for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * ap->data[i];
      }
    });
  }
  return y;
}

Tensor scale(const Tensor& x, double factor) {
  return unary(x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary(x, [value](double v) { return v + value; }, [](double, double) { return 1.0; });
}

Tensor square(const Tensor& x) {
  return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor exp(const Tensor& x) {
  return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor sqrt_eps(const Tensor& x, double eps) {
  return unary(x, [eps](double v) { return std::sqrt(v + eps); }, [](double, double y) { return 0.5 / y; });
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  const bool track = tracking({&x});
  Tensor y = make_output({1}, {total}, track);
  if (track) {
    StoragePtr xp = x.storage();
    GradientTape::current().record(y, [xp](std::span<const double> gy) {
      auto& g = grad_of(xp);
      for (double& v : g) v += gy[0];
    });
  }
  return y;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ " + shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
  }
  std::vector<double> out(n * m);
  RowMap(out.data(), n, m).noalias() = ConstRowMap(a.data().data(), n, k) * ConstRowMap(b.data().data(), k, m);
  const bool track = tracking({&a, &b});
  Tensor y = make_output({n, m}, std::move(out), track);
  if (track) {
    StoragePtr ap = a.storage(), bp = b.storage();
    GradientTape::current().record(y, [ap, bp, n, k, m](std::span<const double> gy) {
      ConstRowMap gmat(gy.data(), n, m);
      if (ap->requires_grad) {
        RowMap(grad_of(ap).data(), n, k).noalias() += gmat * ConstRowMap(bp->data.data(), k, m).transpose();
      }
      if (bp->requires_grad) {
        RowMap(grad_of(bp).data(), k, m).noalias() += ConstRowMap(ap->data.data(), n, k).transpose() * gmat;
      }
    });
  }
  return y;
}

Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank("conv1d", input, 3);
  require_rank("conv1d", weight, 3);
  require_rank("conv1d", bias, 1);
  const std::size_t n = input.dim(0), c_in = input.dim(1), t_len = input.dim(2);
  const std::size_t c_out = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != c_in) {
    throw DimensionError("conv1d: input has " + std::to_string(c_in) + " channels, weight expects " +
                         std::to_string(weight.dim(1)));
  }
  if (bias.dim(0) != c_out) throw DimensionError("conv1d: bias length does not match output channels");

  const std::ptrdiff_t pad_left = static_cast<std::ptrdiff_t>((k - 1) / 2);
  const std::size_t rows = c_in * k;
  const std::size_t cols = n * t_len;

  // im2col: column (b*T + t) holds the receptive field of output step t of sample b.
  // Left uninitialized: every entry is written below, padding included.
  std::shared_ptr<double[]> columns(new double[rows * cols]);
  const auto x = input.data();
  const std::ptrdiff_t t_signed = static_cast<std::ptrdiff_t>(t_len);
  for (std::size_t c = 0; c < c_in; ++c) {
    for (std::size_t j = 0; j < k; ++j) {
      double* row = columns.get() + (c * k + j) * cols;
      const std::ptrdiff_t offset = static_cast<std::ptrdiff_t>(j) - pad_left;
      const std::ptrdiff_t lo = std::clamp<std::ptrdiff_t>(-offset, 0, t_signed);
      const std::ptrdiff_t hi = std::clamp<std::ptrdiff_t>(t_signed - offset, lo, t_signed);
      for (std::size_t b = 0; b < n; ++b) {
        const double* src = x.data() + (b * c_in + c) * t_len;
        double* dst = row + b * t_len;
        std::fill(dst, dst + lo, 0.0);
        std::copy(src + lo + offset, src + hi + offset, dst + lo);
        std::fill(dst + hi, dst + t_len, 0.0);
      }
    }
  }

  RowMat product = ConstRowMap(weight.data().data(), c_out, rows) * ConstRowMap(columns.get(), rows, cols);
  std::vector<double> out(n * c_out * t_len);
  const auto bs = bias.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < c_out; ++o) {
      const double* src = product.data() + o * cols + b * t_len;
      double* dst = out.data() + (b * c_out + o) * t_len;
      for (std::size_t t = 0; t < t_len; ++t) dst[t] = src[t] + bs[o];
    }
  }

  const bool track = tracking({&input, &weight, &bias});
  Tensor y = make_output({n, c_out, t_len}, std::move(out), track);
  if (track) {
    StoragePtr xp = input.storage(), wp = weight.storage(), bp = bias.storage();
    GradientTape::current().record(y, [=](std::span<const double> gy) {
      RowMat gmat(c_out, cols);
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t o = 0; o < c_out; ++o) {
          const double* src = gy.data() + (b * c_out + o) * t_len;
          std::copy(src, src + t_len, gmat.data() + o * cols + b * t_len);
        }
      }
      if (bp->requires_grad) {
        auto& gb = grad_of(bp);
        for (std::size_t o = 0; o < c_out; ++o) gb[o] += gmat.row(o).sum();
      }
      if (wp->requires_grad) {
        RowMap(grad_of(wp).data(), c_out, rows).noalias() +=
            gmat * ConstRowMap(columns.get(), rows, cols).transpose();
      }
      if (xp->requires_grad) {
        RowMat gcols = ConstRowMap(wp->data.data(), c_out, rows).transpose() * gmat;
        auto& gx = grad_of(xp);
        for (std::size_t c = 0; c < c_in; ++c) {
          for (std::size_t j = 0; j < k; ++j) {
            const double* row = gcols.data() + (c * k + j) * cols;
            const std::ptrdiff_t offset = static_cast<std::ptrdiff_t>(j) - pad_left;
            const std::ptrdiff_t lo = std::clamp<std::ptrdiff_t>(-offset, 0, t_signed);
            const std::ptrdiff_t hi = std::clamp<std::ptrdiff_t>(t_signed - offset, lo, t_signed);
            for (std::size_t b = 0; b < n; ++b) {
              double* dst = gx.data() + (b * c_in + c) * t_len;
              const double* src = row + b * t_len;
              for (std::ptrdiff_t t = lo; t < hi; ++t) dst[t + offset] += src[t];
            }
          }
        }
      }
    });
  }
  return y;
}

Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats, NormMode mode,
                   bool update_stats) {
  require_rank("batchnorm1d", x, 3);
  const std::size_t n = x.dim(0), channels = x.dim(1), t_len = x.dim(2);
  for (const Tensor* p : std::initializer_list<const Tensor*>{&gamma, &beta, &stats.running_mean, &stats.running_var}) {
    if (p->rank() != 1 || p->dim(0) != channels) {
      throw DimensionError("batchnorm1d: per-channel tensor of shape " + shape_to_string(p->shape()) +
                           " does not match " + std::to_string(channels) + " channels");
    }
  }
  const std::size_t count = n * t_len;
  if (mode == NormMode::kTrain && count < 2) {
    throw DegenerateBatchError("batchnorm1d: train mode needs at least 2 values per channel, got " +
                               std::to_string(count));
  }

  const auto xs = x.data();
  const auto g = gamma.data();
  const auto bt = beta.data();
  std::vector<double> mean_c(channels), inv_std(channels);
  if (mode == NormMode::kTrain) {
    for (std::size_t c = 0; c < channels; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* row = xs.data() + (b * channels + c) * t_len;
        for (std::size_t t = 0; t < t_len; ++t) s += row[t];
      }
      const double mu = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* row = xs.data() + (b * channels + c) * t_len;
        for (std::size_t t = 0; t < t_len; ++t) ss += (row[t] - mu) * (row[t] - mu);
      }
      const double var = ss / static_cast<double>(count);
      mean_c[c] = mu;
      inv_std[c] = 1.0 / std::sqrt(var + kBatchNormEps);
      if (update_stats) {
        auto rm = stats.running_mean.mutable_data();
        auto rv = stats.running_var.mutable_data();
        const double unbiased = ss / static_cast<double>(count - 1);
        rm[c] = (1.0 - kBatchNormMomentum) * rm[c] + kBatchNormMomentum * mu;
        rv[c] = (1.0 - kBatchNormMomentum) * rv[c] + kBatchNormMomentum * unbiased;
      }
    }
  } else {
    const auto rm = stats.running_mean.data();
    const auto rv = stats.running_var.data();
    for (std::size_t c = 0; c < channels; ++c) {
      mean_c[c] = rm[c];
      inv_std[c] = 1.0 / std::sqrt(rv[c] + kBatchNormEps);
    }
  }

  auto xhat = std::make_shared<std::vector<double>>(xs.size());
  std::vector<double> out(xs.size());
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t base = (b * channels + c) * t_len;
      for (std::size_t t = 0; t < t_len; ++t) {
        const double h = (xs[base + t] - mean_c[c]) * inv_std[c];
        (*xhat)[base + t] = h;
        out[base + t] = g[c] * h + bt[c];
      }
    }
  }

  const bool track = tracking({&x, &gamma, &beta});
  Tensor y = make_output(x.shape(), std::move(out), track);
  if (track) {
    StoragePtr xp = x.storage(), gp = gamma.storage(), bp = beta.storage();
    const bool batch_stats = mode == NormMode::kTrain;
    GradientTape::current().record(y, [=](std::span<const double> gy) {
      std::vector<double> sum_gy(channels, 0.0), sum_gy_xhat(channels, 0.0);
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < channels; ++c) {
          const std::size_t base = (b * channels + c) * t_len;
          for (std::size_t t = 0; t < t_len; ++t) {
            sum_gy[c] += gy[base + t];
            sum_gy_xhat[c] += gy[base + t] * (*xhat)[base + t];
          }
        }
      }
      if (bp->requires_grad) {
        auto& gb = grad_of(bp);
        for (std::size_t c = 0; c < channels; ++c) gb[c] += sum_gy[c];
      }
      if (gp->requires_grad) {
        auto& gg = grad_of(gp);
        for (std::size_t c = 0; c < channels; ++c) gg[c] += sum_gy_xhat[c];
      }
      if (xp->requires_grad) {
        auto& gx = grad_of(xp);
        const double inv_count = 1.0 / static_cast<double>(count);
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t base = (b * channels + c) * t_len;
            const double scale_c = gp->data[c] * inv_std[c];
            for (std::size_t t = 0; t < t_len; ++t) {
              double v = gy[base + t];
              if (batch_stats) v -= (sum_gy[c] + (*xhat)[base + t] * sum_gy_xhat[c]) * inv_count;
              gx[base + t] += scale_c * v;
            }
          }
        }
      }
    });
  }
  return y;
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank("global_avg_pool", x, 3);
  const std::size_t n = x.dim(0), channels = x.dim(1), t_len = x.dim(2);
  const auto xs = x.data();
  std::vector<double> out(n * channels);
  for (std::size_t i = 0; i < n * channels; ++i) {
    double s = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) s += xs[i * t_len + t];
    out[i] = s / static_cast<double>(t_len);
  }
  const bool track = tracking({&x});
  Tensor y = make_output({n, channels}, std::move(out), track);
  if (track) {
    StoragePtr xp = x.storage();
    GradientTape::current().record(y, [xp, n, channels, t_len](std::span<const double> gy) {
      auto& gx = grad_of(xp);
      const double inv = 1.0 / static_cast<double>(t_len);
      for (std::size_t i = 0; i < n * channels; ++i) {
        for (std::size_t t = 0; t < t_len; ++t) gx[i * t_len + t] += gy[i] * inv;
      }
    });
  }
  return y;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank("linear", x, 2);
  require_rank("linear", weight, 2);
  require_rank("linear", bias, 1);
  const std::size_t n = x.dim(0), e = x.dim(1), c = weight.dim(0);
  if (weight.dim(1) != e) {
    throw DimensionError("linear: input width " + std::to_string(e) + " does not match weight " +
                         shape_to_string(weight.shape()));
  }
  if (bias.dim(0) != c) throw DimensionError("linear: bias length does not match output width");

  std::vector<double> out(n * c);
  RowMap ymat(out.data(), n, c);
  ymat.noalias() = ConstRowMap(x.data().data(), n, e) * ConstRowMap(weight.data().data(), c, e).transpose();
  const auto bs = bias.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) ymat(i, j) += bs[j];
  }
  const bool track = tracking({&x, &weight, &bias});
  Tensor y = make_output({n, c}, std::move(out), track);
  if (track) {
    StoragePtr xp = x.storage(), wp = weight.storage(), bp = bias.storage();
    GradientTape::current().record(y, [=](std::span<const double> gy) {
      ConstRowMap gmat(gy.data(), n, c);
      if (xp->requires_grad) {
        RowMap(grad_of(xp).data(), n, e).noalias() += gmat * ConstRowMap(wp->data.data(), c, e);
      }
      if (wp->requires_grad) {
        RowMap(grad_of(wp).data(), c, e).noalias() += gmat.transpose() * ConstRowMap(xp->data.data(), n, e);
      }
      if (bp->requires_grad) {
        auto& gb = grad_of(bp);
        for (std::size_t j = 0; j < c; ++j) gb[j] += gmat.col(j).sum();
      }
    });
  }
  return y;
}

Tensor log_softmax(const Tensor& x) {
  require_rank("log_softmax", x, 2);
  const std::size_t n = x.dim(0), c = x.dim(1);
  const auto xs = x.data();
  std::vector<double> out(n * c);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = xs.data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(row[j] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = row[j] - lse;
  }
  const bool track = tracking({&x});
  Tensor y = make_output({n, c}, std::move(out), track);
  if (track) {
    StoragePtr xp = x.storage(), yp = y.storage();
    GradientTape::current().record(y, [xp, yp, n, c](std::span<const double> gy) {
      auto& gx = grad_of(xp);
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += gy[i * c + j];
        for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += gy[i * c + j] - std::exp(yp->data[i * c + j]) * s;
      }
    });
  }
  return y;
}

Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b) {
  require_rank("pairwise_sq_dist", a, 2);
  require_rank("pairwise_sq_dist", b, 2);
  const std::size_t n = a.dim(0), c = b.dim(0), e = a.dim(1);
  if (b.dim(1) != e) {
    throw DimensionError("pairwise_sq_dist: embedding widths differ " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
  const auto as = a.data();
  const auto bs = b.data();
  std::vector<double> out(n * c);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      double s = 0.0;
      for (std::size_t d = 0; d < e; ++d) {
        const double diff = as[i * e + d] - bs[j * e + d];
        s += diff * diff;
      }
      out[i * c + j] = s;
    }
  }
  const bool track = tracking({&a, &b});
  Tensor y = make_output({n, c}, std::move(out), track);
  if (track) {
    StoragePtr ap = a.storage(), bp = b.storage();
    GradientTape::current().record(y, [ap, bp, n, c, e](std::span<const double> gy) {
      std::vector<double>* ga = ap->requires_grad ? &grad_of(ap) : nullptr;
      std::vector<double>* gb = bp->requires_grad ? &grad_of(bp) : nullptr;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          const double w = 2.0 * gy[i * c + j];
          if (w == 0.0) continue;
          for (std::size_t d = 0; d < e; ++d) {
            const double diff = ap->data[i * e + d] - bp->data[j * e + d];
            if (ga) (*ga)[i * e + d] += w * diff;
            if (gb) (*gb)[j * e + d] -= w * diff;
          }
        }
      }
    });
  }
  return y;
}

Tensor nll_mean(const Tensor& logp, std::span<const int> targets) {
  require_rank("nll_mean", logp, 2);
  const std::size_t n = logp.dim(0), c = logp.dim(1);
  if (targets.size() != n) {
    throw DimensionError("nll_mean: " + std::to_string(targets.size()) + " targets for " + std::to_string(n) +
                         " rows");
  }
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= c) {
      throw ArgumentError("nll_mean: target " + std::to_string(t) + " outside [0," + std::to_string(c) + ")");
    }
  }
  const auto ls = logp.data();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total -= ls[i * c + static_cast<std::size_t>(targets[i])];
  total /= static_cast<double>(n);
  const bool track = tracking({&logp});
  Tensor y = make_output({1}, {total}, track);
  if (track) {
    StoragePtr lp = logp.storage();
    std::vector<int> tgt(targets.begin(), targets.end());
    GradientTape::current().record(y, [lp, tgt, n, c](std::span<const double> gy) {
      auto& g = grad_of(lp);
      const double w = gy[0] / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) g[i * c + static_cast<std::size_t>(tgt[i])] -= w;
    });
  }
  return y;
}

}  // namespace cosco
