#include "cosco/loss.hpp"

#include <algorithm>
#include <map>

#include "cosco/errors.hpp"
#include "cosco/ops.hpp"

namespace cosco::loss {

int Centroids::row_of(int class_id) const {
  auto it = std::lower_bound(class_ids.begin(), class_ids.end(), class_id);
  if (it == class_ids.end() || *it != class_id) return -1;
  return static_cast<int>(it - class_ids.begin());
}

Centroids class_centroids(const Tensor& emb, std::span<const int> labels) {
  if (!emb.defined() || emb.rank() != 2) throw DimensionError("class_centroids expects embeddings [N,E]");
  const std::size_t n = emb.dim(0);
  if (labels.empty() || n == 0) throw ArgumentError("class_centroids on an empty batch");
  if (labels.size() != n) {
    throw DimensionError("class_centroids: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) +
                         " embeddings");
  }

  std::map<int, std::size_t> counts;
  for (int y : labels) ++counts[y];
  Centroids out;
  for (const auto& [id, count] : counts) {
    out.class_ids.push_back(id);
    out.counts.push_back(count);
  }

  // kappa = A * emb with A[j,i] = 1/|class j| when labels[i] is class j.
  const std::size_t c = out.class_ids.size();
  std::vector<double> averaging(c * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(out.row_of(labels[i]));
    averaging[row * n + i] = 1.0 / static_cast<double>(out.counts[row]);
  }
  out.kappa = matmul(Tensor::from({c, n}, std::move(averaging)), emb);
  return out;
}

DistanceMatrix pairwise_distances(const Tensor& emb, const Tensor& kappa, Metric metric) {
  Tensor d = pairwise_sq_dist(emb, kappa);
  if (metric == Metric::kEuclideanEps) d = sqrt_eps(d, kEuclideanEps);
  return DistanceMatrix{std::move(d), metric};
}

Tensor proto_loss(const DistanceMatrix& dist, std::span<const int> targets) {
  if (dist.d.rank() != 2) throw DimensionError("proto_loss expects a [N,C] distance matrix");
  const std::size_t c = dist.d.dim(1);
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= c) {
      throw ArgumentError("proto_loss: label " + std::to_string(t) + " outside [0," + std::to_string(c) + ")");
    }
  }
  return nll_mean(log_softmax(scale(dist.d, -1.0)), targets);
}

Tensor proto_loss_from_embeddings(const Tensor& emb, std::span<const int> labels, Metric metric) {
  Centroids centroids = class_centroids(emb, labels);
  std::vector<int> rows(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) rows[i] = centroids.row_of(labels[i]);
  return proto_loss(pairwise_distances(emb, centroids.kappa, metric), rows);
}

std::vector<int> proto_predict(const Tensor& emb, const Centroids& centroids) {
  if (centroids.class_ids.empty()) throw ArgumentError("proto_predict with no centroids");
  const Tensor d = [&] {
    NoGradGuard guard;
    return pairwise_sq_dist(emb, centroids.kappa);
  }();
  const std::size_t n = d.dim(0), c = d.dim(1);
  const auto ds = d.data();
  std::vector<int> pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j) {
      if (ds[i * c + j] < ds[i * c + best]) best = j;
    }
    pred[i] = centroids.class_ids[best];
  }
  return pred;
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  return nll_mean(log_softmax(logits), labels);
}

std::vector<int> argmax_rows(const Tensor& scores) {
  if (scores.rank() != 2) throw DimensionError("argmax_rows expects [N,C]");
  const std::size_t n = scores.dim(0), c = scores.dim(1);
  const auto s = scores.data();
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j) {
      if (s[i * c + j] > s[i * c + best]) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace cosco::loss
