#pragma once

#include <span>
#include <vector>

#include "cosco/tensor.hpp"

namespace cosco::loss {

/// Per-class mean embeddings. Row j of `kappa` belongs to class_ids[j]; ids ascend.
struct Centroids {
  Tensor kappa;
  std::vector<int> class_ids;
  std::vector<std::size_t> counts;

  /// Row index of a class id, or -1 when the class has no centroid.
  int row_of(int class_id) const;
};

enum class Metric { kSquaredEuclidean, kEuclideanEps };

inline constexpr double kEuclideanEps = 1e-12;

struct DistanceMatrix {
  Tensor d;  // [N,C], nonnegative
  Metric metric = Metric::kSquaredEuclidean;
};

/// Mean embedding of each class present in `labels`. Differentiable in `emb`.
Centroids class_centroids(const Tensor& emb, std::span<const int> labels);

DistanceMatrix pairwise_distances(const Tensor& emb, const Tensor& kappa,
                                  Metric metric = Metric::kSquaredEuclidean);

/// Mean over samples of -log softmax(-D)[i, targets[i]], where targets index rows of the
/// centroid matrix (columns of D).
Tensor proto_loss(const DistanceMatrix& dist, std::span<const int> targets);

/// Convenience: centroids from the batch itself, distances to them and the loss on top.
Tensor proto_loss_from_embeddings(const Tensor& emb, std::span<const int> labels,
                                  Metric metric = Metric::kSquaredEuclidean);

/// Nearest centroid by squared euclidean distance; ties go to the smallest class id.
std::vector<int> proto_predict(const Tensor& emb, const Centroids& centroids);

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Row-wise argmax of [N,C]; ties go to the smallest index.
std::vector<int> argmax_rows(const Tensor& scores);

}  // namespace cosco::loss
