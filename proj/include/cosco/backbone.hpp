#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cosco/ops.hpp"
#include "cosco/tensor.hpp"

namespace cosco {

/// Residual 1D-conv encoder layout. Three blocks, each running its kernels in order.
struct BackboneConfig {
  std::size_t in_channels = 1;
  std::vector<std::size_t> block_widths{64, 128, 128};
  std::vector<std::size_t> kernel_sizes{8, 5, 3};

  std::size_t embedding_size() const { return block_widths.back(); }
  void validate() const;
};

/// The time-series ResNet encoder plus an optional linear classification head.
///
/// Parameters are kept sorted by name so iteration order (and anything reduced over it,
/// such as the global gradient norm) is reproducible. Models own their storage; copies
/// must be made explicitly through clone().
class Model {
 public:
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const BackboneConfig& config() const noexcept { return config_; }
  bool has_head() const noexcept { return num_classes_.has_value(); }
  std::size_t num_classes() const;

  ParameterList& parameters() noexcept { return params_; }
  const ParameterList& parameters() const noexcept { return params_; }
  Tensor& param(const std::string& name);
  const Tensor& param(const std::string& name) const;
  std::size_t parameter_count() const;

  std::map<std::string, BatchNormStats>& norm_stats() noexcept { return stats_; }
  const std::map<std::string, BatchNormStats>& norm_stats() const noexcept { return stats_; }

  /// When false, train-mode forwards normalize with batch statistics but leave the running
  /// statistics untouched.
  void set_update_running_stats(bool value) noexcept { update_stats_ = value; }
  bool update_running_stats() const noexcept { return update_stats_; }

  /// X [N,M,T] -> embeddings [N,E] (global average pool of the last block).
  Tensor forward_embed(const Tensor& x, NormMode mode);
  /// linear(forward_embed(x)); requires a head.
  Tensor forward_logits(const Tensor& x, NormMode mode);

  Model clone() const;

  /// Exact equality of parameter values and running statistics.
  bool identical_to(const Model& other) const;

 private:
  friend Model build_model(const BackboneConfig&, std::uint64_t, bool, std::size_t);
  friend Model load_checkpoint(const std::string&);
  Model() = default;

  void add_param(const std::string& name, Tensor value);
  void finalize();
  Tensor block_forward(std::size_t block, const Tensor& x, NormMode mode);

  BackboneConfig config_;
  std::optional<std::size_t> num_classes_;
  ParameterList params_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, BatchNormStats> stats_;
  bool update_stats_ = true;
};

/// Kaiming-uniform conv weights (bound sqrt(6/fan_in)), zero biases, gamma=1, beta=0.
/// Same seed yields bitwise-identical parameters.
Model build_model(const BackboneConfig& config, std::uint64_t seed, bool with_linear_head = false,
                  std::size_t num_classes = 0);

/// Text checkpoint: every parameter and running statistic as C99 hex floats, so a
/// save/load cycle reproduces the model bit for bit.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace cosco
