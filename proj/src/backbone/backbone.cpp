#include "cosco/backbone.hpp"

#include <algorithm>
#include <cmath>

#include "cosco/errors.hpp"
#include "cosco/random.hpp"

namespace cosco {

namespace {

std::string block_prefix(std::size_t block) { return "block" + std::to_string(block + 1); }

std::string conv_name(std::size_t block, std::size_t stage) {
  return block_prefix(block) + ".conv" + std::to_string(stage + 1);
}

std::string bn_name(std::size_t block, std::size_t stage) {
  return block_prefix(block) + ".bn" + std::to_string(stage + 1);
}

std::string shortcut_conv_name(std::size_t block) { return block_prefix(block) + ".shortcut.conv"; }
std::string shortcut_bn_name(std::size_t block) { return block_prefix(block) + ".shortcut.bn"; }

Tensor kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::vector<double> values(shape_numel(shape));
  for (double& v : values) v = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(values), true);
}

}  // namespace

void BackboneConfig::validate() const {
  if (in_channels < 1) throw ConfigError("backbone needs at least one input channel");
  if (block_widths.size() != 3) throw ConfigError("backbone has exactly three residual blocks");
  if (kernel_sizes.empty()) throw ConfigError("backbone needs at least one kernel size per block");
  for (std::size_t w : block_widths) {
    if (w == 0) throw ConfigError("block widths must be positive");
  }
  for (std::size_t k : kernel_sizes) {
    if (k == 0) throw ConfigError("kernel sizes must be positive");
  }
}

std::size_t Model::num_classes() const {
  if (!num_classes_) throw ConfigError("model has no classification head");
  return *num_classes_;
}

Tensor& Model::param(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ArgumentError("unknown parameter '" + name + "'");
  return params_[it->second].value;
}

const Tensor& Model::param(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ArgumentError("unknown parameter '" + name + "'");
  return params_[it->second].value;
}

std::size_t Model::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.value.numel();
  return total;
}

void Model::add_param(const std::string& name, Tensor value) {
  if (std::any_of(params_.begin(), params_.end(), [&](const Parameter& p) { return p.name == name; })) {
    throw ConfigError("duplicate parameter name '" + name + "'");
  }
  params_.push_back(Parameter{name, std::move(value)});
}

void Model::finalize() {
  std::sort(params_.begin(), params_.end(), [](const Parameter& a, const Parameter& b) { return a.name < b.name; });
  index_.clear();
  for (std::size_t i = 0; i < params_.size(); ++i) index_[params_[i].name] = i;
}

Model build_model(const BackboneConfig& config, std::uint64_t seed, bool with_linear_head, std::size_t num_classes) {
  config.validate();
  if (with_linear_head && num_classes < 2) {
    throw ConfigError("a classification head needs at least 2 classes, got " + std::to_string(num_classes));
  }
  Model model;
  model.config_ = config;
  Rng rng(seed);

  std::size_t in = config.in_channels;
  for (std::size_t b = 0; b < config.block_widths.size(); ++b) {
    const std::size_t width = config.block_widths[b];
    std::size_t stage_in = in;
    for (std::size_t s = 0; s < config.kernel_sizes.size(); ++s) {
      const std::size_t k = config.kernel_sizes[s];
      model.add_param(conv_name(b, s) + ".weight", kaiming_uniform({width, stage_in, k}, stage_in * k, rng));
      model.add_param(conv_name(b, s) + ".bias", Tensor::zeros({width}, true));
      model.add_param(bn_name(b, s) + ".gamma", Tensor::full({width}, 1.0, true));
      model.add_param(bn_name(b, s) + ".beta", Tensor::zeros({width}, true));
      model.stats_.emplace(bn_name(b, s), BatchNormStats(width));
      stage_in = width;
    }
    if (in != width) {
      model.add_param(shortcut_conv_name(b) + ".weight", kaiming_uniform({width, in, 1}, in, rng));
      model.add_param(shortcut_conv_name(b) + ".bias", Tensor::zeros({width}, true));
      model.add_param(shortcut_bn_name(b) + ".gamma", Tensor::full({width}, 1.0, true));
      model.add_param(shortcut_bn_name(b) + ".beta", Tensor::zeros({width}, true));
      model.stats_.emplace(shortcut_bn_name(b), BatchNormStats(width));
    }
    in = width;
  }

  if (with_linear_head) {
    const std::size_t e = config.embedding_size();
    const double bound = 1.0 / std::sqrt(static_cast<double>(e));
    std::vector<double> w(num_classes * e);
    for (double& v : w) v = rng.uniform(-bound, bound);
    model.add_param("head.weight", Tensor::from({num_classes, e}, std::move(w), true));
    model.add_param("head.bias", Tensor::zeros({num_classes}, true));
    model.num_classes_ = num_classes;
  }
  model.finalize();
  return model;
}

Tensor Model::block_forward(std::size_t b, const Tensor& x, NormMode mode) {
  Tensor h = x;
  const std::size_t stages = config_.kernel_sizes.size();
  for (std::size_t s = 0; s < stages; ++s) {
    const std::string conv = conv_name(b, s);
    const std::string bn = bn_name(b, s);
    h = conv1d(h, param(conv + ".weight"), param(conv + ".bias"));
    h = batchnorm1d(h, param(bn + ".gamma"), param(bn + ".beta"), stats_.at(bn), mode, update_stats_);
    if (s + 1 < stages) h = relu(h);
  }
  Tensor shortcut = x;
  if (stats_.count(shortcut_bn_name(b))) {
    const std::string conv = shortcut_conv_name(b);
    const std::string bn = shortcut_bn_name(b);
    shortcut = conv1d(x, param(conv + ".weight"), param(conv + ".bias"));
    shortcut = batchnorm1d(shortcut, param(bn + ".gamma"), param(bn + ".beta"), stats_.at(bn), mode, update_stats_);
  }
  return relu(add(h, shortcut));
}

Tensor Model::forward_embed(const Tensor& x, NormMode mode) {
  if (x.rank() != 3) throw DimensionError("forward_embed expects [N,M,T], got " + shape_to_string(x.shape()));
  if (x.dim(1) != config_.in_channels) {
    throw DimensionError("forward_embed: input has " + std::to_string(x.dim(1)) + " channels, model expects " +
                         std::to_string(config_.in_channels));
  }
  Tensor h = x;
  for (std::size_t b = 0; b < config_.block_widths.size(); ++b) h = block_forward(b, h, mode);
  return global_avg_pool(h);
}

Tensor Model::forward_logits(const Tensor& x, NormMode mode) {
  if (!has_head()) throw ConfigError("forward_logits on a model built without a classification head");
  return linear(forward_embed(x, mode), param("head.weight"), param("head.bias"));
}

Model Model::clone() const {
  Model copy;
  copy.config_ = config_;
  copy.num_classes_ = num_classes_;
  copy.update_stats_ = update_stats_;
  for (const auto& p : params_) {
    Tensor v = p.value.clone();
    v.set_requires_grad(true);
    copy.params_.push_back(Parameter{p.name, std::move(v)});
  }
  for (const auto& [name, s] : stats_) {
    BatchNormStats st(s.running_mean.numel());
    st.running_mean = s.running_mean.clone();
    st.running_var = s.running_var.clone();
    copy.stats_.emplace(name, std::move(st));
  }
  copy.finalize();
  return copy;
}

bool Model::identical_to(const Model& other) const {
  if (params_.size() != other.params_.size() || stats_.size() != other.stats_.size()) return false;
  auto same = [](const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
  };
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != other.params_[i].name || !same(params_[i].value, other.params_[i].value)) return false;
  }
  for (const auto& [name, s] : stats_) {
    auto it = other.stats_.find(name);
    if (it == other.stats_.end()) return false;
    if (!same(s.running_mean, it->second.running_mean) || !same(s.running_var, it->second.running_var)) return false;
  }
  return true;
}

}  // namespace cosco
