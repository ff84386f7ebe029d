#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>

#include "cosco/errors.hpp"
#include "cosco/harness.hpp"
#include "cosco/optim.hpp"

#ifndef COSCO_DEFAULT_DATA_DIR
#define COSCO_DEFAULT_DATA_DIR "data"
#endif

namespace cosco::harness {

namespace fs = std::filesystem;

std::string method_name(Method m) {
  switch (m) {
    case Method::kCosco: return "cosco";
    case Method::kSamCe: return "sam_ce";
    case Method::kSgdProto: return "sgd_proto";
    case Method::kSgdCe: return "sgd_ce";
    case Method::kNnEd: return "nn_ed";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kCosco, Method::kSamCe, Method::kSgdProto, Method::kSgdCe, Method::kNnEd}) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("unknown method '" + name + "' (expected cosco, sam_ce, sgd_proto, sgd_ce or nn_ed)");
}

bool uses_sam(Method m) { return m == Method::kCosco || m == Method::kSamCe; }
bool uses_proto(Method m) { return m == Method::kCosco || m == Method::kSgdProto; }
bool is_trained(Method m) { return m != Method::kNnEd; }

std::vector<std::uint64_t> ExperimentConfig::seeds() const {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < num_seeds; ++i) out.push_back(base_seed + i);
  return out;
}

void ExperimentConfig::validate() const {
  if (k == 0) throw ConfigError("k must be positive");
  if (num_seeds == 0) throw ConfigError("at least one seed is required");
  if (rho < 0.0) throw ConfigError("rho must be nonnegative");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0,1)");
  if (eval_batch == 0) throw ConfigError("eval batch must be positive");
}

ExperimentData synthetic_experiment(double noise_sigma, std::size_t classes, std::size_t channels,
                                    std::size_t length) {
  ExperimentData d;
  d.train_pool = data::znormalize(data::synth_dataset(classes, 20, channels, length, noise_sigma, 1001));
  d.test = data::znormalize(data::synth_dataset(classes, 50, channels, length, noise_sigma, 2002));
  return d;
}

std::string default_data_root() {
  if (const char* env = std::getenv("COSCO_DATA_ROOT"); env && *env) return env;
  return COSCO_DEFAULT_DATA_DIR;
}

namespace {

ExperimentData load_pair(const fs::path& train_path, const fs::path& test_path, std::optional<bool> audio) {
  ExperimentData d;
  d.train_pool = data::parse_ts_file(train_path.string());
  d.test = data::parse_ts_file(test_path.string());
  if (audio) {
    d.train_pool.is_audio = *audio;
    d.test.is_audio = *audio;
  }
  if (d.train_pool.class_names != d.test.class_names) {
    throw ConfigError("train and test files declare different class labels: " + train_path.string());
  }
  if (d.train_pool.num_channels() != d.test.num_channels()) {
    throw ConfigError("train and test files have different dimension counts: " + train_path.string());
  }
  // Both splits share one padded length so a single model sees consistent inputs.
  const std::size_t t_len = std::max(d.train_pool.length(), d.test.length());
  for (auto* ds : {&d.train_pool, &d.test}) {
    if (ds->length() == t_len) continue;
    const std::size_t n = ds->size(), m = ds->num_channels(), old = ds->length();
    std::vector<double> values(n * m * t_len, 0.0);
    const auto xs = ds->x.data();
    for (std::size_t r = 0; r < n * m; ++r) {
      std::copy_n(xs.begin() + static_cast<std::ptrdiff_t>(r * old), old,
                  values.begin() + static_cast<std::ptrdiff_t>(r * t_len));
    }
    ds->x = Tensor::from({n, m, t_len}, std::move(values));
  }
  d.train_pool = data::znormalize(d.train_pool);
  d.test = data::znormalize(d.test);
  return d;
}

fs::path sibling_test(const fs::path& train) {
  std::string name = train.filename().string();
  const auto pos = name.rfind("_TRAIN");
  if (pos == std::string::npos) throw ConfigError("expected a *_TRAIN.ts file: " + train.string());
  name.replace(pos, 6, "_TEST");
  return train.parent_path() / name;
}

}  // namespace

ExperimentData load_experiment(const std::string& spec, const std::string& data_root) {
  if (spec == "synthetic") return synthetic_experiment();

  const fs::path as_path(spec);
  if (fs::is_regular_file(as_path)) return load_pair(as_path, sibling_test(as_path), std::nullopt);
  if (fs::is_directory(as_path)) {
    const std::string name = as_path.filename().string();
    return load_pair(as_path / (name + "_TRAIN.ts"), as_path / (name + "_TEST.ts"), std::nullopt);
  }

  const fs::path root(data_root);
  const fs::path registry = root / "registry.txt";
  if (fs::is_regular_file(registry)) {
    const auto entries = data::load_registry(registry.string());
    if (auto it = entries.find(spec); it != entries.end()) {
      const fs::path dir(it->second.path);
      return load_pair(dir / (spec + "_TRAIN.ts"), dir / (spec + "_TEST.ts"), it->second.is_audio);
    }
  }
  const fs::path dir = root / spec;
  if (!fs::is_regular_file(dir / (spec + "_TRAIN.ts"))) {
    throw ConfigError("dataset '" + spec + "' not found under " + root.string());
  }
  return load_pair(dir / (spec + "_TRAIN.ts"), dir / (spec + "_TEST.ts"), std::nullopt);
}

namespace {

std::uint64_t init_seed(std::uint64_t seed) {
  // splitmix64 finalizer keeps the weight-init stream distinct from the split stream.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

TrainResult train(const ExperimentConfig& config, const data::FewShotSplit& split, const data::MtsDataset& pool) {
  if (!is_trained(config.method)) throw ConfigError(method_name(config.method) + " has no trainable model");
  config.validate();
  const data::MtsDataset batch = pool.subset(split.train_indices);
  BackboneConfig bc;
  bc.in_channels = pool.num_channels();
  const bool head = !uses_proto(config.method);
  TrainResult result{build_model(bc, init_seed(split.seed), head, pool.num_classes()), {}};
  Model& model = result.model;

  const Tensor& x = batch.x;
  const std::vector<int>& labels = batch.y;
  const bool proto = uses_proto(config.method);
  const loss::Metric metric = config.metric;
  optim::LossFn loss_fn = [&](optim::StatUpdate stats) {
    model.set_update_running_stats(stats == optim::StatUpdate::kUpdate);
    if (proto) return loss::proto_loss_from_embeddings(model.forward_embed(x, NormMode::kTrain), labels, metric);
    return loss::cross_entropy(model.forward_logits(x, NormMode::kTrain), labels);
  };

  optim::SgdState sgd{config.lr, config.momentum, {}};
  optim::SamConfig sam;
  sam.rho = config.rho;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    try {
      if (uses_sam(config.method)) {
        optim::sam_step(model.parameters(), loss_fn, sam, sgd);
        result.loss_trace.push_back(sam.last_loss);
      } else {
        result.loss_trace.push_back(optim::sgd_descent_step(model.parameters(), loss_fn, sgd));
      }
    } catch (const NumericError& e) {
      model.set_update_running_stats(true);
      throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
    }
  }
  model.set_update_running_stats(true);
  return result;
}

namespace {

template <typename Forward>
Tensor eval_chunks(const Tensor& x, std::size_t batch, Forward forward) {
  NoGradGuard guard;
  const std::size_t n = x.dim(0), m = x.dim(1), t_len = x.dim(2);
  if (n <= batch) return forward(x);
  std::vector<double> out;
  std::size_t width = 0;
  const auto xs = x.data();
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t count = std::min(batch, n - start);
    std::vector<double> chunk(xs.begin() + static_cast<std::ptrdiff_t>(start * m * t_len),
                              xs.begin() + static_cast<std::ptrdiff_t>((start + count) * m * t_len));
    Tensor y = forward(Tensor::from({count, m, t_len}, std::move(chunk)));
    width = y.dim(1);
    out.insert(out.end(), y.data().begin(), y.data().end());
  }
  return Tensor::from({n, width}, std::move(out));
}

}  // namespace

Tensor embed_eval(Model& model, const Tensor& x, std::size_t batch) {
  return eval_chunks(x, batch, [&](const Tensor& chunk) { return model.forward_embed(chunk, NormMode::kEval); });
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw ArgumentError("accuracy needs equally sized, non-empty label lists");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double evaluate(Model& model, const data::FewShotSplit& split, const ExperimentData& data, Method method,
                std::size_t eval_batch) {
  std::vector<int> predicted;
  if (uses_proto(method)) {
    const data::MtsDataset support = data.train_pool.subset(split.train_indices);
    const Tensor support_emb = embed_eval(model, support.x, eval_batch);
    loss::Centroids centroids = [&] {
      NoGradGuard guard;
      return loss::class_centroids(support_emb, support.y);
    }();
    predicted = loss::proto_predict(embed_eval(model, data.test.x, eval_batch), centroids);
  } else {
    const Tensor logits = eval_chunks(data.test.x, eval_batch, [&](const Tensor& chunk) {
      return model.forward_logits(chunk, NormMode::kEval);
    });
    predicted = loss::argmax_rows(logits);
  }
  return accuracy(predicted, data.test.y);
}

double nn_ed_baseline(const data::FewShotSplit& split, const ExperimentData& data) {
  const auto& pool = data.train_pool;
  const auto& test = data.test;
  if (pool.num_channels() != test.num_channels() || pool.length() != test.length()) {
    throw DimensionError("nn_ed_baseline: train and test series have different shapes");
  }
  const std::size_t width = pool.num_channels() * pool.length();
  const auto train_x = pool.x.data();
  const auto test_x = test.x.data();
  std::vector<int> predicted(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    int label = 0;
    for (std::size_t idx : split.train_indices) {
      double d = 0.0;
      for (std::size_t j = 0; j < width; ++j) {
        const double diff = test_x[i * width + j] - train_x[idx * width + j];
        d += diff * diff;
      }
      if (d < best || (d == best && idx < best_idx)) {
        best = d;
        best_idx = idx;
        label = pool.y[idx];
      }
    }
    predicted[i] = label;
  }
  return accuracy(predicted, test.y);
}

TrialsSummary run_trials(const ExperimentConfig& config, const ExperimentData& data) {
  config.validate();
  TrialsSummary summary;
  for (std::uint64_t seed : config.seeds()) {
    const auto start = std::chrono::steady_clock::now();
    try {
      const data::FewShotSplit split = data::sample_k_shot(data.train_pool, config.k, seed);
      TrialResult trial;
      trial.seed = seed;
      trial.split_hash = data::split_hash(split);
      if (is_trained(config.method)) {
        TrainResult trained = train(config, split, data.train_pool);
        trial.accuracy = evaluate(trained.model, split, data, config.method, config.eval_batch);
        trial.loss_trace = std::move(trained.loss_trace);
      } else {
        trial.accuracy = nn_ed_baseline(split, data);
      }
      trial.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      summary.trials.push_back(std::move(trial));
    } catch (const NumericError& e) {
      summary.failures.push_back(TrialFailure{seed, e.what()});
    }
  }
  if (!summary.trials.empty()) {
    double s = 0.0;
    for (const auto& t : summary.trials) s += t.accuracy;
    summary.mean = s / static_cast<double>(summary.trials.size());
    double ss = 0.0;
    for (const auto& t : summary.trials) ss += (t.accuracy - summary.mean) * (t.accuracy - summary.mean);
    summary.std = std::sqrt(ss / static_cast<double>(summary.trials.size()));
  }
  return summary;
}

AblationResult ablate(const ExperimentConfig& base, const ExperimentData& data) {
  AblationResult result;
  const std::string dataset = base.dataset.empty() ? data.train_pool.name : base.dataset;
  for (Method m : {Method::kCosco, Method::kSamCe, Method::kSgdCe}) {
    ExperimentConfig cfg = base;
    cfg.method = m;
    TrialsSummary summary = run_trials(cfg, data);
    if (summary.trials.empty()) {
      throw NumericError("ablation arm " + method_name(m) + ": every trial failed");
    }
    result.table.set(method_name(m), dataset, summary.mean, summary.std);
    result.arms.push_back(std::move(summary));
  }
  result.ranks = average_rank(result.table);
  return result;
}

}  // namespace cosco::harness
