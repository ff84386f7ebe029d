#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cosco/backbone.hpp"
#include "cosco/data.hpp"
#include "cosco/loss.hpp"

namespace cosco::harness {

/// cosco = SAM + prototypical loss; sam_ce drops the prototypical loss; sgd_ce drops both.
enum class Method { kCosco, kSamCe, kSgdProto, kSgdCe, kNnEd };

std::string method_name(Method m);
Method parse_method(const std::string& name);
bool uses_sam(Method m);
bool uses_proto(Method m);
bool is_trained(Method m);

struct ExperimentConfig {
  std::string dataset;
  std::size_t k = 10;
  Method method = Method::kCosco;
  double rho = 0.1;
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t epochs = 100;
  std::uint64_t base_seed = 0;
  std::size_t num_seeds = 5;  // trial i runs with seed base_seed + i
  loss::Metric metric = loss::Metric::kSquaredEuclidean;
  std::size_t eval_batch = 64;  // eval-mode forwards are chunked; results do not depend on it

  std::vector<std::uint64_t> seeds() const;
  void validate() const;
};

/// Training pool (where k-shot splits are drawn from) and held-out test set, normalized.
struct ExperimentData {
  data::MtsDataset train_pool;
  data::MtsDataset test;
};

/// Default synthetic fixture: 3 sinusoid classes, M=2, T=64, noise 0.3.
ExperimentData synthetic_experiment(double noise_sigma = 0.3, std::size_t classes = 3, std::size_t channels = 2,
                                    std::size_t length = 64);

/// Resolves `spec` to data. Accepts "synthetic", a registry name, a dataset directory, or a
/// path to a *_TRAIN.ts file. Names are looked up in `data_root`'s registry.txt when
/// present, else under data_root/<name>/<name>_{TRAIN,TEST}.ts.
ExperimentData load_experiment(const std::string& spec, const std::string& data_root);

/// $COSCO_DATA_ROOT, falling back to the bundled data directory.
std::string default_data_root();

struct TrainResult {
  Model model;
  std::vector<double> loss_trace;  // training loss at the start of each epoch
};

/// Full-batch training on the split: one optimizer step per epoch. The split seed also
/// seeds the weight initialization. Numeric failures are rethrown with the epoch index.
TrainResult train(const ExperimentConfig& config, const data::FewShotSplit& split, const data::MtsDataset& pool);

/// Eval-mode embeddings [N,E], computed in chunks of `batch` instances.
Tensor embed_eval(Model& model, const Tensor& x, std::size_t batch = 64);

/// Prototypical methods: nearest centroid of the k-shot embeddings; cross-entropy methods:
/// argmax of the head. Returns accuracy over the whole test set.
double evaluate(Model& model, const data::FewShotSplit& split, const ExperimentData& data, Method method,
                std::size_t eval_batch = 64);

/// 1-NN with flattened euclidean distance; ties go to the lowest training index.
double nn_ed_baseline(const data::FewShotSplit& split, const ExperimentData& data);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

struct TrialResult {
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::vector<double> loss_trace;
  double seconds = 0.0;
  std::uint64_t split_hash = 0;
};

struct TrialFailure {
  std::uint64_t seed = 0;
  std::string message;
};

struct TrialsSummary {
  double mean = 0.0;
  double std = 0.0;  // population std over completed trials
  std::vector<TrialResult> trials;
  std::vector<TrialFailure> failures;
};

/// Per seed: fresh split, fresh model, train, evaluate. Failed trials are reported and
/// left out of the aggregate.
TrialsSummary run_trials(const ExperimentConfig& config, const ExperimentData& data);

/// methods x datasets accuracy matrix (means, with std over seeds when known).
struct ResultsTable {
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  std::vector<std::vector<std::optional<double>>> accuracy;  // [method][dataset]
  std::vector<std::vector<std::optional<double>>> stddev;    // same layout, may be empty

  void set(const std::string& method, const std::string& dataset, double acc, std::optional<double> sd = {});
  std::size_t method_index(const std::string& method) const;
};

enum class TieRule {
  kAverage,      // tied methods share the mean of their positions
  kCompetition,  // tied methods all get the best position ("1224")
};

/// Rank of every method on one dataset, 1 = highest accuracy.
std::vector<double> rank_row(std::span<const double> accuracies, TieRule rule = TieRule::kAverage);

/// Per-method mean rank over datasets. Any missing cell is an ArgumentError.
std::vector<double> average_rank(const ResultsTable& table, TieRule rule = TieRule::kAverage);

/// Wide CSV: header `dataset,<method>...`, one row per dataset.
ResultsTable read_results_csv(const std::string& path);
void write_results_csv(const ResultsTable& table, const std::string& path);

/// JSON record of one (dataset, method) run: config echo, trials, aggregate. Wall-clock
/// timings go to a sibling `.timing.json` so the record itself is reproducible.
void write_run_record(const ExperimentConfig& config, const TrialsSummary& summary, const std::string& path);

struct AblationResult {
  ResultsTable table;  // 3 methods x 1 dataset
  std::vector<double> ranks;
  std::vector<TrialsSummary> arms;  // cosco, sam_ce, sgd_ce
};

/// cosco, sam_ce and sgd_ce on identical seeds (hence identical splits).
AblationResult ablate(const ExperimentConfig& base, const ExperimentData& data);

}  // namespace cosco::harness
