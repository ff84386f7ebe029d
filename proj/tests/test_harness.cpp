#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "cosco/errors.hpp"
#include "cosco/harness.hpp"
#include "cosco/random.hpp"

using namespace cosco;
using namespace cosco::harness;
namespace fs = std::filesystem;

namespace {

// Small enough that a few epochs of the full-width backbone run in well under a second.
ExperimentData tiny_data() {
  return {data::znormalize(data::synth_dataset(3, 4, 2, 16, 0.3, 1)),
          data::znormalize(data::synth_dataset(3, 3, 2, 16, 0.3, 2))};
}

ExperimentConfig tiny_config(Method m, std::size_t epochs = 2) {
  ExperimentConfig c;
  c.dataset = "tiny";
  c.k = 2;
  c.method = m;
  c.epochs = epochs;
  c.num_seeds = 2;
  return c;
}

std::vector<double> flat_params(const Model& m) {
  std::vector<double> out;
  for (const auto& p : m.parameters()) out.insert(out.end(), p.value.data().begin(), p.value.data().end());
  return out;
}

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(MethodTest, NamesRoundTripAndComponents) {
  for (Method m : {Method::kCosco, Method::kSamCe, Method::kSgdProto, Method::kSgdCe, Method::kNnEd}) {
    EXPECT_EQ(parse_method(method_name(m)), m);
  }
  EXPECT_TRUE(uses_sam(Method::kCosco) && uses_proto(Method::kCosco));
  EXPECT_TRUE(uses_sam(Method::kSamCe) && !uses_proto(Method::kSamCe));
  EXPECT_TRUE(!uses_sam(Method::kSgdCe) && !uses_proto(Method::kSgdCe));
  EXPECT_FALSE(is_trained(Method::kNnEd));
  EXPECT_THROW(parse_method("tapnet"), ConfigError);
}

TEST(ConfigTest, DefaultsAndValidation) {
  ExperimentConfig c;
  EXPECT_EQ(c.rho, 0.1);
  EXPECT_EQ(c.lr, 0.01);
  EXPECT_EQ(c.momentum, 0.9);
  EXPECT_EQ(c.epochs, 100u);
  EXPECT_EQ(c.seeds(), (std::vector<std::uint64_t>{0, 1, 2, 3, 4}));
  c.base_seed = 10;
  c.num_seeds = 2;
  EXPECT_EQ(c.seeds(), (std::vector<std::uint64_t>{10, 11}));
  c.momentum = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.momentum = 0.9;
  c.rho = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(AccuracyTest, Examples) {
  EXPECT_EQ(accuracy(std::vector<int>{1, 0, 2}, std::vector<int>{1, 0, 2}), 1.0);
  EXPECT_EQ(accuracy(std::vector<int>{0, 0, 0, 0}, std::vector<int>{0, 1, 0, 1}), 0.5);
  EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), ArgumentError);
  EXPECT_THROW(accuracy(std::vector<int>{0}, std::vector<int>{0, 1}), ArgumentError);
}

TEST(TrainTest, ZeroEpochsReturnsInitialModel) {
  const ExperimentData data = tiny_data();
  const auto split = data::sample_k_shot(data.train_pool, 2, 3);
  const TrainResult a = train(tiny_config(Method::kCosco, 0), split, data.train_pool);
  const TrainResult b = train(tiny_config(Method::kCosco, 0), split, data.train_pool);
  EXPECT_TRUE(a.model.identical_to(b.model));
  EXPECT_TRUE(a.loss_trace.empty());
  TrainResult c = train(tiny_config(Method::kCosco, 1), split, data.train_pool);
  EXPECT_FALSE(a.model.identical_to(c.model));
}

TEST(TrainTest, SamCeAtRhoZeroMatchesSgdCe) {
  const ExperimentData data = tiny_data();
  const auto split = data::sample_k_shot(data.train_pool, 2, 4);
  ExperimentConfig sam = tiny_config(Method::kSamCe, 3), sgd = tiny_config(Method::kSgdCe, 3);
  sam.rho = 0.0;
  const TrainResult a = train(sam, split, data.train_pool);
  const TrainResult b = train(sgd, split, data.train_pool);
  const auto pa = flat_params(a.model), pb = flat_params(b.model);
  ASSERT_EQ(pa.size(), pb.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) worst = std::max(worst, std::abs(pa[i] - pb[i]));
  EXPECT_LE(worst, 1e-12);
  for (std::size_t e = 0; e < 3; ++e) EXPECT_NEAR(a.loss_trace[e], b.loss_trace[e], 1e-12);
}

TEST(TrainTest, NnEdIsNotTrainable) {
  const ExperimentData data = tiny_data();
  EXPECT_THROW(train(tiny_config(Method::kNnEd), data::sample_k_shot(data.train_pool, 1, 0), data.train_pool),
               ConfigError);
}

TEST(EvaluateTest, EmbedEvalDoesNotDependOnChunkSize) {
  const ExperimentData data = tiny_data();
  Model m = build_model(BackboneConfig{.in_channels = 2}, 0);
  const Tensor a = embed_eval(m, data.test.x, 64);
  const Tensor b = embed_eval(m, data.test.x, 2);
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-12);
}

TEST(EvaluateTest, AccuracyInUnitInterval) {
  const ExperimentData data = tiny_data();
  const auto split = data::sample_k_shot(data.train_pool, 2, 0);
  for (Method m : {Method::kCosco, Method::kSgdCe}) {
    TrainResult r = train(tiny_config(m, 1), split, data.train_pool);
    const double acc = evaluate(r.model, split, data, m);
    EXPECT_GE(acc, 0.0);
    EXPECT_LE(acc, 1.0);
  }
}

TEST(NnEdTest, Examples) {
  ExperimentData data = tiny_data();
  data.test = data.train_pool;  // every test series has an identical training series
  std::vector<std::size_t> all(data.train_pool.size());
  std::iota(all.begin(), all.end(), 0);
  data::FewShotSplit split{all, 4, 0};
  EXPECT_EQ(nn_ed_baseline(split, data), 1.0);

  // A single training series turns 1-NN into a constant predictor.
  data::FewShotSplit one{{5}, 1, 0};
  const int label = data.train_pool.y[5];
  const double freq = static_cast<double>(std::count(data.test.y.begin(), data.test.y.end(), label)) /
                      static_cast<double>(data.test.size());
  EXPECT_DOUBLE_EQ(nn_ed_baseline(one, data), freq);
}

TEST(NnEdTest, TiesGoToLowestTrainingIndex) {
  data::MtsDataset pool;
  pool.x = Tensor::from({2, 1, 1}, {-1.0, 1.0});
  pool.y = {1, 0};
  pool.class_names = {"a", "b"};
  pool.original_lengths = {1, 1};
  data::MtsDataset test = pool;
  test.x = Tensor::from({1, 1, 1}, {0.0});
  test.y = {1};
  test.original_lengths = {1};
  // Both training series are at distance 1; index 0 wins regardless of split order.
  EXPECT_EQ(nn_ed_baseline(data::FewShotSplit{{0, 1}, 1, 0}, ExperimentData{pool, test}), 1.0);
  EXPECT_EQ(nn_ed_baseline(data::FewShotSplit{{1, 0}, 1, 0}, ExperimentData{pool, test}), 1.0);
}

TEST(RunTrialsTest, AggregatesAndIsDeterministic) {
  const ExperimentData data = tiny_data();
  ExperimentConfig c = tiny_config(Method::kCosco, 2);
  c.num_seeds = 3;
  const TrialsSummary a = run_trials(c, data);
  const TrialsSummary b = run_trials(c, data);
  ASSERT_EQ(a.trials.size(), 3u);
  EXPECT_TRUE(a.failures.empty());
  double sum = 0.0, lo = 1.0, hi = 0.0;
  for (const auto& t : a.trials) {
    sum += t.accuracy;
    lo = std::min(lo, t.accuracy);
    hi = std::max(hi, t.accuracy);
  }
  const double mean = sum / 3.0;
  double var = 0.0;
  for (const auto& t : a.trials) var += (t.accuracy - mean) * (t.accuracy - mean);
  EXPECT_DOUBLE_EQ(a.mean, mean);
  EXPECT_NEAR(a.std, std::sqrt(var / 3.0), 1e-15);
  EXPECT_GE(a.mean, lo);
  EXPECT_LE(a.mean, hi);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std, b.std);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.trials[i].seed, i);
    EXPECT_EQ(a.trials[i].loss_trace, b.trials[i].loss_trace);
    EXPECT_EQ(a.trials[i].split_hash, b.trials[i].split_hash);
  }
  EXPECT_NE(a.trials[0].split_hash, a.trials[1].split_hash);
}

TEST(RunTrialsTest, SingleSeedHasZeroStd) {
  ExperimentConfig c = tiny_config(Method::kNnEd);
  c.num_seeds = 1;
  EXPECT_EQ(run_trials(c, tiny_data()).std, 0.0);
}

TEST(RunTrialsTest, NumericFailureIsRecorded) {
  ExperimentConfig c = tiny_config(Method::kSgdCe, 3);
  c.lr = 1e300;  // diverges on the second step
  c.num_seeds = 1;
  const TrialsSummary s = run_trials(c, tiny_data());
  EXPECT_TRUE(s.trials.empty());
  ASSERT_EQ(s.failures.size(), 1u);
  EXPECT_NE(s.failures[0].message.find("epoch"), std::string::npos) << s.failures[0].message;
}

TEST(RankTest, Examples) {
  EXPECT_EQ(rank_row(std::vector<double>{0.7}), (std::vector<double>{1.0}));
  EXPECT_EQ(rank_row(std::vector<double>{0.5, 0.5}), (std::vector<double>{1.5, 1.5}));
  EXPECT_EQ(rank_row(std::vector<double>{0.1, 0.9, 0.5}), (std::vector<double>{3, 1, 2}));
  EXPECT_EQ(rank_row(std::vector<double>{0.9, 0.5, 0.9, 0.5}), (std::vector<double>{1.5, 3.5, 1.5, 3.5}));
  EXPECT_EQ(rank_row(std::vector<double>{0.9, 0.5, 0.9, 0.4}, TieRule::kCompetition),
            (std::vector<double>{1, 3, 1, 4}));
}

TEST(RankTest, RowsSumToTriangularNumber) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.index(7);
    std::vector<double> acc(m);
    for (auto& a : acc) a = static_cast<double>(rng.index(4)) / 4.0;  // frequent ties
    const auto r = rank_row(acc);
    EXPECT_DOUBLE_EQ(std::accumulate(r.begin(), r.end(), 0.0), m * (m + 1) / 2.0);
  }
}

TEST(RankTest, AverageRankOverDatasets) {
  ResultsTable t;
  t.set("a", "d1", 0.9);
  t.set("b", "d1", 0.8);
  t.set("a", "d2", 0.7);
  t.set("b", "d2", 0.7);
  EXPECT_EQ(average_rank(t), (std::vector<double>{1.25, 1.75}));

  ResultsTable single;
  single.set("only", "d1", 0.3);
  single.set("only", "d2", 0.6);
  EXPECT_EQ(average_rank(single), (std::vector<double>{1.0}));

  t.set("c", "d1", 0.5);  // no d2 cell
  EXPECT_THROW(average_rank(t), ArgumentError);
  EXPECT_THROW(average_rank(ResultsTable{}), ArgumentError);
}

TEST(ResultsCsvTest, RoundTripAndMissingCells) {
  ResultsTable t;
  t.set("cosco", "BasicMotions", 1.0);
  t.set("sgd_ce", "BasicMotions", 0.975);
  t.set("cosco", "NATOPS", 0.1 + 0.2);
  t.set("sgd_ce", "NATOPS", 1.0 / 3.0);
  const auto path = temp_path("cosco_results_test.csv").string();
  write_results_csv(t, path);
  const ResultsTable back = read_results_csv(path);
  EXPECT_EQ(back.methods, t.methods);
  EXPECT_EQ(back.datasets, t.datasets);
  EXPECT_EQ(back.accuracy, t.accuracy);
  EXPECT_EQ(average_rank(back), average_rank(t));

  std::ofstream(path) << "dataset,a,b\nd1,0.5,\n";
  const ResultsTable holes = read_results_csv(path);
  EXPECT_FALSE(holes.accuracy[1][0].has_value());
  EXPECT_THROW(average_rank(holes), ArgumentError);

  std::ofstream(path) << "dataset,a,b\nd1,0.5,abc\n";
  EXPECT_THROW(read_results_csv(path), ArgumentError);
  std::ofstream(path) << "dataset,a,b\nd1,0.5\n";
  EXPECT_THROW(read_results_csv(path), ArgumentError);
  fs::remove(path);
}

TEST(RunRecordTest, DeterministicAndTimingSeparate) {
  const ExperimentData data = tiny_data();
  const ExperimentConfig c = tiny_config(Method::kCosco, 1);
  const auto p1 = temp_path("cosco_record_a.json"), p2 = temp_path("cosco_record_b.json");
  write_run_record(c, run_trials(c, data), p1.string());
  write_run_record(c, run_trials(c, data), p2.string());
  EXPECT_EQ(slurp(p1), slurp(p2));
  EXPECT_TRUE(fs::exists(temp_path("cosco_record_a.timing.json")));

  const auto j = nlohmann::json::parse(slurp(p1));
  EXPECT_EQ(j["config"]["method"], "cosco");
  EXPECT_EQ(j["trials"].size(), 2u);
  EXPECT_TRUE(j["trials"][0].contains("split_hash"));
  EXPECT_FALSE(j["trials"][0].contains("seconds"));
  for (const char* f : {"cosco_record_a.json", "cosco_record_b.json", "cosco_record_a.timing.json",
                        "cosco_record_b.timing.json"})
    fs::remove(temp_path(f));
}

TEST(AblateTest, ThreePairedArms) {
  const ExperimentData data = tiny_data();
  const AblationResult r = ablate(tiny_config(Method::kCosco, 1), data);
  EXPECT_EQ(r.table.methods, (std::vector<std::string>{"cosco", "sam_ce", "sgd_ce"}));
  ASSERT_EQ(r.arms.size(), 3u);
  for (std::size_t t = 0; t < 2; ++t) {
    EXPECT_EQ(r.arms[0].trials[t].split_hash, r.arms[1].trials[t].split_hash);
    EXPECT_EQ(r.arms[0].trials[t].split_hash, r.arms[2].trials[t].split_hash);
  }
  EXPECT_DOUBLE_EQ(std::accumulate(r.ranks.begin(), r.ranks.end(), 0.0), 6.0);
}

TEST(LoadExperimentTest, SyntheticAndErrors) {
  const ExperimentData d = load_experiment("synthetic", "/nonexistent");
  EXPECT_EQ(d.train_pool.x.shape(), (Shape{60, 2, 64}));
  EXPECT_EQ(d.test.x.shape(), (Shape{150, 2, 64}));
  EXPECT_THROW(load_experiment("NoSuchDataset", fs::temp_directory_path().string()), ConfigError);
}

TEST(LoadExperimentTest, ResolvesTrainFileAndDirectory) {
  const auto dir = temp_path("cosco_load_test") / "Mini";
  fs::create_directories(dir);
  data::MtsDataset ds = data::synth_dataset(2, 3, 1, 8, 0.2, 3);
  ds.name = "Mini";
  data::write_ts_file((dir / "Mini_TRAIN.ts").string(), ds);
  data::write_ts_file((dir / "Mini_TEST.ts").string(), ds);
  const ExperimentData by_file = load_experiment((dir / "Mini_TRAIN.ts").string(), "/nonexistent");
  const ExperimentData by_dir = load_experiment(dir.string(), "/nonexistent");
  const ExperimentData by_name = load_experiment("Mini", dir.parent_path().string());
  EXPECT_EQ(by_file.train_pool.x.shape(), (Shape{6, 1, 8}));
  EXPECT_TRUE(std::equal(by_file.test.x.data().begin(), by_file.test.x.data().end(), by_dir.test.x.data().begin()));
  EXPECT_TRUE(std::equal(by_file.test.x.data().begin(), by_file.test.x.data().end(), by_name.test.x.data().begin()));
  fs::remove_all(dir.parent_path());
}
