#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cosco/errors.hpp"
#include "cosco/gradcheck.hpp"
#include "cosco/harness.hpp"

namespace fs = std::filesystem;
using namespace cosco;
using namespace cosco::harness;

namespace {

constexpr int kExitNumeric = 3;

loss::Metric parse_metric(const std::string& s) {
  if (s == "squared") return loss::Metric::kSquaredEuclidean;
  if (s == "euclidean-eps") return loss::Metric::kEuclideanEps;
  throw ConfigError("unknown metric '" + s + "' (expected squared or euclidean-eps)");
}

TieRule parse_ties(const std::string& s) {
  if (s == "average") return TieRule::kAverage;
  if (s == "competition") return TieRule::kCompetition;
  throw ConfigError("unknown tie rule '" + s + "' (expected average or competition)");
}

std::string dataset_label(const std::string& spec) {
  const fs::path p(spec);
  if (fs::exists(p)) {
    std::string stem = p.stem().string();
    if (auto pos = stem.rfind("_TRAIN"); pos != std::string::npos) stem.erase(pos);
    return stem;
  }
  return spec;
}

void print_summary(const std::string& dataset, const std::string& method, const TrialsSummary& s) {
  std::printf("%-24s %-10s mean=%.4f std=%.4f trials=%zu failed=%zu\n", dataset.c_str(), method.c_str(), s.mean,
              s.std, s.trials.size(), s.failures.size());
  for (const auto& f : s.failures) std::printf("  seed %llu failed: %s\n", static_cast<unsigned long long>(f.seed),
                                               f.message.c_str());
}

void print_ranks(const ResultsTable& table, const std::vector<double>& ranks) {
  std::printf("average rank:");
  for (std::size_t i = 0; i < ranks.size(); ++i) std::printf(" %s=%.3f", table.methods[i].c_str(), ranks[i]);
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot multivariate time-series classification with SAM and prototypical loss"};
  app.require_subcommand(1);
  std::string data_root = default_data_root();
  app.add_option("--data-root", data_root, "Dataset root (default: $COSCO_DATA_ROOT or bundled data)");

  ExperimentConfig cfg;
  std::string method = "cosco", metric = "squared", out;
  std::uint64_t seed = 0;

  auto* train_cmd = app.add_subcommand("train", "Train and evaluate one method on one split");
  train_cmd->add_option("--dataset", cfg.dataset, "Dataset name, directory, or *_TRAIN.ts path")->required();
  train_cmd->add_option("--k", cfg.k, "Shots per class");
  train_cmd->add_option("--method", method, "cosco | sam_ce | sgd_proto | sgd_ce | nn_ed");
  train_cmd->add_option("--rho", cfg.rho, "SAM neighborhood radius");
  train_cmd->add_option("--lr", cfg.lr, "Learning rate");
  train_cmd->add_option("--momentum", cfg.momentum, "SGD momentum");
  train_cmd->add_option("--epochs", cfg.epochs, "Full-batch epochs");
  train_cmd->add_option("--seed", seed, "Split and init seed");
  train_cmd->add_option("--metric", metric, "squared | euclidean-eps");
  train_cmd->add_option("--out", out, "Write the run record to this JSON path");

  std::vector<std::string> datasets, methods{"cosco", "sgd_ce", "nn_ed"};
  std::size_t num_seeds = 5;
  std::string out_dir = "results";
  auto* bench_cmd = app.add_subcommand("bench", "Run trials over datasets x methods and write a results table");
  bench_cmd->add_option("--datasets", datasets, "Datasets")->required()->delimiter(',');
  bench_cmd->add_option("--k", cfg.k, "Shots per class");
  bench_cmd->add_option("--methods", methods, "Methods")->delimiter(',');
  bench_cmd->add_option("--seeds", num_seeds, "Number of seeds, starting at --base-seed");
  bench_cmd->add_option("--base-seed", cfg.base_seed, "First seed");
  bench_cmd->add_option("--epochs", cfg.epochs, "Full-batch epochs");
  bench_cmd->add_option("--out", out_dir, "Output directory");

  auto* ablate_cmd = app.add_subcommand("ablate", "Run cosco, sam_ce and sgd_ce on paired splits");
  ablate_cmd->add_option("--dataset", cfg.dataset, "Dataset")->required();
  ablate_cmd->add_option("--k", cfg.k, "Shots per class");
  ablate_cmd->add_option("--seeds", num_seeds, "Number of seeds");
  ablate_cmd->add_option("--epochs", cfg.epochs, "Full-batch epochs");
  ablate_cmd->add_option("--out", out, "Write the three-arm table to this CSV path");

  std::uint64_t gc_seed = 7;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Run the finite-difference gradient suite");
  grad_cmd->add_option("--seed", gc_seed, "Seed for random test points");

  std::string table_path, ties = "average";
  auto* rank_cmd = app.add_subcommand("rank", "Average ranks of a results CSV");
  rank_cmd->add_option("--table", table_path, "CSV with header dataset,<method>,...")->required();
  rank_cmd->add_option("--ties", ties, "average | competition");

  CLI11_PARSE(app, argc, argv);
  retain_freed_memory();

  try {
    if (*train_cmd) {
      cfg.method = parse_method(method);
      cfg.metric = parse_metric(metric);
      cfg.base_seed = seed;
      cfg.num_seeds = 1;
      const ExperimentData data = load_experiment(cfg.dataset, data_root);
      const TrialsSummary s = run_trials(cfg, data);
      print_summary(dataset_label(cfg.dataset), method, s);
      if (!s.trials.empty()) {
        const auto& trace = s.trials.front().loss_trace;
        if (!trace.empty()) std::printf("final training loss %.6g\n", trace.back());
      }
      if (!out.empty()) write_run_record(cfg, s, out);
      return s.failures.empty() ? 0 : kExitNumeric;
    }

    if (*bench_cmd) {
      cfg.num_seeds = num_seeds;
      fs::create_directories(out_dir);
      ResultsTable table;
      bool numeric_failure = false;
      for (const auto& ds : datasets) {
        const ExperimentData data = load_experiment(ds, data_root);
        const std::string label = dataset_label(ds);
        for (const auto& m : methods) {
          ExperimentConfig run = cfg;
          run.dataset = label;
          run.method = parse_method(m);
          const TrialsSummary s = run_trials(run, data);
          print_summary(label, m, s);
          write_run_record(run, s, (fs::path(out_dir) / (label + "_" + m + "_k" + std::to_string(cfg.k) + ".json")).string());
          numeric_failure |= !s.failures.empty();
          if (!s.trials.empty()) table.set(m, label, s.mean, s.std);
        }
      }
      const auto csv = fs::path(out_dir) / ("results_k" + std::to_string(cfg.k) + ".csv");
      write_results_csv(table, csv.string());
      std::printf("wrote %s\n", csv.string().c_str());
      if (!numeric_failure) print_ranks(table, average_rank(table));
      return numeric_failure ? kExitNumeric : 0;
    }

    if (*ablate_cmd) {
      cfg.num_seeds = num_seeds;
      const ExperimentData data = load_experiment(cfg.dataset, data_root);
      cfg.dataset = dataset_label(cfg.dataset);
      const AblationResult r = ablate(cfg, data);
      for (std::size_t i = 0; i < r.arms.size(); ++i) print_summary(cfg.dataset, r.table.methods[i], r.arms[i]);
      print_ranks(r.table, r.ranks);
      if (!out.empty()) write_results_csv(r.table, out);
      for (const auto& arm : r.arms) {
        if (!arm.failures.empty()) return kExitNumeric;
      }
      return 0;
    }

    if (*grad_cmd) {
      const auto report = gradcheck::run_suite(gc_seed);
      for (const auto& r : report.results) {
        std::printf("%-28s probes=%-6zu refined=%-4zu max_rel_err=%.3e %s\n", r.name.c_str(), r.probes, r.refined,
                  r.max_rel_error, r.passed() ? "ok" : "FAIL");
      }
      std::printf("gradcheck %s in %.2f s\n", report.passed() ? "passed" : "FAILED", report.seconds);
      return report.passed() ? 0 : 1;
    }

    if (*rank_cmd) {
      const ResultsTable table = read_results_csv(table_path);
      print_ranks(table, average_rank(table, parse_ties(ties)));
      return 0;
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
