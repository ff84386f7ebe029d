#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "cosco/errors.hpp"
#include "cosco/harness.hpp"

namespace cosco::harness {

void ResultsTable::set(const std::string& method, const std::string& dataset, double acc, std::optional<double> sd) {
  auto mi = std::find(methods.begin(), methods.end(), method);
  if (mi == methods.end()) {
    methods.push_back(method);
    accuracy.emplace_back(datasets.size());
    stddev.emplace_back(datasets.size());
    mi = methods.end() - 1;
  }
  auto di = std::find(datasets.begin(), datasets.end(), dataset);
  if (di == datasets.end()) {
    datasets.push_back(dataset);
    for (auto& row : accuracy) row.emplace_back();
    for (auto& row : stddev) row.emplace_back();
    di = datasets.end() - 1;
  }
  const auto m = static_cast<std::size_t>(mi - methods.begin());
  const auto d = static_cast<std::size_t>(di - datasets.begin());
  accuracy[m][d] = acc;
  stddev[m][d] = sd;
}

std::size_t ResultsTable::method_index(const std::string& method) const {
  const auto it = std::find(methods.begin(), methods.end(), method);
  if (it == methods.end()) throw ArgumentError("no method '" + method + "' in results table");
  return static_cast<std::size_t>(it - methods.begin());
}

std::vector<double> rank_row(std::span<const double> accuracies, TieRule rule) {
  const std::size_t m = accuracies.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return accuracies[a] > accuracies[b]; });
  std::vector<double> ranks(m);
  for (std::size_t start = 0; start < m;) {
    std::size_t end = start + 1;
    while (end < m && accuracies[order[end]] == accuracies[order[start]]) ++end;
    // positions start+1 .. end share one rank
    const double r = rule == TieRule::kAverage ? 0.5 * static_cast<double>(start + 1 + end)
                                               : static_cast<double>(start + 1);
    for (std::size_t i = start; i < end; ++i) ranks[order[i]] = r;
    start = end;
  }
  return ranks;
}

std::vector<double> average_rank(const ResultsTable& table, TieRule rule) {
  const std::size_t m = table.methods.size();
  if (m == 0 || table.datasets.empty()) throw ArgumentError("average_rank: empty results table");
  std::vector<double> total(m, 0.0);
  std::vector<double> row(m);
  for (std::size_t d = 0; d < table.datasets.size(); ++d) {
    for (std::size_t i = 0; i < m; ++i) {
      const auto& cell = table.accuracy.at(i).at(d);
      if (!cell) {
        throw ArgumentError("average_rank: missing cell for method '" + table.methods[i] + "' on dataset '" +
                            table.datasets[d] + "'");
      }
      row[i] = *cell;
    }
    const auto ranks = rank_row(row, rule);
    for (std::size_t i = 0; i < m; ++i) total[i] += ranks[i];
  }
  for (auto& t : total) t /= static_cast<double>(table.datasets.size());
  return total;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

ResultsTable read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open results table " + path);
  std::string line;
  if (!std::getline(in, line)) throw ArgumentError(path + ": empty results table");
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "dataset") {
    throw ArgumentError(path + ":1: header must be 'dataset,<method>,...'");
  }
  ResultsTable table;
  table.methods.assign(header.begin() + 1, header.end());
  table.accuracy.resize(table.methods.size());
  table.stddev.resize(table.methods.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw ArgumentError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                          " fields, found " + std::to_string(fields.size()));
    }
    table.datasets.push_back(fields[0]);
    for (std::size_t i = 0; i < table.methods.size(); ++i) {
      std::optional<double> cell;
      const std::string& f = fields[i + 1];
      if (!f.empty()) {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(f, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != f.size()) {
          throw ArgumentError(path + ":" + std::to_string(line_no) + ": bad accuracy '" + f + "'");
        }
        cell = v;
      }
      table.accuracy[i].push_back(cell);
      table.stddev[i].emplace_back();
    }
  }
  return table;
}

void write_results_csv(const ResultsTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write results table " + path);
  out << "dataset";
  for (const auto& m : table.methods) out << ',' << m;
  out << '\n';
  char buf[32];
  for (std::size_t d = 0; d < table.datasets.size(); ++d) {
    out << table.datasets[d];
    for (std::size_t i = 0; i < table.methods.size(); ++i) {
      out << ',';
      if (const auto& cell = table.accuracy.at(i).at(d)) {
        std::snprintf(buf, sizeof buf, "%.17g", *cell);
        out << buf;
      }
    }
    out << '\n';
  }
}

void write_run_record(const ExperimentConfig& config, const TrialsSummary& summary, const std::string& path) {
  using nlohmann::json;
  json cfg = {{"dataset", config.dataset},
              {"k", config.k},
              {"method", method_name(config.method)},
              {"rho", config.rho},
              {"lr", config.lr},
              {"momentum", config.momentum},
              {"epochs", config.epochs},
              {"seeds", config.seeds()},
              {"metric", config.metric == loss::Metric::kSquaredEuclidean ? "squared" : "euclidean-eps"}};
  json trials = json::array();
  json timing = json::array();
  for (const auto& t : summary.trials) {
    trials.push_back({{"seed", t.seed},
                      {"split_hash", t.split_hash},
                      {"accuracy", t.accuracy},
                      {"loss_trace", t.loss_trace}});
    timing.push_back({{"seed", t.seed}, {"seconds", t.seconds}});
  }
  json failures = json::array();
  for (const auto& f : summary.failures) failures.push_back({{"seed", f.seed}, {"error", f.message}});
  json record = {{"config", cfg},
                 {"trials", trials},
                 {"failures", failures},
                 {"aggregate",
                  {{"mean", summary.mean},
                   {"std", summary.std},
                   {"completed", summary.trials.size()},
                   {"failed", summary.failures.size()}}}};

  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write run record " + path);
  out << record.dump(2) << '\n';

  std::filesystem::path timing_path(path);
  timing_path.replace_extension(".timing.json");
  std::ofstream tout(timing_path);
  if (!tout) throw ArgumentError("cannot write timing record " + timing_path.string());
  tout << json{{"trials", timing}}.dump(2) << '\n';
}

}  // namespace cosco::harness
