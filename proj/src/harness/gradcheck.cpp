#include "cosco/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "cosco/loss.hpp"
#include "cosco/ops.hpp"
#include "cosco/random.hpp"

namespace cosco::gradcheck {

namespace {

Tensor randn(const Shape& shape, Rng& rng, double sd = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = sd * rng.normal();
  return Tensor::from(shape, std::move(v));
}

Tensor rand_uniform(const Shape& shape, Rng& rng, double lo, double hi) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(shape, std::move(v));
}

// Magnitudes in [0.2, 1.5] with random sign, keeping relu inputs away from the kink.
Tensor rand_away_from_zero(const Shape& shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.2, 1.5);
  return Tensor::from(shape, std::move(v));
}

// Contract a tensor-valued op with fixed random weights so every output coordinate
// contributes a distinct upstream gradient.
Tensor contract(const Tensor& y, const Tensor& w) { return sum(mul(y, w)); }

double evaluate(const ScalarFn& f, std::span<const Tensor> inputs) {
  NoGradGuard guard;
  return f(inputs).item();
}

std::vector<std::vector<double>> analytic_grads(const ScalarFn& f, std::vector<Tensor>& inputs) {
  for (auto& in : inputs) {
    in.set_requires_grad(true);
    in.zero_grad();
  }
  backward(f(inputs));
  std::vector<std::vector<double>> out;
  for (auto& in : inputs) {
    const auto g = in.grad();
    out.emplace_back(g.begin(), g.end());
    if (out.back().empty()) out.back().assign(in.numel(), 0.0);
  }
  return out;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kFloor});
  return std::abs(analytic - numeric) / denom;
}

void record_probe(CheckResult& result, double analytic, const std::function<double(double)>& f_at, double h) {
  ++result.probes;
  double err = relative_error(analytic, (f_at(h) - f_at(-h)) / (2.0 * h));
  if (err > kTolerance) {
    // A relu kink inside [-h, h] spoils the central difference even when reverse mode is
    // right; shrinking the interval removes it, whereas a wrong gradient stays wrong.
    ++result.refined;
    for (double step = h / 10.0; step >= h / 100.0 && err > kTolerance; step /= 10.0) {
      err = std::min(err, relative_error(analytic, (f_at(step) - f_at(-step)) / (2.0 * step)));
    }
  }
  result.max_rel_error = std::max(result.max_rel_error, err);
}

CheckResult check_all_coordinates(const std::string& name, const ScalarFn& f, std::vector<Tensor> inputs,
                                  double h) {
  CheckResult result{name, 0.0, 0, 0};
  const auto grads = analytic_grads(f, inputs);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto values = inputs[i].mutable_data();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double orig = values[j];
      auto f_at = [&](double step) {
        values[j] = orig + step;
        const double v = evaluate(f, inputs);
        values[j] = orig;
        return v;
      };
      record_probe(result, grads[i][j], f_at, h);
    }
  }
  return result;
}

std::vector<CheckResult> op_suite(std::uint64_t seed, std::size_t points) {
  struct Case {
    std::string name;
    std::function<std::pair<ScalarFn, std::vector<Tensor>>(Rng&)> make;
  };
  using Inputs = std::span<const Tensor>;
  std::vector<Case> cases;

  auto elementwise_binary = [&](const std::string& name, Tensor (*op)(const Tensor&, const Tensor&)) {
    cases.push_back({name, [op](Rng& rng) {
                       Tensor w = randn({3, 4}, rng);
                       ScalarFn f = [op, w](Inputs in) { return contract(op(in[0], in[1]), w); };
                       return std::pair{f, std::vector<Tensor>{randn({3, 4}, rng), randn({3, 4}, rng)}};
                     }});
  };
  elementwise_binary("add", &add);
  elementwise_binary("sub", &sub);
  elementwise_binary("mul", &mul);

  auto elementwise_unary = [&](const std::string& name, std::function<Tensor(const Tensor&)> op,
                               std::function<Tensor(Rng&)> gen) {
    cases.push_back({name, [op, gen](Rng& rng) {
                       Tensor w = randn({3, 4}, rng);
                       ScalarFn f = [op, w](Inputs in) { return contract(op(in[0]), w); };
                       return std::pair{f, std::vector<Tensor>{gen(rng)}};
                     }});
  };
  auto normal34 = [](Rng& rng) { return randn({3, 4}, rng); };
  elementwise_unary("scale", [](const Tensor& x) { return scale(x, -1.7); }, normal34);
  elementwise_unary("add_scalar", [](const Tensor& x) { return add_scalar(x, 0.3); }, normal34);
  elementwise_unary("square", [](const Tensor& x) { return square(x); }, normal34);
  elementwise_unary("exp", [](const Tensor& x) { return exp(x); }, normal34);
  elementwise_unary("sqrt_eps", [](const Tensor& x) { return sqrt_eps(x, 1e-12); },
                    [](Rng& rng) { return rand_uniform({3, 4}, rng, 0.2, 2.0); });
  elementwise_unary("relu", [](const Tensor& x) { return relu(x); },
                    [](Rng& rng) { return rand_away_from_zero({3, 4}, rng); });
  elementwise_unary("log_softmax", [](const Tensor& x) { return log_softmax(x); }, normal34);
  elementwise_unary("global_avg_pool", [](const Tensor& x) { return global_avg_pool(x); },
                    [](Rng& rng) { return randn({3, 4, 5}, rng); });

  cases.push_back({"sum", [](Rng& rng) {
                     ScalarFn f = [](Inputs in) { return scale(sum(in[0]), 0.7); };
                     return std::pair{f, std::vector<Tensor>{randn({3, 4}, rng)}};
                   }});
  cases.push_back({"mean", [](Rng& rng) {
                     ScalarFn f = [](Inputs in) { return mean(square(in[0])); };
                     return std::pair{f, std::vector<Tensor>{randn({3, 4}, rng)}};
                   }});
  cases.push_back({"matmul", [](Rng& rng) {
                     Tensor w = randn({3, 5}, rng);
                     ScalarFn f = [w](Inputs in) { return contract(matmul(in[0], in[1]), w); };
                     return std::pair{f, std::vector<Tensor>{randn({3, 4}, rng), randn({4, 5}, rng)}};
                   }});
  for (std::size_t k : {1u, 3u, 8u}) {
    cases.push_back({"conv1d_k" + std::to_string(k), [k](Rng& rng) {
                       Tensor w = randn({2, 4, 7}, rng);
                       ScalarFn f = [w](Inputs in) { return contract(conv1d(in[0], in[1], in[2]), w); };
                       return std::pair{f, std::vector<Tensor>{randn({2, 3, 7}, rng), randn({4, 3, k}, rng),
                                                               randn({4}, rng)}};
                     }});
  }
  cases.push_back({"batchnorm1d_train", [](Rng& rng) {
                     Tensor w = randn({3, 2, 5}, rng);
                     ScalarFn f = [w](Inputs in) {
                       BatchNormStats stats(2);
                       return contract(batchnorm1d(in[0], in[1], in[2], stats, NormMode::kTrain, false), w);
                     };
                     return std::pair{f, std::vector<Tensor>{randn({3, 2, 5}, rng, 2.0),
                                                             rand_uniform({2}, rng, 0.5, 1.5), randn({2}, rng)}};
                   }});
  cases.push_back({"batchnorm1d_eval", [](Rng& rng) {
                     Tensor w = randn({3, 2, 5}, rng);
                     BatchNormStats stats(2);
                     stats.running_mean = randn({2}, rng);
                     stats.running_var = rand_uniform({2}, rng, 0.5, 2.0);
                     ScalarFn f = [w, stats](Inputs in) mutable {
                       return contract(batchnorm1d(in[0], in[1], in[2], stats, NormMode::kEval), w);
                     };
                     return std::pair{f, std::vector<Tensor>{randn({3, 2, 5}, rng), rand_uniform({2}, rng, 0.5, 1.5),
                                                             randn({2}, rng)}};
                   }});
  cases.push_back({"linear", [](Rng& rng) {
                     Tensor w = randn({3, 2}, rng);
                     ScalarFn f = [w](Inputs in) { return contract(linear(in[0], in[1], in[2]), w); };
                     return std::pair{f, std::vector<Tensor>{randn({3, 4}, rng), randn({2, 4}, rng), randn({2}, rng)}};
                   }});
  cases.push_back({"pairwise_sq_dist", [](Rng& rng) {
                     Tensor w = randn({4, 3}, rng);
                     ScalarFn f = [w](Inputs in) { return contract(pairwise_sq_dist(in[0], in[1]), w); };
                     return std::pair{f, std::vector<Tensor>{randn({4, 5}, rng), randn({3, 5}, rng)}};
                   }});
  cases.push_back({"nll_mean", [](Rng& rng) {
                     std::vector<int> targets{2, 0, 1, 2};
                     ScalarFn f = [targets](Inputs in) { return nll_mean(in[0], targets); };
                     return std::pair{f, std::vector<Tensor>{randn({4, 3}, rng)}};
                   }});
  cases.push_back({"cross_entropy", [](Rng& rng) {
                     std::vector<int> labels{1, 0, 2, 2, 1};
                     ScalarFn f = [labels](Inputs in) { return loss::cross_entropy(in[0], labels); };
                     return std::pair{f, std::vector<Tensor>{randn({5, 3}, rng)}};
                   }});
  cases.push_back({"class_centroids", [](Rng& rng) {
                     std::vector<int> labels{0, 1, 0, 2, 1};
                     Tensor w = randn({3, 4}, rng);
                     ScalarFn f = [labels, w](Inputs in) { return contract(loss::class_centroids(in[0], labels).kappa, w); };
                     return std::pair{f, std::vector<Tensor>{randn({5, 4}, rng)}};
                   }});
  for (auto metric : {loss::Metric::kSquaredEuclidean, loss::Metric::kEuclideanEps}) {
    const std::string suffix = metric == loss::Metric::kSquaredEuclidean ? "squared" : "euclidean_eps";
    cases.push_back({"proto_loss_" + suffix, [metric](Rng& rng) {
                       std::vector<int> labels{0, 1, 2, 0, 1, 2};
                       ScalarFn f = [labels, metric](Inputs in) {
                         return loss::proto_loss_from_embeddings(in[0], labels, metric);
                       };
                       return std::pair{f, std::vector<Tensor>{randn({6, 4}, rng)}};
                     }});
  }

  std::vector<CheckResult> results;
  Rng rng(seed);
  for (const auto& c : cases) {
    CheckResult agg{c.name, 0.0, 0, 0};
    for (std::size_t p = 0; p < points; ++p) {
      auto [f, inputs] = c.make(rng);
      const CheckResult r = check_all_coordinates(c.name, f, std::move(inputs));
      agg.max_rel_error = std::max(agg.max_rel_error, r.max_rel_error);
      agg.probes += r.probes;
      agg.refined += r.refined;
    }
    results.push_back(agg);
  }
  return results;
}

CheckResult backbone_check(const std::string& name, const BackboneConfig& config, std::size_t n, std::size_t t,
                           std::uint64_t seed, std::size_t coords_per_tensor) {
  Model model = build_model(config, seed);
  model.set_update_running_stats(false);
  Rng rng(seed ^ 0x5eedULL);
  const Tensor x = randn({n, config.in_channels, t}, rng);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);

  auto loss_value = [&] {
    return loss::proto_loss_from_embeddings(model.forward_embed(x, NormMode::kTrain), labels);
  };
  auto& params = model.parameters();
  zero_grad(params);
  backward(loss_value());
  std::vector<std::vector<double>> grads;
  for (const auto& p : params) {
    const auto g = p.value.grad();
    grads.emplace_back(g.begin(), g.end());
    if (grads.back().empty()) grads.back().assign(p.value.numel(), 0.0);
  }
  auto no_grad_loss = [&] {
    NoGradGuard guard;
    return loss_value().item();
  };
  const double h = kStep;

  CheckResult result{name, 0.0, 0, 0};
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].value.mutable_data();
    std::vector<std::size_t> coords;
    if (coords_per_tensor == 0) {
      for (std::size_t j = 0; j < values.size(); ++j) coords.push_back(j);
    } else {
      for (std::size_t c = 0; c < coords_per_tensor; ++c) coords.push_back(rng.index(values.size()));

      // Unit-norm direction, so the probe moves the parameter by exactly h in total.
      std::vector<double> u(values.size());
      double norm = 0.0;
      for (auto& uj : u) {
        uj = rng.normal();
        norm += uj * uj;
      }
      norm = std::sqrt(norm);
      double dot = 0.0;
      for (std::size_t j = 0; j < u.size(); ++j) {
        u[j] /= norm;
        dot += u[j] * grads[i][j];
      }
      const std::vector<double> orig(values.begin(), values.end());
      auto f_at = [&](double step) {
        for (std::size_t j = 0; j < u.size(); ++j) values[j] = orig[j] + step * u[j];
        const double v = no_grad_loss();
        std::copy(orig.begin(), orig.end(), values.begin());
        return v;
      };
      record_probe(result, dot, f_at, h);
    }
    for (std::size_t j : coords) {
      const double orig = values[j];
      auto f_at = [&](double step) {
        values[j] = orig + step;
        const double v = no_grad_loss();
        values[j] = orig;
        return v;
      };
      record_probe(result, grads[i][j], f_at, h);
    }
  }
  return result;
}

bool SuiteReport::passed() const {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed(); });
}

SuiteReport run_suite(std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  SuiteReport report;
  report.results = op_suite(seed);

  BackboneConfig narrow;
  narrow.in_channels = 2;
  narrow.block_widths = {4, 6, 6};
  report.results.push_back(backbone_check("backbone_narrow_all_coords", narrow, 4, 16, seed, 0));

  BackboneConfig full;
  full.in_channels = 2;
  report.results.push_back(backbone_check("backbone_full_sampled", full, 4, 16, seed, 4));

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace cosco::gradcheck
