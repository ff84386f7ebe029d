#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cosco/backbone.hpp"
#include "cosco/tensor.hpp"

namespace cosco::gradcheck {

inline constexpr double kStep = 1e-5;
inline constexpr double kTolerance = 1e-4;
/// Denominator floor for the relative error, so near-zero gradients compare absolutely.
inline constexpr double kFloor = 1e-5;

/// |a - n| / max(|a|, |n|, kFloor).
double relative_error(double analytic, double numeric);

/// Scalar function of a list of tensors; must record on the current tape when inputs
/// require gradients.
using ScalarFn = std::function<Tensor(std::span<const Tensor>)>;

struct CheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t probes = 0;  // number of finite-difference comparisons made
  std::size_t refined = 0;  // probes that needed a smaller step (relu kink within h)

  bool passed(double tolerance = kTolerance) const { return max_rel_error <= tolerance; }
};

/// Adds one central-difference comparison to `result`; f_at(s) evaluates the function at
/// offset s along the probe direction. A probe failing at h is retried at h/10 and h/100
/// and counted in `refined`; the recorded error is the smallest over the steps tried.
void record_probe(CheckResult& result, double analytic, const std::function<double(double)>& f_at,
                  double h = kStep);

/// Central differences on every coordinate of every input against reverse mode.
CheckResult check_all_coordinates(const std::string& name, const ScalarFn& f, std::vector<Tensor> inputs,
                                  double h = kStep);

/// Each differentiable op on `points` random inputs.
std::vector<CheckResult> op_suite(std::uint64_t seed, std::size_t points = 20);

/// Prototypical loss of a backbone on a random [N,M,T] batch, labels alternating over two
/// classes. Every parameter tensor gets a random directional-derivative probe plus
/// `coords_per_tensor` sampled coordinates; pass 0 to probe every coordinate instead.
CheckResult backbone_check(const std::string& name, const BackboneConfig& config, std::size_t n, std::size_t t,
                           std::uint64_t seed, std::size_t coords_per_tensor);

struct SuiteReport {
  std::vector<CheckResult> results;
  double seconds = 0.0;
  bool passed() const;
};

/// The complete suite: op_suite, an exhaustive narrow backbone, and the full-width backbone
/// on M=2, T=16, N=4.
SuiteReport run_suite(std::uint64_t seed = 7);

}  // namespace cosco::gradcheck
