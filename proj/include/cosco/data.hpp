#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cosco/tensor.hpp"

namespace cosco::data {

/// Labeled multivariate series padded to a common length.
struct MtsDataset {
  Tensor x;                                   // [N,M,T]
  std::vector<int> y;                         // [N], in [0,C)
  std::vector<std::string> class_names;       // C entries
  std::string name;
  bool is_audio = false;                      // exempt from z-normalization
  std::vector<std::size_t> original_lengths;  // pre-padding length per instance

  std::size_t size() const { return y.size(); }
  std::size_t num_channels() const { return x.dim(1); }
  std::size_t length() const { return x.dim(2); }
  std::size_t num_classes() const { return class_names.size(); }

  /// Instances at `indices`, in that order, sharing metadata.
  MtsDataset subset(std::span<const std::size_t> indices) const;
};

struct FewShotSplit {
  std::vector<std::size_t> train_indices;  // class-major, ascending within a class
  std::size_t k = 0;
  std::uint64_t seed = 0;
};

/// Reads the UEA `.ts` text format. `source` names the input in error messages and
/// stands in for the problem name when the header has none.
MtsDataset parse_ts(std::istream& in, const std::string& source = "<stream>");
MtsDataset parse_ts_file(const std::string& path);

/// Writes the `.ts` format; values use 17 significant digits so parsing is exact.
void write_ts(std::ostream& out, const MtsDataset& ds);
void write_ts_file(const std::string& path, const MtsDataset& ds);

/// Per-instance, per-channel z-normalization over the original length (population std).
/// Channels with std < 1e-8 become zero; audio datasets are returned unchanged.
MtsDataset znormalize(const MtsDataset& ds);

/// k distinct instances per class drawn uniformly without replacement.
FewShotSplit sample_k_shot(const MtsDataset& ds, std::size_t k, std::uint64_t seed);

/// FNV-1a hash of the split indices, for checking that two runs trained on the same data.
std::uint64_t split_hash(const FewShotSplit& split);

/// Class c: sin(2*pi*4*(c+1)*t/T + phase) per channel with a random phase, plus Gaussian
/// noise. Instances are ordered class-major.
MtsDataset synth_dataset(std::size_t num_classes, std::size_t per_class, std::size_t channels, std::size_t length,
                         double noise_sigma, std::uint64_t seed);

/// Datasets whose values are used as-is (the audio rows of the UEA few-shot suite).
bool is_builtin_audio(const std::string& name);

struct RegistryEntry {
  std::string path;  // directory holding <name>_TRAIN.ts and <name>_TEST.ts
  bool is_audio = false;
};

/// Whitespace-separated lines `name path is_audio`, '#' comments. Relative paths resolve
/// against the registry file's directory.
std::map<std::string, RegistryEntry> load_registry(const std::string& path);

}  // namespace cosco::data
