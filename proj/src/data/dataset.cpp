#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cosco/data.hpp"
#include "cosco/errors.hpp"
#include "cosco/random.hpp"

namespace cosco::data {

MtsDataset MtsDataset::subset(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ArgumentError("subset with no indices");
  const std::size_t m = num_channels(), t_len = length();
  const auto xs = x.data();
  std::vector<double> values(indices.size() * m * t_len);
  MtsDataset out;
  out.class_names = class_names;
  out.name = name;
  out.is_audio = is_audio;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t i = indices[r];
    if (i >= size()) throw ArgumentError("subset index " + std::to_string(i) + " out of range");
    std::copy_n(xs.begin() + static_cast<std::ptrdiff_t>(i * m * t_len), m * t_len,
                values.begin() + static_cast<std::ptrdiff_t>(r * m * t_len));
    out.y.push_back(y[i]);
    out.original_lengths.push_back(original_lengths[i]);
  }
  out.x = Tensor::from({indices.size(), m, t_len}, std::move(values));
  return out;
}

MtsDataset znormalize(const MtsDataset& ds) {
  MtsDataset out = ds;
  out.x = ds.x.clone();
  if (ds.is_audio) return out;

  const std::size_t n = ds.size(), m = ds.num_channels(), t_len = ds.length();
  auto xs = out.x.mutable_data();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = ds.original_lengths[i];
    for (std::size_t ch = 0; ch < m; ++ch) {
      double* row = xs.data() + (i * m + ch) * t_len;
      double s = 0.0;
      for (std::size_t t = 0; t < len; ++t) s += row[t];
      const double mu = s / static_cast<double>(len);
      double ss = 0.0;
      for (std::size_t t = 0; t < len; ++t) ss += (row[t] - mu) * (row[t] - mu);
      const double sd = std::sqrt(ss / static_cast<double>(len));
      for (std::size_t t = 0; t < len; ++t) row[t] = sd < 1e-8 ? 0.0 : (row[t] - mu) / sd;
      std::fill(row + len, row + t_len, 0.0);
    }
  }
  return out;
}

FewShotSplit sample_k_shot(const MtsDataset& ds, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ArgumentError("sample_k_shot: k must be positive");
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
  for (std::size_t i = 0; i < ds.size(); ++i) by_class.at(static_cast<std::size_t>(ds.y[i])).push_back(i);

  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < k) throw InsufficientClassSizeError(ds.class_names[c], by_class[c].size(), k);
  }

  FewShotSplit split;
  split.k = k;
  split.seed = seed;
  Rng rng(seed);
  for (auto& members : by_class) {
    rng.shuffle(members);
    std::vector<std::size_t> chosen(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());
    split.train_indices.insert(split.train_indices.end(), chosen.begin(), chosen.end());
  }
  return split;
}

std::uint64_t split_hash(const FewShotSplit& split) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  for (auto i : split.train_indices) mix(i);
  return h;
}

MtsDataset synth_dataset(std::size_t num_classes, std::size_t per_class, std::size_t channels, std::size_t length,
                         double noise_sigma, std::uint64_t seed) {
  if (num_classes == 0 || per_class == 0 || channels == 0 || length == 0) {
    throw ArgumentError("synth_dataset: all sizes must be positive");
  }
  if (noise_sigma < 0.0) throw ArgumentError("synth_dataset: noise_sigma must be nonnegative");
  Rng rng(seed);
  const std::size_t n = num_classes * per_class;
  std::vector<double> values(n * channels * length);
  MtsDataset ds;
  for (std::size_t c = 0; c < num_classes; ++c) {
    ds.class_names.push_back("class" + std::to_string(c));
    const double omega = 2.0 * std::numbers::pi * 4.0 * static_cast<double>(c + 1) / static_cast<double>(length);
    for (std::size_t j = 0; j < per_class; ++j) {
      const std::size_t i = c * per_class + j;
      for (std::size_t ch = 0; ch < channels; ++ch) {
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        double* row = values.data() + (i * channels + ch) * length;
        for (std::size_t t = 0; t < length; ++t) {
          row[t] = std::sin(omega * static_cast<double>(t) + phase);
        }
        if (noise_sigma > 0.0) {
          for (std::size_t t = 0; t < length; ++t) row[t] += noise_sigma * rng.normal();
        }
      }
      ds.y.push_back(static_cast<int>(c));
      ds.original_lengths.push_back(length);
    }
  }
  ds.x = Tensor::from({n, channels, length}, std::move(values));
  ds.name = "synthetic";
  return ds;
}

bool is_builtin_audio(const std::string& name) {
  static constexpr std::array<const char*, 4> kAudio{"DuckDuckGeese", "Heartbeat", "JapaneseVowels",
                                                     "SpokenArabicDigits"};
  return std::any_of(kAudio.begin(), kAudio.end(), [&](const char* a) { return name == a; });
}

std::map<std::string, RegistryEntry> load_registry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open dataset registry " + path);
  const auto base = std::filesystem::path(path).parent_path();
  std::map<std::string, RegistryEntry> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream is(line);
    std::string name, dir, audio;
    if (!(is >> name)) continue;
    if (!(is >> dir >> audio)) {
      throw ArgumentError(path + ":" + std::to_string(line_no) + ": expected 'name path is_audio'");
    }
    if (audio != "true" && audio != "false") {
      throw ArgumentError(path + ":" + std::to_string(line_no) + ": is_audio must be true or false");
    }
    std::filesystem::path p(dir);
    if (p.is_relative()) p = base / p;
    out[name] = RegistryEntry{p.lexically_normal().string(), audio == "true"};
  }
  return out;
}

}  // namespace cosco::data
