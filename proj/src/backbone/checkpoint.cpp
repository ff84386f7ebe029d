#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cosco/backbone.hpp"
#include "cosco/errors.hpp"

namespace cosco {

namespace {

constexpr const char* kMagic = "cosco-checkpoint";
constexpr int kVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw ArgumentError("checkpoint: bad value '" + token + "'");
  return v;
}

void write_values(std::ostream& os, const Tensor& t) {
  for (double v : t.data()) os << ' ' << hex(v);
}

std::vector<double> read_values(std::istream& is, std::size_t n) {
  std::vector<double> values(n);
  std::string token;
  for (auto& v : values) {
    if (!(is >> token)) throw ArgumentError("checkpoint: truncated value list");
    v = parse_hex(token);
  }
  return values;
}

template <typename T>
T read_field(std::istream& is, const char* what) {
  T value{};
  if (!(is >> value)) throw ArgumentError(std::string("checkpoint: expected ") + what);
  return value;
}

void expect(std::istream& is, const std::string& keyword) {
  std::string token;
  if (!(is >> token) || token != keyword) {
    throw ArgumentError("checkpoint: expected '" + keyword + "', got '" + token + "'");
  }
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ArgumentError("cannot open checkpoint for writing: " + path);
  const auto& cfg = model.config();
  os << kMagic << ' ' << kVersion << '\n';
  os << "in_channels " << cfg.in_channels << '\n';
  os << "widths " << cfg.block_widths.size();
  for (auto w : cfg.block_widths) os << ' ' << w;
  os << "\nkernels " << cfg.kernel_sizes.size();
  for (auto k : cfg.kernel_sizes) os << ' ' << k;
  os << "\nhead " << (model.has_head() ? model.num_classes() : 0) << '\n';
  os << "params " << model.parameters().size() << '\n';
  for (const auto& p : model.parameters()) {
    os << p.name << ' ' << p.value.rank();
    for (auto d : p.value.shape()) os << ' ' << d;
    write_values(os, p.value);
    os << '\n';
  }
  os << "stats " << model.norm_stats().size() << '\n';
  for (const auto& [name, s] : model.norm_stats()) {
    os << name << ' ' << s.running_mean.numel();
    write_values(os, s.running_mean);
    write_values(os, s.running_var);
    os << '\n';
  }
  os << "end\n";
  if (!os) throw ArgumentError("failed writing checkpoint: " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ArgumentError("cannot open checkpoint: " + path);
  expect(is, kMagic);
  if (read_field<int>(is, "version") != kVersion) throw ArgumentError("checkpoint: unsupported version");

  Model model;
  expect(is, "in_channels");
  model.config_.in_channels = read_field<std::size_t>(is, "in_channels");
  expect(is, "widths");
  model.config_.block_widths.assign(read_field<std::size_t>(is, "width count"), 0);
  for (auto& w : model.config_.block_widths) w = read_field<std::size_t>(is, "width");
  expect(is, "kernels");
  model.config_.kernel_sizes.assign(read_field<std::size_t>(is, "kernel count"), 0);
  for (auto& k : model.config_.kernel_sizes) k = read_field<std::size_t>(is, "kernel");
  model.config_.validate();
  expect(is, "head");
  if (const auto classes = read_field<std::size_t>(is, "head classes"); classes > 0) model.num_classes_ = classes;

  expect(is, "params");
  const auto param_count = read_field<std::size_t>(is, "parameter count");
  for (std::size_t i = 0; i < param_count; ++i) {
    const auto name = read_field<std::string>(is, "parameter name");
    Shape shape(read_field<std::size_t>(is, "rank"));
    for (auto& d : shape) d = read_field<std::size_t>(is, "extent");
    auto values = read_values(is, shape_numel(shape));
    model.add_param(name, Tensor::from(std::move(shape), std::move(values), true));
  }
  expect(is, "stats");
  const auto stat_count = read_field<std::size_t>(is, "stats count");
  for (std::size_t i = 0; i < stat_count; ++i) {
    const auto name = read_field<std::string>(is, "stats name");
    const auto channels = read_field<std::size_t>(is, "channels");
    BatchNormStats s(channels);
    s.running_mean = Tensor::from({channels}, read_values(is, channels));
    s.running_var = Tensor::from({channels}, read_values(is, channels));
    model.stats_.emplace(name, std::move(s));
  }
  expect(is, "end");
  model.finalize();
  return model;
}

}  // namespace cosco
