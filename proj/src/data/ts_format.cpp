#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "cosco/data.hpp"
#include "cosco/errors.hpp"

namespace cosco::data {

namespace {

using Kind = ParseError::Kind;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

bool parse_bool(const std::string& token, std::size_t line, const std::string& directive) {
  const std::string t = lower(token);
  if (t == "true") return true;
  if (t == "false") return false;
  throw ParseError(Kind::kMalformedHeader, line, directive + " expects true or false, got '" + token + "'");
}

std::size_t parse_count(const std::string& token, std::size_t line, const std::string& directive) {
  std::size_t value = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || value == 0) {
    throw ParseError(Kind::kMalformedHeader, line, directive + " expects a positive integer, got '" + token + "'");
  }
  return value;
}

double parse_value(const std::string& raw, std::size_t line) {
  const std::string token = trim(raw);
  if (token.empty()) throw ParseError(Kind::kBadValue, line, "empty value");
  if (token == "?" || lower(token) == "nan") {
    throw ParseError(Kind::kBadValue, line, "missing value '" + token + "' is not supported");
  }
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw ParseError(Kind::kBadValue, line, "bad value '" + token + "'");
  if (!std::isfinite(v)) throw ParseError(Kind::kBadValue, line, "non-finite value '" + token + "'");
  return v;
}

struct Header {
  std::optional<std::string> problem_name;
  std::optional<bool> univariate;
  std::optional<std::size_t> dimensions;
  std::optional<bool> equal_length;
  std::optional<std::size_t> series_length;
  std::vector<std::string> class_labels;
  bool has_class_label = false;
};

void parse_directive(const std::string& text, std::size_t line, Header& h) {
  const auto w = words(text);
  const std::string key = lower(w[0]);
  auto arg = [&](const char* name) -> const std::string& {
    if (w.size() < 2) throw ParseError(Kind::kMalformedHeader, line, std::string(name) + " is missing its value");
    return w[1];
  };
  if (key == "@problemname") {
    h.problem_name = arg("@problemName");
  } else if (key == "@timestamps") {
    if (parse_bool(arg("@timeStamps"), line, "@timeStamps")) {
      throw ParseError(Kind::kUnsupported, line, "timestamped series are not supported");
    }
  } else if (key == "@missing") {
    parse_bool(arg("@missing"), line, "@missing");
  } else if (key == "@univariate") {
    h.univariate = parse_bool(arg("@univariate"), line, "@univariate");
  } else if (key == "@dimensions" || key == "@dimension") {
    h.dimensions = parse_count(arg("@dimensions"), line, "@dimensions");
  } else if (key == "@equallength") {
    h.equal_length = parse_bool(arg("@equalLength"), line, "@equalLength");
  } else if (key == "@serieslength") {
    h.series_length = parse_count(arg("@seriesLength"), line, "@seriesLength");
  } else if (key == "@classlabel") {
    if (!parse_bool(arg("@classLabel"), line, "@classLabel")) {
      throw ParseError(Kind::kUnsupported, line, "unlabeled (@classLabel false) files are not supported");
    }
    if (w.size() < 3) throw ParseError(Kind::kMalformedHeader, line, "@classLabel true lists no labels");
    h.class_labels.assign(w.begin() + 2, w.end());
    for (std::size_t i = 0; i < h.class_labels.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (h.class_labels[i] == h.class_labels[j]) {
          throw ParseError(Kind::kMalformedHeader, line, "duplicate class label '" + h.class_labels[i] + "'");
        }
      }
    }
    h.has_class_label = true;
  } else {
    throw ParseError(Kind::kMalformedHeader, line, "unknown directive '" + w[0] + "'");
  }
}

std::string stem(const std::string& path) {
  auto slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  auto dot = base.rfind('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace

MtsDataset parse_ts(std::istream& in, const std::string& source) {
  Header header;
  bool in_data = false;
  std::size_t data_line = 0;
  std::size_t line_no = 0;

  std::optional<std::size_t> dims;
  std::vector<std::vector<std::vector<double>>> cases;  // case -> channel -> values
  std::vector<int> labels;

  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const std::string text = trim(raw);
    if (text.empty() || text[0] == '#') continue;

    if (!in_data) {
      if (text[0] != '@') throw ParseError(Kind::kMalformedHeader, line_no, "expected a header directive");
      if (lower(words(text)[0]) == "@data") {
        if (!header.has_class_label) {
          throw ParseError(Kind::kMalformedHeader, line_no, "@data before a @classLabel directive");
        }
        if (header.dimensions) {
          dims = header.dimensions;
        } else if (header.univariate.value_or(false)) {
          dims = 1;
        }
        if (header.univariate.value_or(false) && header.dimensions && *header.dimensions != 1) {
          throw ParseError(Kind::kMalformedHeader, line_no, "@univariate true conflicts with @dimensions");
        }
        in_data = true;
        data_line = line_no;
        continue;
      }
      parse_directive(text, line_no, header);
      continue;
    }

    if (text[0] == '@') throw ParseError(Kind::kMalformedHeader, line_no, "directive after @data");
    auto fields = split(text, ':');
    if (fields.size() < 2) throw ParseError(Kind::kDimensionMismatch, line_no, "case has no class label field");
    const std::string label = trim(fields.back());
    fields.pop_back();
    if (!dims) dims = fields.size();
    if (fields.size() != *dims) {
      throw ParseError(Kind::kDimensionMismatch, line_no,
                       "case has " + std::to_string(fields.size()) + " dimensions, expected " + std::to_string(*dims));
    }
    auto it = std::find(header.class_labels.begin(), header.class_labels.end(), label);
    if (it == header.class_labels.end()) {
      throw ParseError(Kind::kUnknownClassLabel, line_no, "unknown class label '" + label + "'");
    }

    std::vector<std::vector<double>> channels;
    channels.reserve(fields.size());
    for (const auto& field : fields) {
      std::vector<double> values;
      for (const auto& token : split(field, ',')) values.push_back(parse_value(token, line_no));
      channels.push_back(std::move(values));
    }
    const std::size_t len = channels.front().size();
    for (const auto& ch : channels) {
      if (ch.size() != len) throw ParseError(Kind::kDimensionMismatch, line_no, "dimensions of one case differ in length");
    }
    if (header.equal_length.value_or(false) && header.series_length && len != *header.series_length) {
      throw ParseError(Kind::kDimensionMismatch, line_no,
                       "series length " + std::to_string(len) + " differs from @seriesLength " +
                           std::to_string(*header.series_length));
    }
    cases.push_back(std::move(channels));
    labels.push_back(static_cast<int>(it - header.class_labels.begin()));
  }

  if (!in_data) throw ParseError(Kind::kMalformedHeader, line_no, source + ": missing @data section");
  if (cases.empty()) throw ParseError(Kind::kEmptyData, data_line, source + ": @data section has no cases");

  std::size_t max_len = 0;
  for (const auto& c : cases) max_len = std::max(max_len, c.front().size());
  const std::size_t n = cases.size(), m = *dims;
  std::vector<double> values(n * m * max_len, 0.0);
  MtsDataset ds;
  ds.original_lengths.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < m; ++ch) {
      std::copy(cases[i][ch].begin(), cases[i][ch].end(), values.begin() + (i * m + ch) * max_len);
    }
    ds.original_lengths.push_back(cases[i].front().size());
  }
  ds.x = Tensor::from({n, m, max_len}, std::move(values));
  ds.y = std::move(labels);
  ds.class_names = header.class_labels;
  ds.name = header.problem_name.value_or(stem(source));
  ds.is_audio = is_builtin_audio(ds.name);
  return ds;
}

MtsDataset parse_ts_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(Kind::kIo, 0, "cannot open " + path);
  return parse_ts(in, path);
}

void write_ts(std::ostream& out, const MtsDataset& ds) {
  const std::size_t n = ds.size(), m = ds.num_channels(), t_len = ds.length();
  const bool equal = std::all_of(ds.original_lengths.begin(), ds.original_lengths.end(),
                                 [&](std::size_t l) { return l == ds.original_lengths.front(); });
  out << "@problemName " << ds.name << '\n';
  out << "@timeStamps false\n@missing false\n";
  out << "@univariate " << (m == 1 ? "true" : "false") << '\n';
  out << "@dimensions " << m << '\n';
  out << "@equalLength " << (equal ? "true" : "false") << '\n';
  if (equal) out << "@seriesLength " << ds.original_lengths.front() << '\n';
  out << "@classLabel true";
  for (const auto& c : ds.class_names) out << ' ' << c;
  out << "\n@data\n";
  const auto xs = ds.x.data();
  char buf[40];
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = ds.original_lengths[i];
    for (std::size_t ch = 0; ch < m; ++ch) {
      const double* row = xs.data() + (i * m + ch) * t_len;
      for (std::size_t t = 0; t < len; ++t) {
        std::snprintf(buf, sizeof buf, "%.17g", row[t]);
        if (t) out << ',';
        out << buf;
      }
      out << ':';
    }
    out << ds.class_names[static_cast<std::size_t>(ds.y[i])] << '\n';
  }
}

void write_ts_file(const std::string& path, const MtsDataset& ds) {
  std::ofstream out(path);
  if (!out) throw ParseError(Kind::kIo, 0, "cannot open " + path + " for writing");
  write_ts(out, ds);
}

}  // namespace cosco::data
