#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cosco/data.hpp"
#include "cosco/errors.hpp"
#include "cosco/harness.hpp"

using namespace cosco;
using namespace cosco::data;

namespace {

std::string fixture(const std::string& name) { return std::string(COSCO_FIXTURE_DIR) + "/ts/" + name; }

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

MtsDataset one_instance(std::vector<double> v, std::size_t channels, std::size_t length) {
  MtsDataset ds;
  ds.x = Tensor::from({1, channels, length}, std::move(v));
  ds.y = {0};
  ds.class_names = {"a"};
  ds.original_lengths = {length};
  return ds;
}

ParseError parse_error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_ts(in, "inline");
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no ParseError";
  return ParseError(ParseError::Kind::kIo, 0, "");
}

}  // namespace

TEST(ParseTsTest, SingleCaseExample) {
  std::istringstream in(
      "@problemName Tiny\n@dimensions 2\n@classLabel true classA classB\n@data\n1,2,3:4,5,6:classA\n");
  const MtsDataset ds = parse_ts(in);
  EXPECT_EQ(ds.x.shape(), (Shape{1, 2, 3}));
  EXPECT_EQ(ds.y, (std::vector<int>{0}));
  EXPECT_EQ(values(ds.x), (std::vector<double>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(ds.name, "Tiny");
}

TEST(ParseTsTest, EqualLengthFixture) {
  const MtsDataset ds = parse_ts_file(fixture("equal_length.ts"));
  EXPECT_EQ(ds.x.shape(), (Shape{2, 2, 3}));
  EXPECT_EQ(ds.y, (std::vector<int>{0, 1}));
  EXPECT_EQ(ds.class_names, (std::vector<std::string>{"classA", "classB"}));
  EXPECT_EQ(ds.x.at({1, 0, 1}), -1.25);
  EXPECT_EQ(ds.x.at({1, 0, 2}), 2e-3);
  EXPECT_EQ(ds.original_lengths, (std::vector<std::size_t>{3, 3}));
  EXPECT_FALSE(ds.is_audio);
}

TEST(ParseTsTest, UnequalLengthFixtureIsPadded) {
  const MtsDataset ds = parse_ts_file(fixture("unequal_length.ts"));
  EXPECT_EQ(ds.x.shape(), (Shape{2, 1, 5}));
  EXPECT_EQ(ds.original_lengths, (std::vector<std::size_t>{3, 5}));
  EXPECT_EQ(values(ds.x), (std::vector<double>{1, 2, 3, 0, 0, 5, 4, 3, 2, 1}));
}

TEST(ParseTsTest, DirectivesAreCaseInsensitive) {
  std::istringstream in("@PROBLEMNAME x\n@Dimensions 1\n@CLASSLABEL true a\n@DATA\n1,2:a\n");
  EXPECT_EQ(parse_ts(in).x.shape(), (Shape{1, 1, 2}));
}

TEST(ParseTsTest, CommentsAndBlankLinesAreSkipped) {
  std::istringstream in("# header comment\n\n@classLabel true a b\n# another\n@data\n\n1:b\n2:a\n");
  const MtsDataset ds = parse_ts(in);
  EXPECT_EQ(ds.y, (std::vector<int>{1, 0}));
}

TEST(ParseTsTest, MalformedFixturesCiteLines) {
  struct Case {
    const char* file;
    ParseError::Kind kind;
    std::size_t line;
  };
  const Case cases[] = {
      {"malformed_dims.ts", ParseError::Kind::kDimensionMismatch, 8},
      {"malformed_label.ts", ParseError::Kind::kUnknownClassLabel, 6},
      {"malformed_header.ts", ParseError::Kind::kMalformedHeader, 2},
      {"empty_data.ts", ParseError::Kind::kEmptyData, 5},
      {"missing_value.ts", ParseError::Kind::kBadValue, 5},
  };
  for (const auto& c : cases) {
    try {
      parse_ts_file(fixture(c.file));
      ADD_FAILURE() << c.file << " parsed";
    } catch (const ParseError& e) {
      EXPECT_EQ(e.kind(), c.kind) << c.file << ": " << e.what();
      EXPECT_EQ(e.line(), c.line) << c.file << ": " << e.what();
      EXPECT_NE(std::string(e.what()).find("line " + std::to_string(c.line)), std::string::npos) << e.what();
    }
  }
}

TEST(ParseTsTest, OtherMalformedInputs) {
  EXPECT_EQ(parse_error_of("@classLabel true a\n1:a\n").kind(), ParseError::Kind::kMalformedHeader);
  EXPECT_EQ(parse_error_of("@classLabel true a\n@data\n1,x:a\n").kind(), ParseError::Kind::kBadValue);
  EXPECT_EQ(parse_error_of("@classLabel true a\n@data\n1,NaN:a\n").kind(), ParseError::Kind::kBadValue);
  EXPECT_EQ(parse_error_of("@classLabel true a a\n@data\n1:a\n").kind(), ParseError::Kind::kMalformedHeader);
  EXPECT_EQ(parse_error_of("@timeStamps true\n@classLabel true a\n@data\n1:a\n").kind(), ParseError::Kind::kUnsupported);
  EXPECT_EQ(parse_error_of("@bogus 1\n@classLabel true a\n@data\n1:a\n").line(), 1u);
  EXPECT_EQ(parse_error_of("@classLabel true a\n@data\n1,2:3:a\n").kind(), ParseError::Kind::kDimensionMismatch);
  EXPECT_EQ(parse_error_of("@classLabel true a\n@data\n1,2:3:a\n").line(), 3u);
  EXPECT_THROW(parse_ts_file("/nonexistent/file.ts"), ParseError);
}

TEST(ParseTsTest, RoundTripIsExact) {
  for (const char* name : {"equal_length.ts", "unequal_length.ts"}) {
    const MtsDataset a = parse_ts_file(fixture(name));
    std::stringstream buf;
    write_ts(buf, a);
    const MtsDataset b = parse_ts(buf);
    EXPECT_EQ(values(a.x), values(b.x)) << name;
    EXPECT_EQ(a.x.shape(), b.x.shape());
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.class_names, b.class_names);
    EXPECT_EQ(a.original_lengths, b.original_lengths);
    EXPECT_EQ(a.name, b.name);
  }
}

TEST(ParseTsTest, RoundTripOfRandomValues) {
  const MtsDataset a = synth_dataset(3, 4, 2, 17, 0.7, 5);
  const auto path = (std::filesystem::temp_directory_path() / "cosco_roundtrip_TRAIN.ts").string();
  write_ts_file(path, a);
  const MtsDataset b = parse_ts_file(path);
  EXPECT_EQ(values(a.x), values(b.x));
  EXPECT_EQ(a.y, b.y);
  std::filesystem::remove(path);
}

TEST(ZnormalizeTest, Examples) {
  const MtsDataset n = znormalize(one_instance({1, 2, 3, 5, 5, 5}, 2, 3));
  const auto v = values(n.x);
  EXPECT_NEAR(v[0], -1.22474, 1e-5);
  EXPECT_NEAR(v[1], 0.0, 1e-5);
  EXPECT_NEAR(v[2], 1.22474, 1e-5);
  EXPECT_EQ(std::vector<double>(v.begin() + 3, v.end()), (std::vector<double>{0, 0, 0}));
}

TEST(ZnormalizeTest, AudioIsUnchanged) {
  MtsDataset ds = one_instance({1, 2, 3.5}, 1, 3);
  ds.is_audio = true;
  EXPECT_EQ(values(znormalize(ds).x), (std::vector<double>{1, 2, 3.5}));
}

TEST(ZnormalizeTest, MomentsOfNormalizedChannels) {
  const MtsDataset n = znormalize(synth_dataset(3, 5, 3, 40, 0.5, 11));
  for (std::size_t i = 0; i < n.size(); ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0.0, s2 = 0.0;
      for (std::size_t t = 0; t < 40; ++t) s += n.x.at({i, c, t});
      const double m = s / 40.0;
      for (std::size_t t = 0; t < 40; ++t) s2 += (n.x.at({i, c, t}) - m) * (n.x.at({i, c, t}) - m);
      EXPECT_LE(std::abs(m), 1e-10);
      EXPECT_NEAR(std::sqrt(s2 / 40.0), 1.0, 1e-8);
    }
}

TEST(ZnormalizeTest, UsesOriginalLengthAndKeepsPaddingZero) {
  const MtsDataset n = znormalize(parse_ts_file(fixture("unequal_length.ts")));
  const auto v = values(n.x);
  EXPECT_NEAR(v[0], -1.22474, 1e-5);
  EXPECT_NEAR(v[2], 1.22474, 1e-5);
  EXPECT_EQ(v[3], 0.0);
  EXPECT_EQ(v[4], 0.0);
  EXPECT_NEAR(v[5], std::sqrt(2.0), 1e-12);
}

TEST(KShotTest, CountsPerClass) {
  const MtsDataset four = synth_dataset(4, 15, 1, 8, 0.1, 1);
  const FewShotSplit s = sample_k_shot(four, 10, 3);
  EXPECT_EQ(s.train_indices.size(), 40u);
  const MtsDataset six = synth_dataset(6, 3, 1, 8, 0.1, 1);
  const FewShotSplit one = sample_k_shot(six, 1, 3);
  ASSERT_EQ(one.train_indices.size(), 6u);
  std::set<int> classes;
  for (auto i : one.train_indices) classes.insert(six.y[i]);
  EXPECT_EQ(classes.size(), 6u);
}

TEST(KShotTest, ExactlyKUniqueIndicesPerClassAndDeterministic) {
  const MtsDataset ds = synth_dataset(3, 9, 1, 8, 0.1, 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FewShotSplit s = sample_k_shot(ds, 4, seed);
    std::map<int, int> per_class;
    std::set<std::size_t> unique(s.train_indices.begin(), s.train_indices.end());
    EXPECT_EQ(unique.size(), s.train_indices.size());
    for (auto i : s.train_indices) ++per_class[ds.y[i]];
    for (const auto& [c, n] : per_class) EXPECT_EQ(n, 4) << "class " << c;
    EXPECT_EQ(s.train_indices, sample_k_shot(ds, 4, seed).train_indices);
    EXPECT_EQ(split_hash(s), split_hash(sample_k_shot(ds, 4, seed)));
  }
  EXPECT_NE(sample_k_shot(ds, 4, 0).train_indices, sample_k_shot(ds, 4, 1).train_indices);
}

TEST(KShotTest, TooFewInstancesNamesTheClass) {
  MtsDataset ds = synth_dataset(2, 3, 1, 8, 0.1, 1);
  ds.class_names = {"walking", "running"};
  try {
    sample_k_shot(ds, 4, 0);
    FAIL();
  } catch (const InsufficientClassSizeError& e) {
    EXPECT_EQ(e.class_name(), "walking");
  }
}

TEST(SynthTest, ShapeAndDeterminism) {
  const MtsDataset a = synth_dataset(3, 20, 2, 64, 0.0, 42);
  EXPECT_EQ(a.x.shape(), (Shape{60, 2, 64}));
  EXPECT_EQ(a.num_classes(), 3u);
  const MtsDataset b = synth_dataset(3, 20, 2, 64, 0.0, 42);
  EXPECT_EQ(values(a.x), values(b.x));
  EXPECT_EQ(a.y, b.y);
}

TEST(SynthTest, NoiselessDataIsSeparableByNearestNeighbour) {
  // Leave-one-out 1-NN over the whole set: every series is classified by its nearest other series.
  using namespace cosco::harness;
  const MtsDataset pool = synth_dataset(3, 20, 2, 64, 0.0, 7);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    data::FewShotSplit rest;
    for (std::size_t j = 0; j < pool.size(); ++j)
      if (j != i) rest.train_indices.push_back(j);
    const std::vector<std::size_t> self{i};
    correct += nn_ed_baseline(rest, ExperimentData{pool, pool.subset(self)}) == 1.0;
  }
  EXPECT_EQ(correct, pool.size());
}

TEST(RegistryTest, ParsesEntriesAndResolvesPaths) {
  const auto dir = std::filesystem::temp_directory_path() / "cosco_registry_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "registry.txt");
    out << "# name path is_audio\nBasicMotions BasicMotions false\n\nHeartbeat /abs/Heartbeat true\n";
  }
  const auto reg = load_registry((dir / "registry.txt").string());
  ASSERT_EQ(reg.size(), 2u);
  EXPECT_EQ(reg.at("BasicMotions").path, (dir / "BasicMotions").string());
  EXPECT_FALSE(reg.at("BasicMotions").is_audio);
  EXPECT_EQ(reg.at("Heartbeat").path, "/abs/Heartbeat");
  EXPECT_TRUE(reg.at("Heartbeat").is_audio);
  {
    std::ofstream out(dir / "registry.txt");
    out << "OnlyName\n";
  }
  EXPECT_THROW(load_registry((dir / "registry.txt").string()), Error);
  std::filesystem::remove_all(dir);
}

TEST(RegistryTest, AudioRows) {
  EXPECT_TRUE(is_builtin_audio("Heartbeat"));
  EXPECT_FALSE(is_builtin_audio("BasicMotions"));
}
