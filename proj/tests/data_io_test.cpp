#include "sirtr/data_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace sirtr {
namespace {

Eigen::MatrixXd dense(const Dataset& d) { return Eigen::MatrixXd(d.features()); }

TEST(ParseLibsvm, Basic) {
  const Dataset d = parse_libsvm("1 1:0.5 3:2.0\n-1 2:1.0\n");
  ASSERT_EQ(d.size(), 2u);
  ASSERT_EQ(d.dimension(), 3u);
  EXPECT_EQ(d.label(0), 1.0);
  EXPECT_EQ(d.label(1), 0.0);
  Eigen::MatrixXd expected(2, 3);
  expected << 0.5, 0, 2.0, 0, 1.0, 0;
  EXPECT_EQ(dense(d), expected);
}

TEST(ParseLibsvm, SignsCommentsAndBlankLines) {
  const Dataset d = parse_libsvm("# header\n+1 1:1\n\n  0 2:+3e-1\r\n2 1:-1\n");
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.label(0), 1.0);
  EXPECT_EQ(d.label(1), 0.0);
  EXPECT_EQ(d.label(2), 1.0);
  EXPECT_DOUBLE_EQ(d.features().coeff(1, 1), 0.3);
}

TEST(ParseLibsvm, ErrorsCarryLineNumbers) {
  auto line_of = [](std::string_view text) -> std::size_t {
    try {
      parse_libsvm(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("1 1:1\nx 1:1\n"), 2u);
  EXPECT_EQ(line_of("1 1:1\n1 2:1 1:3\n"), 2u);
  EXPECT_EQ(line_of("1 2:1 2:3\n"), 1u);
  EXPECT_EQ(line_of("1 0:1\n"), 1u);
  EXPECT_EQ(line_of("1 1:abc\n"), 1u);
  EXPECT_EQ(line_of("1 1\n"), 1u);
  EXPECT_EQ(line_of("1 1:nan\n"), 1u);
  EXPECT_EQ(line_of("1 1:1\n\n# c\n1 a:1"), 4u);
  EXPECT_THROW(parse_libsvm(""), ParseError);
  EXPECT_THROW(parse_libsvm("# only comments\n\n"), ParseError);
}

TEST(ParseLibsvm, RoundTripProperty) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> val(-5, 5);
  std::bernoulli_distribution keep(0.3), label(0.5);
  for (int rep = 0; rep < 20; ++rep) {
    std::ostringstream text;
    text.precision(17);
    for (int i = 0; i < 15; ++i) {
      text << (label(rng) ? "+1" : "-1");
      for (int j = 1; j <= 12; ++j) {
        if (keep(rng)) text << ' ' << j << ':' << val(rng);
      }
      text << '\n';
    }
    text << "1 12:1\n";
    const Dataset d = parse_libsvm(text.str());
    std::ostringstream out;
    write_libsvm(d, out);
    const Dataset again = parse_libsvm(out.str(), d.dimension());
    EXPECT_TRUE(d == again);
  }
}

TEST(LoadLibsvmPair, SharedDimension) {
  const auto dir = std::filesystem::temp_directory_path() / "sirtr_data_io_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "train.txt") << "1 1:1 2:1\n-1 2:3\n";
    std::ofstream(dir / "test.txt") << "1 5:1\n";
  }
  const auto [train, test] =
      load_libsvm_pair((dir / "train.txt").string(), (dir / "test.txt").string());
  EXPECT_EQ(train.dimension(), 5u);
  EXPECT_EQ(test.dimension(), 5u);
  {
    std::ofstream(dir / "bad.txt") << "1 1:1\n1 1:1 1:2\n";
  }
  try {
    load_libsvm((dir / "bad.txt").string());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("bad.txt"), std::string::npos);
  }
  EXPECT_THROW(load_libsvm((dir / "missing.txt").string()), std::runtime_error);
}

TEST(SyntheticDataset, DeterministicSplitAndLabels) {
  const auto [a_train, a_test] = synthetic_dataset(250, 7, 3.0, 42);
  const auto [b_train, b_test] = synthetic_dataset(250, 7, 3.0, 42);
  EXPECT_TRUE(a_train == b_train);
  EXPECT_TRUE(a_test == b_test);
  EXPECT_EQ(a_train.size(), 200u);
  EXPECT_EQ(a_test.size(), 50u);
  EXPECT_EQ(a_train.dimension(), 7u);
  const auto [c_train, c_test] = synthetic_dataset(250, 7, 3.0, 43);
  EXPECT_FALSE(a_train == c_train);
}

TEST(SyntheticDataset, NoiselessIsSeparable) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto [train, test] = synthetic_dataset(300, 5, inf, 9);
  // Recover the generating direction by regenerating it from the seed.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector w(5);
  for (auto& v : w) v = normal(rng);
  EXPECT_EQ(classification_error(train, w), 0.0);
  EXPECT_EQ(classification_error(test, w), 0.0);
}

TEST(ClassificationError, Conventions) {
  const Dataset d = parse_libsvm("1 1:1\n0 1:-1\n1 1:2\n1 1:-3\n");
  EXPECT_DOUBLE_EQ(classification_error(d, Vector::Zero(1)), 0.75);  // sign(0) -> 0
  EXPECT_DOUBLE_EQ(classification_error(d, Vector::Constant(1, 1.0)), 0.25);
  const Dataset ones = parse_libsvm("1 1:1\n1 1:2\n");
  EXPECT_DOUBLE_EQ(classification_error(ones, Vector::Constant(1, -1.0)), 1.0);
  EXPECT_DOUBLE_EQ(classification_error(ones, Vector::Constant(1, 1.0)), 0.0);
  EXPECT_THROW(classification_error(d, Vector::Zero(2)), InputError);
}

TEST(ClassificationError, PositiveScaleInvariance) {
  const auto [train, test] = synthetic_dataset(200, 4, 1.0, 3);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 20; ++rep) {
    Vector x(4);
    for (auto& v : x) v = normal(rng);
    const double scale = std::exp(normal(rng) * 3);
    EXPECT_EQ(classification_error(test, x), classification_error(test, scale * x));
  }
}

TEST(SplitDataset, SeededAndDisjoint) {
  const auto [train, test] = synthetic_dataset(100, 3, 1.0, 1);
  const auto [a, b] = split_dataset(train, 0.25, 7);
  EXPECT_EQ(a.size(), 60u);
  EXPECT_EQ(b.size(), 20u);
  const auto [c, d] = split_dataset(train, 0.25, 7);
  EXPECT_TRUE(a == c);
  EXPECT_TRUE(b == d);
  EXPECT_THROW(split_dataset(train, 1.0, 7), InputError);
}

}  // namespace
}  // namespace sirtr
