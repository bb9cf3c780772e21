#pragma once

// LIBSVM text ingestion, synthetic classification data, and the test-set
// classification error of a linear predictor.

#include <Eigen/SparseCore>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sirtr/objective.hpp"
#include "sirtr/restoration.hpp"

namespace sirtr {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct RawRecord {
  double label = 0.0;
  std::vector<std::pair<std::size_t, double>> entries;  // 1-based, increasing
};

namespace detail {

inline bool parse_real(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty() || tok.front() == '+') return false;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

inline bool parse_index(std::string_view tok, std::size_t& out) {
  if (tok.empty()) return false;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end && out >= 1;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace detail

/// Reads "label idx:val idx:val ..." lines. Blank lines and lines starting
/// with '#' are skipped.
inline std::vector<RawRecord> parse_libsvm_records(std::istream& in) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = detail::split_ws(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    RawRecord rec;
    if (!detail::parse_real(tokens.front(), rec.label)) {
      throw ParseError(line_no, "malformed label '" + std::string(tokens.front()) + "'");
    }
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const std::string_view tok = tokens[t];
      const auto colon = tok.find(':');
      std::size_t index = 0;
      double value = 0.0;
      if (colon == std::string_view::npos ||
          !detail::parse_index(tok.substr(0, colon), index) ||
          !detail::parse_real(tok.substr(colon + 1), value)) {
        throw ParseError(line_no, "malformed feature '" + std::string(tok) + "'");
      }
      if (!rec.entries.empty() && index <= rec.entries.back().first) {
        throw ParseError(line_no, "feature indices must be strictly increasing");
      }
      rec.entries.emplace_back(index, value);
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw ParseError(line_no, "no records");
  return records;
}

inline std::size_t max_feature_index(const std::vector<RawRecord>& records) {
  std::size_t n = 0;
  for (const auto& r : records) {
    if (!r.entries.empty()) n = std::max(n, r.entries.back().first);
  }
  return n;
}

/// Labels <= 0 map to 0, labels > 0 map to 1.
inline Dataset make_dataset(const std::vector<RawRecord>& records,
                            std::size_t dimension) {
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> labels;
  labels.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    labels.push_back(records[i].label > 0.0 ? 1.0 : 0.0);
    for (const auto& [idx, val] : records[i].entries) {
      if (idx > dimension) throw InputError("feature index exceeds dimension");
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(idx - 1), val);
    }
  }
  SparseRows features(static_cast<Eigen::Index>(records.size()),
                      static_cast<Eigen::Index>(dimension));
  features.setFromTriplets(triplets.begin(), triplets.end());
  return Dataset(std::move(features), std::move(labels));
}

inline Dataset parse_libsvm(std::istream& in, std::size_t min_dimension = 0) {
  const auto records = parse_libsvm_records(in);
  return make_dataset(records, std::max(min_dimension, max_feature_index(records)));
}

inline Dataset parse_libsvm(std::string_view text, std::size_t min_dimension = 0) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in, min_dimension);
}

inline std::vector<RawRecord> read_libsvm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return parse_libsvm_records(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + e.what());
  }
}

inline Dataset load_libsvm(const std::string& path) {
  const auto records = read_libsvm_file(path);
  return make_dataset(records, max_feature_index(records));
}

/// Train and test files share one feature space: n is the largest index in either.
inline std::pair<Dataset, Dataset> load_libsvm_pair(const std::string& train_path,
                                                    const std::string& test_path) {
  const auto train = read_libsvm_file(train_path);
  const auto test = read_libsvm_file(test_path);
  const std::size_t n = std::max(max_feature_index(train), max_feature_index(test));
  return {make_dataset(train, n), make_dataset(test, n)};
}

/// Writes every stored entry, explicit zeros included.
inline void write_libsvm(const Dataset& data, std::ostream& out) {
  const auto& rows = data.features();
  out << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << (data.label(i) > 0.0 ? "1" : "0");
    for (SparseRows::InnerIterator it(rows, static_cast<Eigen::Index>(i)); it; ++it) {
      out << ' ' << (it.index() + 1) << ':' << it.value();
    }
    out << '\n';
  }
}

inline Dataset select_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> labels;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    labels.push_back(data.label(rows[r]));
    for (SparseRows::InnerIterator it(data.features(), static_cast<Eigen::Index>(rows[r]));
         it; ++it) {
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(it.index()), it.value());
    }
  }
  SparseRows features(static_cast<Eigen::Index>(rows.size()), data.features().cols());
  features.setFromTriplets(triplets.begin(), triplets.end());
  return Dataset(std::move(features), std::move(labels));
}

/// Seeded random train/test split of a single dataset.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& data,
                                                 double test_fraction,
                                                 std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InputError("test fraction must lie in (0, 1)");
  }
  const std::size_t n = data.size();
  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(n)));
  if (n_test < 1 || n_test >= n) throw InputError("split leaves an empty side");
  IndexSampler sampler(n, seed);
  const IndexSet test = sampler.draw(n_test);
  std::vector<std::size_t> train_rows;
  for (std::size_t i = 0; i < n; ++i) {
    if (!test.contains(i)) train_rows.push_back(i);
  }
  return {select_rows(data, train_rows), select_rows(data, test.indices())};
}

/// Standard normal features, ground truth w* ~ N(0, I), labels
/// b_i = [a_i^T w* + e_i > 0] with e_i ~ N(0, 1/separation^2). The first
/// round(0.8 * count) examples form the training set.
inline std::pair<Dataset, Dataset> synthetic_dataset(std::size_t count,
                                                     std::size_t dimension,
                                                     double separation,
                                                     std::uint64_t seed) {
  if (count < 2 || dimension < 1) {
    throw InputError("synthetic data needs count >= 2 and dimension >= 1");
  }
  if (!(separation > 0.0)) throw InputError("separation must be > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector truth(static_cast<Eigen::Index>(dimension));
  for (auto& w : truth) w = normal(rng);
  const double noise = std::isinf(separation) ? 0.0 : 1.0 / separation;

  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(count))), 1,
      count - 1);
  auto make = [&](std::size_t rows) {
    Eigen::MatrixXd dense(static_cast<Eigen::Index>(rows),
                          static_cast<Eigen::Index>(dimension));
    std::vector<double> labels(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < dimension; ++j) {
        dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = normal(rng);
      }
      const double e = noise * normal(rng);
      const double margin = dense.row(static_cast<Eigen::Index>(i)).dot(truth) + e;
      labels[i] = margin > 0.0 ? 1.0 : 0.0;
    }
    SparseRows sparse = dense.sparseView(0.0, 0.0);
    return Dataset(std::move(sparse), std::move(labels));
  };
  Dataset train = make(n_train);
  Dataset test = make(count - n_train);
  return {std::move(train), std::move(test)};
}

/// Mean |b_i - max(sign(a_i^T x), 0)| over the test set; sign(0) predicts 0.
inline double classification_error(const Dataset& test, const Vector& x) {
  if (test.size() == 0) throw InputError("empty test set");
  detail::check_dimension(test.dimension(), x);
  double wrong = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double predicted = test.dot(i, x) > 0.0 ? 1.0 : 0.0;
    wrong += std::abs(test.label(i) - predicted);
  }
  return wrong / static_cast<double>(test.size());
}

}  // namespace sirtr
