#pragma once

// Finite-sum objectives f_I(x) = (1/|I|) sum_{i in I} phi_i(x) and the
// sigmoid least-squares loss used for binary classification.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sirtr {

using Vector = Eigen::VectorXd;
using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Raised on contract violations of caller-supplied arguments.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Labelled examples: row i of `features` is a_i, labels b_i are 0 or 1.
class Dataset {
 public:
  Dataset() = default;

  Dataset(SparseRows features, std::vector<double> labels)
      : features_(std::move(features)), labels_(std::move(labels)) {
    features_.makeCompressed();
    if (features_.rows() < 1 || features_.cols() < 1) {
      throw InputError("dataset needs at least one example and one feature");
    }
    if (static_cast<std::size_t>(features_.rows()) != labels_.size()) {
      throw InputError("feature rows and labels differ in count");
    }
    for (double b : labels_) {
      if (b != 0.0 && b != 1.0) throw InputError("labels must be 0 or 1");
    }
  }

  std::size_t size() const { return labels_.size(); }
  std::size_t dimension() const {
    return static_cast<std::size_t>(features_.cols());
  }
  const SparseRows& features() const { return features_; }
  const std::vector<double>& labels() const { return labels_; }
  double label(std::size_t i) const { return labels_[i]; }

  /// a_i^T x.
  double dot(std::size_t i, const Vector& x) const {
    double s = 0.0;
    for (SparseRows::InnerIterator it(features_, static_cast<Eigen::Index>(i));
         it; ++it) {
      s += it.value() * x[it.index()];
    }
    return s;
  }

  /// out += w * a_i.
  void axpy(std::size_t i, double w, Vector& out) const {
    for (SparseRows::InnerIterator it(features_, static_cast<Eigen::Index>(i));
         it; ++it) {
      out[it.index()] += w * it.value();
    }
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    if (a.labels_ != b.labels_ || a.features_.rows() != b.features_.rows() ||
        a.features_.cols() != b.features_.cols()) {
      return false;
    }
    return Eigen::MatrixXd(a.features_) == Eigen::MatrixXd(b.features_);
  }

 private:
  SparseRows features_;
  std::vector<double> labels_;
};

/// Strictly increasing subset of {0, ..., N-1}.
class IndexSet {
 public:
  IndexSet() = default;

  IndexSet(std::vector<std::size_t> indices, std::size_t total)
      : indices_(std::move(indices)) {
    if (indices_.empty()) throw InputError("index set must be nonempty");
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      if (indices_[k] >= total) throw InputError("index out of range");
      if (k > 0 && indices_[k] <= indices_[k - 1]) {
        throw InputError("index set must be strictly increasing");
      }
    }
  }

  static IndexSet full(std::size_t total) {
    std::vector<std::size_t> all(total);
    for (std::size_t i = 0; i < total; ++i) all[i] = i;
    return IndexSet(std::move(all), total);
  }

  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  const std::vector<std::size_t>& indices() const { return indices_; }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  bool contains(std::size_t i) const {
    return std::binary_search(indices_.begin(), indices_.end(), i);
  }
  bool is_subset_of(const IndexSet& other) const {
    return std::includes(other.indices_.begin(), other.indices_.end(),
                         indices_.begin(), indices_.end());
  }

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  std::vector<std::size_t> indices_;
};

/// Per-term access required by the subsampled estimators.
template <typename T>
concept FiniteSum = requires(const T& f, std::size_t i, const Vector& x,
                             double w, Vector& g) {
  { f.size() } -> std::convertible_to<std::size_t>;
  { f.dimension() } -> std::convertible_to<std::size_t>;
  { f.term_value(i, x) } -> std::convertible_to<double>;
  f.add_term_gradient(i, x, w, g);
};

/// Overflow-safe logistic function.
inline double sigmoid(double t) {
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// phi_i(x) = (b_i - sigmoid(a_i^T x))^2.
class SigmoidLeastSquares {
 public:
  explicit SigmoidLeastSquares(const Dataset& data) : data_(&data) {}

  std::size_t size() const { return data_->size(); }
  std::size_t dimension() const { return data_->dimension(); }
  const Dataset& data() const { return *data_; }

  double term_value(std::size_t i, const Vector& x) const {
    const double r = data_->label(i) - sigmoid(data_->dot(i, x));
    return r * r;
  }

  // d/dx (b - s)^2 = -2 (b - s) s (1 - s) a.
  void add_term_gradient(std::size_t i, const Vector& x, double w,
                         Vector& g) const {
    const double s = sigmoid(data_->dot(i, x));
    const double coeff = -2.0 * (data_->label(i) - s) * s * (1.0 - s);
    data_->axpy(i, w * coeff, g);
  }

 private:
  const Dataset* data_;
};

namespace detail {

inline void check_dimension(std::size_t expected, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != expected) {
    throw InputError("point has dimension " + std::to_string(x.size()) +
                     ", expected " + std::to_string(expected));
  }
}

inline void check_term(std::size_t total, std::size_t i) {
  if (i >= total) throw InputError("example index out of range");
}

}  // namespace detail

template <FiniteSum F>
double phi_value(const F& f, std::size_t i, const Vector& x) {
  detail::check_term(f.size(), i);
  detail::check_dimension(f.dimension(), x);
  return f.term_value(i, x);
}

template <FiniteSum F>
Vector phi_gradient(const F& f, std::size_t i, const Vector& x) {
  detail::check_term(f.size(), i);
  detail::check_dimension(f.dimension(), x);
  Vector g = Vector::Zero(static_cast<Eigen::Index>(f.dimension()));
  f.add_term_gradient(i, x, 1.0, g);
  return g;
}

template <FiniteSum F>
double subsampled_value(const F& f, const IndexSet& set, const Vector& x) {
  if (set.empty()) throw InputError("empty index set");
  detail::check_dimension(f.dimension(), x);
  double s = 0.0;
  for (std::size_t i : set) s += f.term_value(i, x);
  return s / static_cast<double>(set.size());
}

template <FiniteSum F>
Vector subsampled_gradient(const F& f, const IndexSet& set, const Vector& x) {
  if (set.empty()) throw InputError("empty index set");
  detail::check_dimension(f.dimension(), x);
  Vector g = Vector::Zero(static_cast<Eigen::Index>(f.dimension()));
  const double w = 1.0 / static_cast<double>(set.size());
  for (std::size_t i : set) f.add_term_gradient(i, x, w, g);
  return g;
}

/// f_N(x) over all terms.
template <FiniteSum F>
double full_value(const F& f, const Vector& x) {
  detail::check_dimension(f.dimension(), x);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.term_value(i, x);
  return s / static_cast<double>(f.size());
}

template <FiniteSum F>
Vector full_gradient(const F& f, const Vector& x) {
  detail::check_dimension(f.dimension(), x);
  Vector g = Vector::Zero(static_cast<Eigen::Index>(f.dimension()));
  const double w = 1.0 / static_cast<double>(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) f.add_term_gradient(i, x, w, g);
  return g;
}

}  // namespace sirtr
