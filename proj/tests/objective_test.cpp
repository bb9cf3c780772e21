#include "sirtr/objective.hpp"

#include <gtest/gtest.h>

#include <random>

#include "sirtr/data_io.hpp"
#include "sirtr/restoration.hpp"
#include "test_util.hpp"

namespace sirtr {
namespace {

using testing::central_difference;
using testing::make_dataset;

TEST(Sigmoid, BranchesAgreeAndNeverOverflow) {
  for (double t : {-30.0, -2.0, -1e-3, 0.0, 1e-3, 2.0, 30.0}) {
    EXPECT_NEAR(sigmoid(t), 1.0 / (1.0 + std::exp(-t)), 1e-15) << t;
  }
  EXPECT_EQ(sigmoid(-1e4), 0.0);
  EXPECT_EQ(sigmoid(1e4), 1.0);
  EXPECT_FALSE(std::isnan(sigmoid(-800.0)));
}

TEST(PhiValue, ZeroPointGivesQuarter) {
  const Dataset d = make_dataset({{1, 2}, {-3, 0.5}}, {1, 0});
  const SigmoidLeastSquares f(d);
  const Vector x = Vector::Zero(2);
  EXPECT_DOUBLE_EQ(phi_value(f, 0, x), 0.25);
  EXPECT_DOUBLE_EQ(phi_value(f, 1, x), 0.25);
}

TEST(PhiValue, LargeMarginLimit) {
  const Dataset d = make_dataset({{1, 0}}, {1});
  const SigmoidLeastSquares f(d);
  Vector x(2);
  x << 50.0, 0.0;
  EXPECT_LT(phi_value(f, 0, x), 1e-40);
  x << 1e6, 0.0;
  EXPECT_EQ(phi_value(f, 0, x), 0.0);
}

TEST(PhiValue, ClosedFormExample) {
  const Dataset d = make_dataset({{1, 2}}, {1});
  const SigmoidLeastSquares f(d);
  Vector x(2);
  x << 1.0, 0.5;
  const double expected = testing::reference_phi(1.0, 2.0);
  EXPECT_NEAR(phi_value(f, 0, x), expected, 1e-15);
  EXPECT_NEAR(phi_value(f, 0, x), 0.0142093, 1e-7);
}

TEST(PhiValue, RejectsBadInput) {
  const Dataset d = make_dataset({{1, 2}}, {1});
  const SigmoidLeastSquares f(d);
  EXPECT_THROW(phi_value(f, 0, Vector::Zero(3)), InputError);
  EXPECT_THROW(phi_value(f, 1, Vector::Zero(2)), InputError);
  EXPECT_THROW(phi_gradient(f, 0, Vector::Zero(1)), InputError);
}

TEST(PhiGradient, ZeroPointMatchesFiniteDifferences) {
  const Dataset d = make_dataset({{1, -2, 0.5}, {3, 1, -1}}, {1, 0});
  const SigmoidLeastSquares f(d);
  const Vector x = Vector::Zero(3);
  for (std::size_t i = 0; i < 2; ++i) {
    const Vector fd = central_difference(
        [&](const Vector& y) { return phi_value(f, i, y); }, x);
    const Vector g = phi_gradient(f, i, x);
    EXPECT_LT((g - fd).norm(), 1e-9);
  }
  // b = 1 -> -0.25 a, b = 0 -> +0.25 a.
  Vector a0(3), a1(3);
  a0 << 1, -2, 0.5;
  a1 << 3, 1, -1;
  EXPECT_LT((phi_gradient(f, 0, x) + 0.25 * a0).norm(), 1e-15);
  EXPECT_LT((phi_gradient(f, 1, x) - 0.25 * a1).norm(), 1e-15);
}

TEST(PhiGradient, ZeroFeatureRowGivesZero) {
  const Dataset d = make_dataset({{0, 0}, {1, 1}}, {1, 0});
  const SigmoidLeastSquares f(d);
  Vector x(2);
  x << 0.3, -0.7;
  EXPECT_EQ(phi_gradient(f, 0, x).norm(), 0.0);
}

TEST(Subsampled, ToyMeanAndIdentities) {
  const Dataset d = make_dataset({{1, 0}, {0, 1}, {1, 1}}, {1, 0, 1});
  const SigmoidLeastSquares f(d);
  Vector x(2);
  x << 0.4, -1.2;
  const IndexSet pair({0, 2}, 3);
  const double by_hand = (testing::reference_phi(1, 0.4) + testing::reference_phi(1, -0.8)) / 2;
  EXPECT_NEAR(subsampled_value(f, pair, x), by_hand, 1e-15);
  EXPECT_DOUBLE_EQ(subsampled_value(f, IndexSet::full(3), x), full_value(f, x));
  EXPECT_DOUBLE_EQ(subsampled_value(f, pair, Vector::Zero(2)), 0.25);

  const IndexSet single({1}, 3);
  EXPECT_LT((subsampled_gradient(f, single, x) - phi_gradient(f, 1, x)).norm(), 1e-16);
  EXPECT_LT((subsampled_gradient(f, IndexSet::full(3), x) - full_gradient(f, x)).norm(),
            1e-16);
}

TEST(Subsampled, GradientAtZeroFormula) {
  const Dataset d = make_dataset({{1, 2}, {-1, 0.5}, {2, -2}, {0, 1}}, {1, 0, 0, 1});
  const SigmoidLeastSquares f(d);
  const IndexSet set({0, 1, 3}, 4);
  Vector expected = Vector::Zero(2);
  for (std::size_t i : set) {
    Vector a(2);
    a << d.features().coeff(static_cast<int>(i), 0), d.features().coeff(static_cast<int>(i), 1);
    expected += -0.5 * (d.label(i) - 0.5) * a;
  }
  expected /= 3.0;
  EXPECT_LT((subsampled_gradient(f, set, Vector::Zero(2)) - expected).norm(), 1e-15);
}

TEST(Subsampled, EmptySetRejected) {
  const Dataset d = make_dataset({{1}}, {1});
  const SigmoidLeastSquares f(d);
  EXPECT_THROW(subsampled_value(f, IndexSet(), Vector::Zero(1)), InputError);
  EXPECT_THROW(subsampled_gradient(f, IndexSet(), Vector::Zero(1)), InputError);
}

TEST(IndexSetTest, Invariants) {
  EXPECT_THROW(IndexSet({}, 3), InputError);
  EXPECT_THROW(IndexSet({0, 0}, 3), InputError);
  EXPECT_THROW(IndexSet({2, 1}, 3), InputError);
  EXPECT_THROW(IndexSet({3}, 3), InputError);
  const IndexSet s({0, 2}, 3);
  EXPECT_TRUE(s.contains(2));
  EXPECT_FALSE(s.contains(1));
  EXPECT_TRUE(s.is_subset_of(IndexSet::full(3)));
}

TEST(DatasetTest, Invariants) {
  EXPECT_THROW(make_dataset({{1, 2}}, {0.5}), InputError);
  EXPECT_THROW(make_dataset({{1, 2}}, {1, 0}), InputError);
}

// Random (x, I) on synthetic data: analytic gradient vs central differences,
// full-set mean vs plain mean, and phi in [0, 1].
TEST(SubsampledProperty, GradientMatchesFiniteDifferences) {
  const auto [train, test] = synthetic_dataset(120, 6, 3.0, 11);
  const SigmoidLeastSquares f(train);
  std::mt19937_64 rng(5);
  IndexSampler sampler(train.size(), 17);
  std::uniform_int_distribution<std::size_t> size(1, train.size());
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x = testing::random_point(rng, train.dimension(), 0.7);
    const IndexSet set = sampler.draw(size(rng));
    const Vector fd = central_difference(
        [&](const Vector& y) { return subsampled_value(f, set, y); }, x);
    const Vector g = subsampled_gradient(f, set, x);
    EXPECT_LE((g - fd).norm() / std::max(1.0, fd.norm()), 1e-6);

    double plain = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      plain += testing::reference_phi(train.label(i), train.dot(i, x));
      const double v = phi_value(f, i, x);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    plain /= static_cast<double>(train.size());
    EXPECT_NEAR(subsampled_value(f, IndexSet::full(train.size()), x), plain,
                1e-12 * std::abs(plain));
  }
}

}  // namespace
}  // namespace sirtr
