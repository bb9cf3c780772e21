#pragma once

// Sample-size scheduling driven by the infeasibility measure
// h(M) = (N - M) / N, plus the uniform index-set sampler.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "sirtr/objective.hpp"

namespace sirtr {

/// h(M) = (N - M) / N on {1, ..., N}.
class InfeasibilityFn {
 public:
  explicit InfeasibilityFn(std::size_t total) : total_(total) {
    if (total_ < 1) throw InputError("sample count must be positive");
  }

  std::size_t total() const { return total_; }

  double operator()(std::size_t m) const {
    if (m < 1 || m > total_) throw InputError("sample size out of range");
    return static_cast<double>(total_ - m) / static_cast<double>(total_);
  }

  /// Lower bound of h on 0 < M < N (also the smallest gap between values).
  double lower_bound() const { return 1.0 / static_cast<double>(total_); }
  /// h(1).
  double upper_bound() const { return (*this)(1); }

 private:
  std::size_t total_;
};

inline double h_value(const InfeasibilityFn& fn, std::size_t m) {
  return fn(m);
}

struct ScheduleParams {
  double growth = 1.05;         // c~ in (1, 2)
  double grad_fraction = 0.1;   // c in (0, 1]
  double mu = 0.0;              // > 0; commonly 100 / N
  std::size_t initial_size = 1; // N_0 in [1, N]

  void validate(std::size_t total) const {
    if (!(growth > 1.0 && growth < 2.0)) {
      throw InputError("growth factor must lie in (1, 2)");
    }
    if (!(grad_fraction > 0.0 && grad_fraction <= 1.0)) {
      throw InputError("gradient fraction must lie in (0, 1]");
    }
    if (!(mu > 0.0) || !std::isfinite(mu)) throw InputError("mu must be > 0");
    if (initial_size < 1 || initial_size > total) {
      throw InputError("initial sample size must lie in [1, N]");
    }
  }
};

/// Ceiling that treats values within 1e-9 (relative) of an integer as that
/// integer, so 1.1 * 100 rounds up to 110 rather than 111.
inline double snapped_ceil(double v) {
  const double r = std::round(v);
  if (std::abs(v - r) <= 1e-9 * std::max(1.0, std::abs(v))) return r;
  return std::ceil(v);
}

/// ceil(fraction * total) for fraction in (0, 1], clamped to [1, total].
inline std::size_t fraction_of(double fraction, std::size_t total) {
  const auto m =
      static_cast<std::size_t>(snapped_ceil(fraction * static_cast<double>(total)));
  return std::clamp<std::size_t>(m, 1, total);
}

/// N~_{k+1} = min(N, ceil(c~ N_k)).
inline std::size_t choose_tilde(const ScheduleParams& p, std::size_t current,
                                std::size_t total) {
  if (current < 1 || current > total) {
    throw InputError("current sample size out of range");
  }
  const double grown = snapped_ceil(p.growth * static_cast<double>(current));
  if (grown >= static_cast<double>(total)) return total;
  return static_cast<std::size_t>(grown);
}

/// ceil(0.95 N) in exact integer arithmetic.
inline std::size_t full_jump_threshold(std::size_t total) {
  return (95 * total + 99) / 100;
}

/// Trial size from q = ceil(N~ - mu N delta^2): q when N_0 <= q <= ceil(0.95N),
/// N~ when q < N_0, N when q is above the jump threshold.
inline std::size_t choose_trial(const ScheduleParams& p, std::size_t tilde,
                                double radius, std::size_t total) {
  if (!(radius > 0.0)) throw InputError("radius must be positive");
  if (tilde < 1 || tilde > total) throw InputError("tilde size out of range");
  const double n = static_cast<double>(total);
  const double q = snapped_ceil(static_cast<double>(tilde) - p.mu * n * radius * radius);
  if (q < static_cast<double>(p.initial_size)) return tilde;
  if (q > static_cast<double>(full_jump_threshold(total))) return total;
  return static_cast<std::size_t>(q);
}

/// N_{k+1,g} = ceil(c N^t).
inline std::size_t gradient_sample_size(const ScheduleParams& p,
                                        std::size_t trial) {
  if (trial < 1) throw InputError("trial size must be positive");
  const auto m = static_cast<std::size_t>(
      snapped_ceil(p.grad_fraction * static_cast<double>(trial)));
  return std::clamp<std::size_t>(m, 1, trial);
}

/// Draws uniform subsets of {0, ..., N-1} without replacement by partial
/// Fisher-Yates over a persistent permutation. Owns the run's generator.
class IndexSampler {
 public:
  IndexSampler(std::size_t total, std::uint64_t seed)
      : rng_(seed), perm_(total) {
    if (total < 1) throw InputError("sampler needs a positive population");
    for (std::size_t i = 0; i < total; ++i) perm_[i] = i;
  }

  std::size_t total() const { return perm_.size(); }
  std::mt19937_64& generator() { return rng_; }

  /// Shuffles a uniformly random size-m prefix into place; prefix order is
  /// itself uniformly random.
  void shuffle_prefix(std::size_t m) {
    const std::size_t n = perm_.size();
    for (std::size_t i = 0; i < m && i + 1 < n; ++i) {
      const std::size_t j = i + bounded(n - i);
      std::swap(perm_[i], perm_[j]);
    }
  }

  IndexSet prefix_set(std::size_t m) const {
    std::vector<std::size_t> idx(perm_.begin(),
                                 perm_.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(idx.begin(), idx.end());
    return IndexSet(std::move(idx), perm_.size());
  }

  IndexSet draw(std::size_t m) {
    if (m < 1 || m > perm_.size()) throw InputError("sample size out of range");
    if (m == perm_.size()) return IndexSet::full(m);
    shuffle_prefix(m);
    return prefix_set(m);
  }

 private:
  // Uniform integer in [0, range) by rejection on the top of the 64-bit range.
  std::size_t bounded(std::size_t range) {
    const std::uint64_t r = static_cast<std::uint64_t>(range);
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % r;
    std::uint64_t v = rng_();
    while (v >= limit) v = rng_();
    return static_cast<std::size_t>(v % r);
  }

  std::mt19937_64 rng_;
  std::vector<std::size_t> perm_;
};

/// I_trial uniform of size `trial`, I_grad uniform inside I_trial of size `grad`.
inline std::pair<IndexSet, IndexSet> draw_index_sets(IndexSampler& sampler,
                                                     std::size_t trial,
                                                     std::size_t grad) {
  if (grad < 1 || grad > trial || trial > sampler.total()) {
    throw InputError("index set sizes must satisfy 1 <= grad <= trial <= N");
  }
  if (trial == sampler.total()) {
    // Full set: the gradient subset still comes from a fresh shuffle.
    if (grad == trial) return {IndexSet::full(trial), IndexSet::full(trial)};
    return {IndexSet::full(trial), sampler.draw(grad)};
  }
  sampler.shuffle_prefix(trial);
  return {sampler.prefix_set(trial), sampler.prefix_set(grad)};
}

}  // namespace sirtr
