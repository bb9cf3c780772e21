#pragma once

// Constant-step SGD and TRish baselines on subsampled gradients.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "sirtr/objective.hpp"
#include "sirtr/restoration.hpp"
#include "sirtr/trace.hpp"

namespace sirtr {

class TuningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrishConfig {
  double alpha = 0.1;
  double gamma1 = 4.0;
  double gamma2 = 0.5;
  std::size_t sample_size = 1;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;

  void validate(std::size_t total) const {
    if (!(alpha > 0.0)) throw InputError("alpha must be > 0");
    if (!(gamma2 > 0.0 && gamma2 < gamma1)) {
      throw InputError("need 0 < gamma2 < gamma1");
    }
    if (sample_size < 1 || sample_size > total) {
      throw InputError("sample size must lie in [1, N]");
    }
  }
};

/// Piecewise TRish update. The interval [1/gamma1, 1/gamma2] is closed, so the
/// boundaries take the normalized step.
inline Vector trish_step(const Vector& x, const Vector& g,
                         const TrishConfig& cfg) {
  const double norm = g.norm();
  if (norm < 1.0 / cfg.gamma1) return x - (cfg.gamma1 * cfg.alpha) * g;
  if (norm <= 1.0 / cfg.gamma2) return x - (cfg.alpha / norm) * g;
  return x - (cfg.gamma2 * cfg.alpha) * g;
}

inline std::size_t steps_per_epoch(std::size_t total, std::size_t sample) {
  return (total + sample - 1) / sample;
}

namespace detail {

// Drives `epochs * ceil(N/S)` steps of x <- update(x, g_S(x)); each step costs
// 2S/N (forward plus backward pass on the sampled terms).
template <FiniteSum F, typename Update>
RunResult stochastic_gradient_loop(const F& f, std::size_t sample,
                                   std::size_t epochs, std::uint64_t seed,
                                   const RunOptions& opt, Update&& update) {
  const std::size_t total = f.size();
  if (sample < 1 || sample > total) {
    throw InputError("sample size must lie in [1, N]");
  }
  IndexSampler sampler(total, seed);
  RunResult out;
  out.x = opt.initial_point.size() == 0
              ? Vector::Zero(static_cast<Eigen::Index>(f.dimension()))
              : opt.initial_point;
  detail::check_dimension(f.dimension(), out.x);
  if (opt.curve) opt.curve->observe(0.0, out.x);

  const std::size_t steps = epochs * steps_per_epoch(total, sample);
  const double step_cost =
      2.0 * static_cast<double>(sample) / static_cast<double>(total);
  double cost = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const IndexSet batch = sampler.draw(sample);
    const Vector g = subsampled_gradient(f, batch, out.x);
    Vector next = update(out.x, g);
    cost += step_cost;

    TraceRecord rec;
    rec.k = k;
    rec.sample_size = sample;
    rec.trial_size = sample;
    rec.grad_size = sample;
    rec.grad_norm = g.norm();
    rec.step_norm = (next - out.x).norm();
    rec.cost = cost;
    rec.final_pass_cost = cost;
    out.trace.push_back(rec);

    out.x = std::move(next);
    if (opt.curve) opt.curve->observe(cost, out.x);
  }
  if (opt.curve) {
    opt.curve->finish(out.x);
    out.curve = opt.curve->points();
  }
  out.reason = StopReason::epoch_budget;
  out.iterations = steps;
  out.final_sample_size = sample;
  out.reached_full_accuracy = sample == total;
  out.cost = cost;
  out.final_pass_cost = cost;
  return out;
}

}  // namespace detail

/// x_{k+1} = x_k - alpha g_S(x_k) with a fresh uniform batch per step.
template <FiniteSum F>
RunResult sgd_run(const F& f, double alpha, std::size_t sample,
                  std::size_t epochs, std::uint64_t seed,
                  const RunOptions& opt = {}) {
  if (!(alpha >= 0.0)) throw InputError("alpha must be >= 0");
  return detail::stochastic_gradient_loop(
      f, sample, epochs, seed, opt,
      [alpha](const Vector& x, const Vector& g) -> Vector {
        return x - alpha * g;
      });
}

template <FiniteSum F>
RunResult trish_run(const F& f, const TrishConfig& cfg,
                    const RunOptions& opt = {}) {
  cfg.validate(f.size());
  return detail::stochastic_gradient_loop(
      f, cfg.sample_size, cfg.epochs, cfg.seed, opt,
      [&cfg](const Vector& x, const Vector& g) -> Vector {
        return trish_step(x, g, cfg);
      });
}

struct GammaChoice {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double mean_grad_norm = 0.0;  // G
};

/// gamma1 = 4/G, gamma2 = 1/(2G) from the mean gradient norm G of a unit-step SGD run.
inline GammaChoice gammas_from_mean_norm(double mean_norm) {
  if (!(mean_norm > 0.0) || !std::isfinite(mean_norm)) {
    throw TuningError("mean stochastic gradient norm is zero");
  }
  return {4.0 / mean_norm, 1.0 / (2.0 * mean_norm), mean_norm};
}

template <FiniteSum F>
GammaChoice tune_gammas(const F& f, std::size_t sample, std::size_t epochs,
                        std::uint64_t seed) {
  const RunResult sgd = sgd_run(f, 1.0, sample, epochs, seed);
  if (sgd.trace.empty()) throw TuningError("tuning run took no steps");
  double sum = 0.0;
  for (const auto& rec : sgd.trace) sum += rec.grad_norm;
  return gammas_from_mean_norm(sum / static_cast<double>(sgd.trace.size()));
}

}  // namespace sirtr
