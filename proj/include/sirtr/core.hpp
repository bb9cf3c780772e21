#pragma once

// Stochastic inexact-restoration trust-region solver.
//
// Each outer iteration restores feasibility of the sample size (Step 1),
// chooses a cheaper trial size tied to the radius (Step 2), takes the scaled
// negative subsampled gradient (Step 3), guards the model once the full
// sample is in use (Step 4), updates the merit penalty (Step 5), and accepts
// or rejects the step against the merit function (Step 6).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sirtr/objective.hpp"
#include "sirtr/restoration.hpp"
#include "sirtr/trace.hpp"

namespace sirtr {

struct SirtrConfig {
  double initial_radius = 1.0;
  double max_radius = 100.0;
  double radius_factor = 2.0;  // gamma
  double eta = 0.1;
  double eta2 = 1e-6;
  double theta0 = 0.9;
  ScheduleParams schedule;
  double tolerance = 1e-3;
  std::size_t max_iter = 1000;
  double max_full_evals = 500.0;
  std::size_t inner_loop_cap = 200;
  std::uint64_t seed = 0;

  /// Experimental defaults: c~ = 1.05, c = 0.1, mu = 100/N, N_0 = ceil(0.1N).
  static SirtrConfig defaults_for(std::size_t total) {
    SirtrConfig cfg;
    cfg.schedule.growth = 1.05;
    cfg.schedule.grad_fraction = 0.1;
    cfg.schedule.mu = 100.0 / static_cast<double>(total);
    cfg.schedule.initial_size = fraction_of(0.1, total);
    return cfg;
  }

  void validate(std::size_t total) const {
    if (!(initial_radius > 0.0 && initial_radius < max_radius)) {
      throw InputError("need 0 < initial radius < max radius");
    }
    if (!(radius_factor > 1.0)) throw InputError("radius factor must be > 1");
    if (!(eta > 0.0 && eta < 1.0)) throw InputError("eta must lie in (0, 1)");
    if (!(eta2 > 0.0)) throw InputError("eta2 must be > 0");
    if (!(theta0 > 0.0 && theta0 < 1.0)) {
      throw InputError("theta0 must lie in (0, 1)");
    }
    if (!(tolerance > 0.0)) throw InputError("tolerance must be > 0");
    if (inner_loop_cap < 1) throw InputError("inner loop cap must be >= 1");
    schedule.validate(total);
  }
};

struct SirtrState {
  Vector x;
  std::size_t sample_size = 0;  // N_k
  std::size_t tilde_size = 0;   // N~_{k+1}
  double theta = 0.0;
  double radius = 0.0;
  bool full_flag = false;       // F_k
  bool last_success = true;     // iflag
  double f_current = 0.0;       // f_{N_k}(x_k) on f_set
  IndexSet f_set;
  std::size_t k = 0;
  double cost = 0.0;
};

struct TrialPoint {
  std::size_t trial_size = 0;
  std::size_t grad_size = 0;
  IndexSet trial_set;
  IndexSet grad_set;
  double f_trial_at_x = 0.0;
  Vector direction;      // g_k
  double grad_norm = 0.0;
  Vector step;           // p_k
  double f_trial_at_step = 0.0;
  double model_at_step = 0.0;  // m_k(p_k)

  bool degenerate() const { return grad_norm == 0.0; }
};

/// Initial state: x_0, N_0, f_{N_0}(x_0) on a fresh draw of size N_0.
template <FiniteSum F>
SirtrState initial_state(const F& f, const SirtrConfig& cfg,
                         IndexSampler& sampler,
                         const Vector& initial_point = Vector()) {
  const std::size_t total = f.size();
  SirtrState s;
  s.x = initial_point.size() == 0
            ? Vector::Zero(static_cast<Eigen::Index>(f.dimension()))
            : initial_point;
  detail::check_dimension(f.dimension(), s.x);
  s.sample_size = cfg.schedule.initial_size;
  s.tilde_size = s.sample_size;
  s.theta = cfg.theta0;
  s.radius = cfg.initial_radius;
  s.f_set = sampler.draw(s.sample_size);
  s.f_current = subsampled_value(f, s.f_set, s.x);
  s.cost = static_cast<double>(s.sample_size) / static_cast<double>(total);
  return s;
}

/// Step 1.
inline void restoration_step(SirtrState& s, const ScheduleParams& schedule,
                             std::size_t total) {
  if (!s.last_success) return;
  s.full_flag = s.sample_size == total;
  s.tilde_size = choose_tilde(schedule, s.sample_size, total);
}

/// Steps 2-3 for the current radius. Adds (N^t + N_g)/N to the cost.
template <FiniteSum F>
TrialPoint build_trial(SirtrState& s, const F& f, IndexSampler& sampler,
                       const ScheduleParams& schedule) {
  const std::size_t total = f.size();
  TrialPoint t;
  t.trial_size = choose_trial(schedule, s.tilde_size, s.radius, total);
  t.grad_size = gradient_sample_size(schedule, t.trial_size);
  auto [trial_set, grad_set] = draw_index_sets(sampler, t.trial_size, t.grad_size);
  t.trial_set = std::move(trial_set);
  t.grad_set = std::move(grad_set);
  t.f_trial_at_x = subsampled_value(f, t.trial_set, s.x);
  t.direction = subsampled_gradient(f, t.grad_set, s.x);
  t.grad_norm = t.direction.norm();
  s.cost += static_cast<double>(t.trial_size + t.grad_size) /
            static_cast<double>(total);
  if (t.degenerate()) return t;
  t.step = (-s.radius / t.grad_norm) * t.direction;
  t.model_at_step = t.f_trial_at_x - s.radius * t.grad_norm;
  t.f_trial_at_step = subsampled_value(f, t.trial_set, s.x + t.step);
  return t;
}

/// True when Step 4 must shrink the radius and redraw.
inline bool model_guard_rejects(const SirtrState& s, const TrialPoint& t,
                                std::size_t total) {
  return !t.degenerate() && s.sample_size == total && t.trial_size < total &&
         s.f_current - t.model_at_step < s.radius * t.grad_norm;
}

struct GuardOutcome {
  TrialPoint trial;
  std::size_t repeats = 0;
  bool cap_exceeded = false;
};

/// Step 4: while N_k = N, N^t < N and f_N(x_k) - m_k(p_k) < radius * |g_k|,
/// shrink the radius and redraw. f_N(x_k) is the cached value since N_k = N.
template <FiniteSum F>
GuardOutcome model_quality_guard(SirtrState& s, TrialPoint trial, const F& f,
                                 IndexSampler& sampler, const SirtrConfig& cfg) {
  const std::size_t total = f.size();
  GuardOutcome out;
  while (model_guard_rejects(s, trial, total)) {
    if (out.repeats == cfg.inner_loop_cap) {
      out.cap_exceeded = true;
      break;
    }
    s.radius /= cfg.radius_factor;
    ++out.repeats;
    trial = build_trial(s, f, sampler, cfg.schedule);
  }
  out.trial = std::move(trial);
  return out;
}

inline double restoration_gain(const SirtrState& s, const InfeasibilityFn& h) {
  return h(s.sample_size) - h(s.tilde_size);
}

/// Pred_k(theta) = theta (f_{N_k}(x_k) - m_k(p_k)) + (1 - theta)(h(N_k) - h(N~)).
inline double pred(double theta, const SirtrState& s, const TrialPoint& t,
                   const InfeasibilityFn& h) {
  return theta * (s.f_current - t.model_at_step) +
         (1.0 - theta) * restoration_gain(s, h);
}

/// Ared_k(x_k + p_k, theta) on the trial index set.
inline double ared(double theta, const SirtrState& s, const TrialPoint& t,
                   const InfeasibilityFn& h) {
  return theta * (s.f_current - t.f_trial_at_step) +
         (1.0 - theta) * (h(s.sample_size) - h(t.trial_size));
}

/// Step 5. Keeps theta_k when Pred(theta_k) >= eta * hdiff, otherwise the
/// largest theta meeting that bound.
inline double penalty_update(const SirtrState& s, const TrialPoint& t,
                             const InfeasibilityFn& h, double eta) {
  const double hdiff = restoration_gain(s, h);
  if (pred(s.theta, s, t, h) >= eta * hdiff) return s.theta;
  const double denom = t.model_at_step - s.f_current + hdiff;
  if (!(denom > 0.0)) {
    throw std::logic_error("penalty update denominator is not positive");
  }
  const double theta = (1.0 - eta) * hdiff / denom;
  if (!(theta > 0.0)) throw std::logic_error("penalty parameter collapsed");
  return std::min(theta, s.theta);
}

/// Step 6. Returns true on a successful iteration; advances k either way.
inline bool acceptance_and_update(SirtrState& s, const TrialPoint& t,
                                  double theta_next, const SirtrConfig& cfg,
                                  const InfeasibilityFn& h) {
  const double hdiff = restoration_gain(s, h);
  const double gain = ared(theta_next, s, t, h);
  const double predicted = pred(theta_next, s, t, h);
  const double flag = s.full_flag ? 1.0 : 0.0;
  const bool success = gain >= cfg.eta * predicted &&
                       (t.grad_norm - cfg.eta2 * s.radius) * flag >= 0.0;
  s.theta = theta_next;
  if (success) {
    s.x += t.step;
    s.sample_size = t.trial_size;
    s.f_current = t.f_trial_at_step;
    s.f_set = t.trial_set;
    if (hdiff == 0.0 &&
        s.radius * s.radius >= h.lower_bound() / cfg.schedule.mu) {
      s.radius = std::min(cfg.radius_factor * s.radius, cfg.max_radius);
    }
  } else {
    s.radius /= cfg.radius_factor;
  }
  s.last_success = success;
  ++s.k;
  return success;
}

template <FiniteSum F>
RunResult run(const F& f, const SirtrConfig& cfg, const RunOptions& opt = {}) {
  const std::size_t total = f.size();
  cfg.validate(total);
  const InfeasibilityFn h(total);
  IndexSampler sampler(total, cfg.seed);
  SirtrState s = initial_state(f, cfg, sampler, opt.initial_point);
  double final_pass_cost = s.cost;

  RunResult out;
  if (opt.curve) opt.curve->observe(s.cost, s.x);

  for (;;) {
    if (s.k >= cfg.max_iter) {
      out.reason = StopReason::iteration_budget;
      break;
    }
    if (s.cost >= cfg.max_full_evals) {
      out.reason = StopReason::cost_budget;
      break;
    }
    restoration_step(s, cfg.schedule, total);

    TraceRecord rec;
    rec.k = s.k;
    rec.sample_size = s.sample_size;
    rec.tilde_size = s.tilde_size;
    rec.radius_start = s.radius;
    rec.theta = s.theta;
    rec.f_current = s.f_current;
    rec.full_flag = s.full_flag;
    rec.hdiff = restoration_gain(s, h);

    GuardOutcome guarded = model_quality_guard(
        s, build_trial(s, f, sampler, cfg.schedule), f, sampler, cfg);
    const TrialPoint& t = guarded.trial;
    if (guarded.cap_exceeded) {
      out.reason = StopReason::inner_loop_cap;
      out.diagnostic = "model guard exceeded " +
                       std::to_string(cfg.inner_loop_cap) +
                       " radius reductions at iteration " + std::to_string(s.k);
      break;
    }
    if (t.degenerate()) {
      out.reason = StopReason::zero_gradient;
      break;
    }

    const double theta_next = penalty_update(s, t, h, cfg.eta);
    rec.trial_size = t.trial_size;
    rec.grad_size = t.grad_size;
    rec.radius = s.radius;
    rec.theta_next = theta_next;
    rec.grad_norm = t.grad_norm;
    rec.step_norm = t.step.norm();
    rec.pred = pred(theta_next, s, t, h);
    rec.ared = ared(theta_next, s, t, h);
    rec.f_trial_at_x = t.f_trial_at_x;
    rec.f_trial_at_step = t.f_trial_at_step;
    rec.inner_repeats = guarded.repeats;

    const double f_previous = s.f_current;
    rec.success = acceptance_and_update(s, t, theta_next, cfg, h);
    final_pass_cost += static_cast<double>(t.trial_size + t.grad_size) /
                  static_cast<double>(total);
    rec.cost = s.cost;
    rec.final_pass_cost = final_pass_cost;
    out.trace.push_back(rec);
    if (opt.curve) opt.curve->observe(s.cost, s.x);

    if (rec.success && std::abs(s.f_current - f_previous) <=
                           cfg.tolerance * std::abs(f_previous) + cfg.tolerance) {
      out.reason = StopReason::function_change;
      break;
    }
    if (t.grad_norm <= cfg.tolerance) {
      out.reason = StopReason::gradient_tolerance;
      break;
    }
  }

  if (opt.curve) {
    opt.curve->finish(s.x);
    out.curve = opt.curve->points();
  }
  out.x = s.x;
  out.iterations = s.k;
  out.final_sample_size = s.sample_size;
  out.final_value = s.f_current;
  out.reached_full_accuracy = s.sample_size == total;
  out.cost = s.cost;
  out.final_pass_cost = final_pass_cost;
  return out;
}

/// Phi_k = v (Psi(x_k, N_k, theta_k) + theta_k Sigma) + (1 - v) radius_k^2
/// along a trace, with theta_min and Sigma taken from the trace itself and
/// v = (gamma^2 - 1 + alpha eta eta2 theta_min) / (gamma^2 - 1 + eta eta2 theta_min).
struct LyapunovReport {
  double v = 0.0;
  double sigma = 0.0;
  double theta_min = 0.0;
  std::vector<double> phi;
  std::size_t increases = 0;
  double max_increase = 0.0;
};

inline LyapunovReport lyapunov_profile(const std::vector<TraceRecord>& trace,
                                       const SirtrConfig& cfg,
                                       std::size_t total, double alpha = 0.5) {
  LyapunovReport r;
  if (trace.empty()) return r;
  const InfeasibilityFn h(total);
  r.theta_min = trace.front().theta;
  for (const auto& rec : trace) {
    r.theta_min = std::min({r.theta_min, rec.theta, rec.theta_next});
    r.sigma = std::max(r.sigma, h(rec.sample_size) - rec.f_current);
  }
  const double g2 = cfg.radius_factor * cfg.radius_factor - 1.0;
  const double scale = cfg.eta * cfg.eta2 * r.theta_min;
  r.v = (g2 + alpha * scale) / (g2 + scale);
  for (const auto& rec : trace) {
    const double merit =
        rec.theta * rec.f_current + (1.0 - rec.theta) * h(rec.sample_size);
    r.phi.push_back(r.v * (merit + rec.theta * r.sigma) +
                    (1.0 - r.v) * rec.radius * rec.radius);
  }
  for (std::size_t k = 1; k < r.phi.size(); ++k) {
    const double inc = r.phi[k] - r.phi[k - 1];
    if (inc > 0.0) {
      ++r.increases;
      r.max_increase = std::max(r.max_increase, inc);
    }
  }
  return r;
}

}  // namespace sirtr
