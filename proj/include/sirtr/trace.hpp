#pragma once

// Per-iteration records and run outcomes shared by every solver.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "sirtr/objective.hpp"

namespace sirtr {

enum class StopReason {
  iteration_budget,
  cost_budget,
  gradient_tolerance,
  function_change,
  zero_gradient,
  inner_loop_cap,
  epoch_budget,
};

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::iteration_budget: return "iteration_budget";
    case StopReason::cost_budget: return "cost_budget";
    case StopReason::gradient_tolerance: return "gradient_tolerance";
    case StopReason::function_change: return "function_change";
    case StopReason::zero_gradient: return "zero_gradient";
    case StopReason::inner_loop_cap: return "inner_loop_cap";
    case StopReason::epoch_budget: return "epoch_budget";
  }
  return "unknown";
}

inline constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();

/// One outer iteration. Baselines leave the trust-region fields as NaN / 0.
struct TraceRecord {
  std::size_t k = 0;
  std::size_t sample_size = 0;   // N_k
  std::size_t tilde_size = 0;    // N~_{k+1}
  std::size_t trial_size = 0;    // N^t_{k+1}
  std::size_t grad_size = 0;     // N_{k+1,g} (or S for the baselines)
  double radius_start = kNotApplicable;  // radius entering Step 2
  double radius = kNotApplicable;        // radius that scaled p_k
  double theta = kNotApplicable;         // theta_k
  double theta_next = kNotApplicable;    // theta_{k+1}
  double grad_norm = 0.0;
  double step_norm = 0.0;
  double pred = kNotApplicable;  // Pred_k(theta_{k+1})
  double ared = kNotApplicable;  // Ared_k(x_k + p_k, theta_{k+1})
  double hdiff = kNotApplicable; // h(N_k) - h(N~_{k+1})
  double f_current = kNotApplicable;   // f_{N_k}(x_k)
  double f_trial_at_x = kNotApplicable;
  double f_trial_at_step = kNotApplicable;
  bool full_flag = false;
  bool success = true;
  std::size_t inner_repeats = 0;
  double cost = 0.0;        // cumulative, inner repeats included
  double final_pass_cost = 0.0;  // cumulative, accepted pass of each iteration only
};

/// Loss/error snapshot at a point on the cost axis.
struct CurvePoint {
  double cost = 0.0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double error = 0.0;
};

/// Samples metrics on a uniform cost grid as a solver advances.
class CurveRecorder {
 public:
  using Evaluator = std::function<CurvePoint(const Vector&)>;

  CurveRecorder(Evaluator evaluate, double points_per_unit, double horizon)
      : evaluate_(std::move(evaluate)),
        spacing_(1.0 / points_per_unit),
        horizon_(horizon) {}

  /// Records every grid point in (last, cost] using the metrics at x.
  void observe(double cost, const Vector& x) {
    if (next_index_ * spacing_ > cost + 1e-12 || done()) return;
    const CurvePoint at = evaluate_(x);
    while (!done() && next_index_ * spacing_ <= cost + 1e-12) {
      CurvePoint p = at;
      p.cost = next_index_ * spacing_;
      points_.push_back(p);
      ++next_index_;
    }
  }

  /// Carries the final iterate forward to the horizon.
  void finish(const Vector& x) {
    if (done()) return;
    observe(horizon_, x);
  }

  const std::vector<CurvePoint>& points() const { return points_; }

 private:
  bool done() const { return next_index_ * spacing_ > horizon_ + 1e-12; }

  Evaluator evaluate_;
  double spacing_;
  double horizon_;
  std::size_t next_index_ = 0;
  std::vector<CurvePoint> points_;
};

struct RunOptions {
  CurveRecorder* curve = nullptr;
  Vector initial_point;  // empty means the origin
};

struct RunResult {
  Vector x;
  StopReason reason = StopReason::iteration_budget;
  std::vector<TraceRecord> trace;
  std::vector<CurvePoint> curve;
  bool reached_full_accuracy = false;
  std::size_t iterations = 0;
  std::size_t final_sample_size = 0;
  double final_value = kNotApplicable;  // f_{N_k}(x_k) at termination
  double cost = 0.0;
  double final_pass_cost = 0.0;
  std::string diagnostic;
};

}  // namespace sirtr
