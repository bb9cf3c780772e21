#pragma once

// Multi-run experiment driver: loads data, runs seeded repetitions of a
// solver (optionally in parallel), aggregates cost / err / sub, and writes
// CSV traces and a JSON summary.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sirtr/baselines.hpp"
#include "sirtr/core.hpp"
#include "sirtr/data_io.hpp"
#include "sirtr/objective.hpp"
#include "sirtr/trace.hpp"

namespace sirtr {

inline constexpr std::string_view kSummarySchema = "sirtr-summary/1";
inline constexpr std::string_view kCompareSchema = "sirtr-compare/1";

enum class Solver { sirtr, trish, sgd };

inline std::string_view to_string(Solver s) {
  switch (s) {
    case Solver::sirtr: return "sirtr";
    case Solver::trish: return "trish";
    case Solver::sgd: return "sgd";
  }
  return "unknown";
}

inline Solver parse_solver(std::string_view name) {
  if (name == "sirtr") return Solver::sirtr;
  if (name == "trish") return Solver::trish;
  if (name == "sgd") return Solver::sgd;
  throw InputError("unknown solver '" + std::string(name) + "'");
}

struct SyntheticSpec {
  std::size_t count = 500;
  std::size_t dimension = 10;
  double separation = 4.0;
  std::uint64_t seed = 1;
  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

/// Either a train/test file pair, a single file split by seed, or synthetic data.
struct DataSource {
  std::string train_path;
  std::string test_path;
  double test_fraction = 0.2;   // used only without test_path
  std::uint64_t split_seed = 0;
  std::optional<SyntheticSpec> synthetic;
  friend bool operator==(const DataSource&, const DataSource&) = default;
};

struct LoadedData {
  Dataset train;
  Dataset test;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline LoadedData load_data(const DataSource& src) {
  try {
    if (src.synthetic) {
      auto [train, test] = synthetic_dataset(src.synthetic->count, src.synthetic->dimension,
                                             src.synthetic->separation, src.synthetic->seed);
      return {std::move(train), std::move(test)};
    }
    if (src.train_path.empty()) throw InputError("no dataset given");
    if (!src.test_path.empty()) {
      auto [train, test] = load_libsvm_pair(src.train_path, src.test_path);
      return {std::move(train), std::move(test)};
    }
    auto [train, test] =
        split_dataset(load_libsvm(src.train_path), src.test_fraction, src.split_seed);
    return {std::move(train), std::move(test)};
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
}

/// Schedule values that depend on N are stored relative to N and resolved
/// once the dataset is known; absolute overrides win when set.
struct ScheduleSpec {
  double growth = 1.05;
  double grad_fraction = 0.1;
  double mu_times_n = 100.0;
  double initial_fraction = 0.1;
  std::optional<double> mu;
  std::optional<std::size_t> initial_size;

  ScheduleParams resolve(std::size_t total) const {
    ScheduleParams p;
    p.growth = growth;
    p.grad_fraction = grad_fraction;
    p.mu = mu ? *mu : mu_times_n / static_cast<double>(total);
    p.initial_size = initial_size ? *initial_size : fraction_of(initial_fraction, total);
    return p;
  }
};

struct ExperimentSpec {
  Solver solver = Solver::sirtr;
  DataSource data;
  SirtrConfig sirtr;  // schedule and seed are filled per run
  ScheduleSpec schedule;
  TrishConfig trish;  // gamma1 <= 0 requests tuning; sample_size/seed per run
  double sgd_alpha = 1.0;
  double sample_fraction = 1e-3;  // baseline batch S = ceil(fraction * N)
  std::size_t epochs = 10;        // baseline pass budget
  std::size_t runs = 1;
  std::uint64_t base_seed = 1;
  std::size_t workers = 1;
  std::string output_dir;         // empty: nothing written
  double curve_points_per_unit = 0.0;  // > 0 records loss/err curves
  double curve_horizon = 10.0;
  bool sample_size_traces = false;
  std::string label;

  void validate() const {
    if (runs < 1) throw InputError("runs must be >= 1");
    if (workers < 1) throw InputError("workers must be >= 1");
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) {
      throw InputError("sample fraction must lie in (0, 1]");
    }
  }
};

struct RunSummary {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double err = 0.0;
  double cost = 0.0;
  double final_pass_cost = 0.0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  std::size_t iterations = 0;
  std::size_t final_sample_size = 0;
  bool reached_full_accuracy = false;
  StopReason reason = StopReason::iteration_budget;
};

struct AggregateResult {
  double cost = 0.0;
  double final_pass_cost = 0.0;
  double err = 0.0;
  std::size_t sub = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t dimension = 0;
  std::optional<GammaChoice> gammas;
  std::vector<RunSummary> runs;
  std::vector<RunResult> results;  // keyed by run index
};

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline CurveRecorder::Evaluator curve_evaluator(const LoadedData& data) {
  return [&data](const Vector& x) {
    CurvePoint p;
    SigmoidLeastSquares train(data.train), test(data.test);
    p.train_loss = full_value(train, x);
    p.test_loss = full_value(test, x);
    p.error = classification_error(data.test, x);
    return p;
  };
}

}  // namespace detail

inline constexpr std::string_view kTraceHeader =
    "k,N_k,N_tilde,N_trial,N_grad,radius_start,radius,theta,theta_next,"
    "grad_norm,step_norm,pred,ared,hdiff,f_current,f_trial_x,f_trial_step,"
    "full_flag,success,inner_repeats,cost,final_pass_cost";

inline void write_trace_csv(const RunResult& r, std::ostream& out) {
  using detail::fmt_double;
  out << kTraceHeader << '\n';
  for (const auto& t : r.trace) {
    out << t.k << ',' << t.sample_size << ',' << t.tilde_size << ',' << t.trial_size << ','
        << t.grad_size << ',' << fmt_double(t.radius_start) << ',' << fmt_double(t.radius)
        << ',' << fmt_double(t.theta) << ',' << fmt_double(t.theta_next) << ','
        << fmt_double(t.grad_norm) << ',' << fmt_double(t.step_norm) << ','
        << fmt_double(t.pred) << ',' << fmt_double(t.ared) << ',' << fmt_double(t.hdiff)
        << ',' << fmt_double(t.f_current) << ',' << fmt_double(t.f_trial_at_x) << ','
        << fmt_double(t.f_trial_at_step) << ',' << (t.full_flag ? 1 : 0) << ','
        << (t.success ? 1 : 0) << ',' << t.inner_repeats << ',' << fmt_double(t.cost)
        << ',' << fmt_double(t.final_pass_cost) << '\n';
  }
}

/// Rows (k, N^t, N~, radius) for sample-size plots.
inline void emit_sample_size_trace(const RunResult& r, std::ostream& out) {
  out << "k,N_trial,N_tilde,radius\n";
  for (const auto& t : r.trace) {
    out << t.k << ',' << t.trial_size << ',' << t.tilde_size << ','
        << detail::fmt_double(t.radius) << '\n';
  }
}

/// Runs one seeded repetition of the configured solver.
inline RunResult run_single(const ExperimentSpec& spec, const LoadedData& data,
                            std::uint64_t seed, const std::optional<GammaChoice>& gammas) {
  const SigmoidLeastSquares f(data.train);
  const std::size_t total = data.train.size();
  std::optional<CurveRecorder> curve;
  RunOptions opt;
  if (spec.curve_points_per_unit > 0.0) {
    curve.emplace(detail::curve_evaluator(data), spec.curve_points_per_unit,
                  spec.curve_horizon);
    opt.curve = &*curve;
  }
  const std::size_t sample = fraction_of(spec.sample_fraction, total);
  switch (spec.solver) {
    case Solver::sirtr: {
      SirtrConfig cfg = spec.sirtr;
      cfg.schedule = spec.schedule.resolve(total);
      cfg.seed = seed;
      return run(f, cfg, opt);
    }
    case Solver::trish: {
      TrishConfig cfg = spec.trish;
      if (gammas) {
        cfg.gamma1 = gammas->gamma1;
        cfg.gamma2 = gammas->gamma2;
      }
      cfg.sample_size = sample;
      cfg.epochs = spec.epochs;
      cfg.seed = seed;
      return trish_run(f, cfg, opt);
    }
    case Solver::sgd:
      return sgd_run(f, spec.sgd_alpha, sample, spec.epochs, seed, opt);
  }
  throw InputError("unknown solver");
}

inline nlohmann::ordered_json summary_json(const ExperimentSpec& spec,
                                           const AggregateResult& agg) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema"] = kSummarySchema;
  j["solver"] = to_string(spec.solver);
  if (!spec.label.empty()) j["label"] = spec.label;
  ordered_json data;
  if (spec.data.synthetic) {
    data["synthetic"] = {{"count", spec.data.synthetic->count},
                         {"dimension", spec.data.synthetic->dimension},
                         {"separation", spec.data.synthetic->separation},
                         {"seed", spec.data.synthetic->seed}};
  } else {
    data["train"] = std::filesystem::path(spec.data.train_path).filename().string();
    if (!spec.data.test_path.empty()) {
      data["test"] = std::filesystem::path(spec.data.test_path).filename().string();
    } else {
      data["test_fraction"] = spec.data.test_fraction;
      data["split_seed"] = spec.data.split_seed;
    }
  }
  data["N"] = agg.train_size;
  data["N_test"] = agg.test_size;
  data["n"] = agg.dimension;
  j["data"] = data;

  ordered_json cfg;
  if (spec.solver == Solver::sirtr) {
    const ScheduleParams p = spec.schedule.resolve(agg.train_size);
    const SirtrConfig& c = spec.sirtr;
    cfg = {{"initial_radius", c.initial_radius}, {"max_radius", c.max_radius},
           {"gamma", c.radius_factor},           {"eta", c.eta},
           {"eta2", c.eta2},                     {"theta0", c.theta0},
           {"c_tilde", p.growth},                {"c", p.grad_fraction},
           {"mu", p.mu},                         {"N0", p.initial_size},
           {"epsilon", c.tolerance},             {"max_iter", c.max_iter},
           {"max_full_evals", c.max_full_evals}, {"inner_loop_cap", c.inner_loop_cap}};
  } else {
    cfg["S"] = fraction_of(spec.sample_fraction, agg.train_size);
    cfg["epochs"] = spec.epochs;
    if (spec.solver == Solver::trish) {
      cfg["alpha"] = spec.trish.alpha;
      cfg["gamma1"] = agg.gammas ? agg.gammas->gamma1 : spec.trish.gamma1;
      cfg["gamma2"] = agg.gammas ? agg.gammas->gamma2 : spec.trish.gamma2;
      cfg["gammas_tuned"] = agg.gammas.has_value();
    } else {
      cfg["alpha"] = spec.sgd_alpha;
    }
  }
  j["config"] = cfg;
  j["runs"] = spec.runs;
  j["base_seed"] = spec.base_seed;
  j["aggregate"] = {{"cost", agg.cost},
                    {"final_pass_cost", agg.final_pass_cost},
                    {"err", agg.err},
                    {"sub", agg.sub}};
  ordered_json per_run = ordered_json::array();
  for (const auto& r : agg.runs) {
    per_run.push_back({{"run", r.index},
                       {"seed", r.seed},
                       {"err", r.err},
                       {"cost", r.cost},
                       {"final_pass_cost", r.final_pass_cost},
                       {"train_loss", r.train_loss},
                       {"test_loss", r.test_loss},
                       {"iterations", r.iterations},
                       {"final_sample_size", r.final_sample_size},
                       {"reached_full_accuracy", r.reached_full_accuracy},
                       {"stop_reason", to_string(r.reason)}});
  }
  j["per_run"] = per_run;
  return j;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

/// Executes spec.runs repetitions with seeds base_seed + i and aggregates.
inline AggregateResult run_experiment(const ExperimentSpec& spec, const LoadedData& data) {
  spec.validate();
  AggregateResult agg;
  agg.train_size = data.train.size();
  agg.test_size = data.test.size();
  agg.dimension = data.train.dimension();
  if (data.test.dimension() != data.train.dimension()) {
    throw InputError("train and test dimensions differ");
  }

  // Validate configuration before any run starts.
  if (spec.solver == Solver::sirtr) {
    SirtrConfig probe = spec.sirtr;
    probe.schedule = spec.schedule.resolve(agg.train_size);
    probe.validate(agg.train_size);
  }
  const std::size_t sample = fraction_of(spec.sample_fraction, agg.train_size);
  if (spec.solver == Solver::trish) {
    if (!(spec.trish.gamma1 > 0.0)) {
      agg.gammas = tune_gammas(SigmoidLeastSquares(data.train), sample, spec.epochs,
                               spec.base_seed + spec.runs);
    }
    TrishConfig probe = spec.trish;
    if (agg.gammas) {
      probe.gamma1 = agg.gammas->gamma1;
      probe.gamma2 = agg.gammas->gamma2;
    }
    probe.sample_size = sample;
    probe.validate(agg.train_size);
  }

  agg.results.resize(spec.runs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < spec.runs; i = next++) {
      try {
        agg.results[i] = run_single(spec, data, spec.base_seed + i, agg.gammas);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min(spec.workers, spec.runs);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  const SigmoidLeastSquares train(data.train), test(data.test);
  for (std::size_t i = 0; i < spec.runs; ++i) {
    const RunResult& r = agg.results[i];
    RunSummary s;
    s.index = i;
    s.seed = spec.base_seed + i;
    s.err = classification_error(data.test, r.x);
    s.cost = r.cost;
    s.final_pass_cost = r.final_pass_cost;
    s.train_loss = full_value(train, r.x);
    s.test_loss = full_value(test, r.x);
    s.iterations = r.iterations;
    s.final_sample_size = r.final_sample_size;
    s.reached_full_accuracy = r.reached_full_accuracy;
    s.reason = r.reason;
    agg.cost += s.cost;
    agg.final_pass_cost += s.final_pass_cost;
    agg.err += s.err;
    if (!s.reached_full_accuracy) ++agg.sub;
    agg.runs.push_back(s);
  }
  const double n = static_cast<double>(spec.runs);
  agg.cost /= n;
  agg.final_pass_cost /= n;
  agg.err /= n;

  if (!spec.output_dir.empty()) {
    const std::filesystem::path dir(spec.output_dir);
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < spec.runs; ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "run_%03zu_trace.csv", i);
      std::ostringstream csv;
      write_trace_csv(agg.results[i], csv);
      write_text_file(dir / name, csv.str());
      if (spec.sample_size_traces) {
        std::snprintf(name, sizeof name, "run_%03zu_sample_sizes.csv", i);
        std::ostringstream ss;
        emit_sample_size_trace(agg.results[i], ss);
        write_text_file(dir / name, ss.str());
      }
    }
    write_text_file(dir / "summary.json", summary_json(spec, agg).dump(2) + "\n");
  }
  return agg;
}

inline AggregateResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const LoadedData data = load_data(spec.data);
  return run_experiment(spec, data);
}

struct CurveFamily {
  std::string label;
  std::vector<CurvePoint> mean;  // averaged over runs, one point per grid cost
};

struct CompareResult {
  std::vector<CurveFamily> families;
  std::vector<AggregateResult> aggregates;
};

/// Runs every spec on one shared dataset with curve recording switched on and
/// averages the per-run curves point by point.
inline CompareResult compare_epochwise(const std::vector<ExperimentSpec>& specs,
                                       double points_per_unit = 10.0) {
  if (specs.empty()) throw InputError("nothing to compare");
  for (const auto& s : specs) {
    if (!(s.data == specs.front().data)) {
      throw InputError("compared experiments must share one dataset");
    }
  }
  const LoadedData data = load_data(specs.front().data);
  CompareResult out;
  for (const auto& base : specs) {
    ExperimentSpec spec = base;
    spec.curve_points_per_unit = points_per_unit;
    spec.curve_horizon = static_cast<double>(spec.epochs);
    if (spec.solver == Solver::sirtr) {
      spec.sirtr.max_full_evals = static_cast<double>(spec.epochs);
    }
    AggregateResult agg = run_experiment(spec, data);
    CurveFamily fam;
    fam.label = spec.label.empty() ? std::string(to_string(spec.solver)) : spec.label;
    const std::size_t points = agg.results.front().curve.size();
    fam.mean.assign(points, CurvePoint{});
    for (const auto& r : agg.results) {
      if (r.curve.size() != points) throw std::logic_error("curve length mismatch");
      for (std::size_t p = 0; p < points; ++p) {
        fam.mean[p].cost = r.curve[p].cost;
        fam.mean[p].train_loss += r.curve[p].train_loss;
        fam.mean[p].test_loss += r.curve[p].test_loss;
        fam.mean[p].error += r.curve[p].error;
      }
    }
    const double n = static_cast<double>(agg.results.size());
    for (auto& p : fam.mean) {
      p.train_loss /= n;
      p.test_loss /= n;
      p.error /= n;
    }
    out.families.push_back(std::move(fam));
    out.aggregates.push_back(std::move(agg));
  }
  return out;
}

inline void write_compare_csv(const CompareResult& r, std::ostream& out) {
  using detail::fmt_double;
  out << "label,cost,train_loss,test_loss,error\n";
  for (const auto& fam : r.families) {
    for (const auto& p : fam.mean) {
      out << fam.label << ',' << fmt_double(p.cost) << ',' << fmt_double(p.train_loss)
          << ',' << fmt_double(p.test_loss) << ',' << fmt_double(p.error) << '\n';
    }
  }
}

inline nlohmann::ordered_json compare_json(const CompareResult& r) {
  nlohmann::ordered_json j;
  j["schema"] = kCompareSchema;
  j["families"] = nlohmann::ordered_json::array();
  for (std::size_t f = 0; f < r.families.size(); ++f) {
    const auto& fam = r.families[f];
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (const auto& p : fam.mean) {
      pts.push_back({{"cost", p.cost},
                     {"train_loss", p.train_loss},
                     {"test_loss", p.test_loss},
                     {"error", p.error}});
    }
    nlohmann::ordered_json fj;
    fj["label"] = fam.label;
    fj["final_err"] = r.aggregates[f].err;
    if (r.aggregates[f].gammas) {
      fj["gamma1"] = r.aggregates[f].gammas->gamma1;
      fj["gamma2"] = r.aggregates[f].gammas->gamma2;
    }
    fj["points"] = pts;
    j["families"].push_back(fj);
  }
  return j;
}

}  // namespace sirtr
