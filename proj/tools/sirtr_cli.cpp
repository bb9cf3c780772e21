// Command-line driver: run / compare / tune-trish / gen-synthetic.
//
// Exit codes: 0 success, 1 usage, 2 invalid configuration, 3 data error,
// 4 tuning failure, 5 internal error. Failures print one JSON object
// {"error": <category>, "message": <text>} on stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "sirtr/harness.hpp"

namespace {

using namespace sirtr;

struct DataFlags {
  std::size_t synthetic_count = 0;  // 0: use files
  SyntheticSpec synthetic;
};

void add_data_options(CLI::App* app, DataSource& src, DataFlags& flags) {
  app->add_option("--train", src.train_path, "LIBSVM training file");
  app->add_option("--test", src.test_path, "LIBSVM test file (omit to split --train)");
  app->add_option("--test-fraction", src.test_fraction, "held-out fraction when splitting")
      ->capture_default_str();
  app->add_option("--split-seed", src.split_seed, "seed of the train/test split")
      ->capture_default_str();
  app->add_option("--synthetic-count", flags.synthetic_count,
                  "generate this many synthetic examples instead of reading files");
  app->add_option("--synthetic-dimension", flags.synthetic.dimension)->capture_default_str();
  app->add_option("--synthetic-separation", flags.synthetic.separation)
      ->capture_default_str();
  app->add_option("--synthetic-seed", flags.synthetic.seed)->capture_default_str();
}

void resolve_data(DataSource& src, const DataFlags& flags) {
  if (flags.synthetic_count > 0) {
    src.synthetic = flags.synthetic;
    src.synthetic->count = flags.synthetic_count;
  }
}

void add_sirtr_options(CLI::App* app, ExperimentSpec& spec) {
  SirtrConfig& c = spec.sirtr;
  ScheduleSpec& s = spec.schedule;
  app->add_option("--delta0", c.initial_radius, "initial radius")->capture_default_str();
  app->add_option("--delta-max", c.max_radius, "radius cap")->capture_default_str();
  app->add_option("--gamma", c.radius_factor, "radius factor")->capture_default_str();
  app->add_option("--eta", c.eta, "acceptance fraction")->capture_default_str();
  app->add_option("--eta2", c.eta2, "gradient-radius coupling")->capture_default_str();
  app->add_option("--theta0", c.theta0, "initial penalty")->capture_default_str();
  app->add_option("--c-tilde", s.growth, "sample growth factor")->capture_default_str();
  app->add_option("--c", s.grad_fraction, "gradient sample fraction")->capture_default_str();
  app->add_option("--mu-times-n", s.mu_times_n, "mu expressed as mu * N")
      ->capture_default_str();
  app->add_option_function<double>("--mu", [&s](double v) { s.mu = v; }, "absolute mu");
  app->add_option("--n0-fraction", s.initial_fraction, "N0 = ceil(fraction * N)")
      ->capture_default_str();
  app->add_option_function<std::size_t>(
      "--n0", [&s](std::size_t v) { s.initial_size = v; }, "absolute N0");
  app->add_option("--epsilon", c.tolerance, "stopping tolerance")->capture_default_str();
  app->add_option("--max-iter", c.max_iter, "iteration budget")->capture_default_str();
  app->add_option("--max-full-evals", c.max_full_evals, "cost budget in full evaluations")
      ->capture_default_str();
  app->add_option("--inner-cap", c.inner_loop_cap, "cap on radius-shrink repeats")
      ->capture_default_str();
}

void add_baseline_options(CLI::App* app, ExperimentSpec& spec) {
  app->add_option("--alpha", spec.trish.alpha, "TRish step size")->capture_default_str();
  app->add_option("--gamma1", spec.trish.gamma1, "TRish gamma1 (<= 0 tunes both)")
      ->capture_default_str();
  app->add_option("--gamma2", spec.trish.gamma2, "TRish gamma2")->capture_default_str();
  app->add_option("--sgd-alpha", spec.sgd_alpha, "SGD step size")->capture_default_str();
  app->add_option("--sample-fraction", spec.sample_fraction, "batch S = ceil(fraction * N)")
      ->capture_default_str();
  app->add_option("--epochs", spec.epochs, "epoch budget of the baselines")
      ->capture_default_str();
}

void add_run_options(CLI::App* app, ExperimentSpec& spec) {
  app->add_option("--runs", spec.runs, "number of seeded repetitions")->capture_default_str();
  app->add_option("--seed", spec.base_seed, "seed of run 0; run i uses seed + i")
      ->capture_default_str();
  app->add_option("--workers", spec.workers, "concurrent runs")->capture_default_str();
  app->add_option("--label", spec.label, "label stored in outputs");
}

int fail(std::string_view category, const std::string& message, int code) {
  nlohmann::ordered_json j;
  j["error"] = category;
  j["message"] = message;
  std::cerr << j.dump() << '\n';
  return code;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_text_file(path, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sample-size-adaptive trust-region solver and baselines"};
  app.set_config("--config", "", "INI/TOML file with option values; CLI flags override");
  app.require_subcommand(1);

  ExperimentSpec run_spec;
  DataFlags run_data;
  std::string solver_name = "sirtr";
  auto* run_cmd = app.add_subcommand("run", "run a multi-seed experiment");
  run_cmd->add_option("--solver", solver_name, "sirtr, trish or sgd")->capture_default_str();
  add_data_options(run_cmd, run_spec.data, run_data);
  add_sirtr_options(run_cmd, run_spec);
  add_baseline_options(run_cmd, run_spec);
  add_run_options(run_cmd, run_spec);
  run_cmd->add_option("--out", run_spec.output_dir, "directory for traces and summary.json");
  run_cmd->add_option("--curve-ppu", run_spec.curve_points_per_unit,
                      "curve points per cost unit (0: off)");
  run_cmd->add_option("--curve-horizon", run_spec.curve_horizon)->capture_default_str();
  run_cmd->add_flag("--sample-size-traces", run_spec.sample_size_traces,
                    "also write run_XXX_sample_sizes.csv");

  ExperimentSpec cmp_spec;
  DataFlags cmp_data;
  std::vector<double> alphas{1e-3, 1e-1, std::sqrt(0.1), 1.0, std::sqrt(10.0)};
  double ppu = 10.0;
  std::string cmp_out;
  cmp_spec.runs = 10;
  cmp_spec.trish.gamma1 = 0.0;
  auto* cmp_cmd = app.add_subcommand("compare", "epoch curves of SIRTR and TRish");
  add_data_options(cmp_cmd, cmp_spec.data, cmp_data);
  add_sirtr_options(cmp_cmd, cmp_spec);
  add_baseline_options(cmp_cmd, cmp_spec);
  add_run_options(cmp_cmd, cmp_spec);
  cmp_cmd->add_option("--alphas", alphas, "TRish step sizes")->capture_default_str();
  cmp_cmd->add_option("--ppu", ppu, "curve points per cost unit")->capture_default_str();
  cmp_cmd->add_option("--out", cmp_out, "directory for compare.csv and compare.json");

  ExperimentSpec tune_spec;
  DataFlags tune_data;
  auto* tune_cmd = app.add_subcommand("tune-trish", "choose TRish gammas from an SGD run");
  add_data_options(tune_cmd, tune_spec.data, tune_data);
  tune_cmd->add_option("--sample-fraction", tune_spec.sample_fraction)->capture_default_str();
  tune_cmd->add_option("--epochs", tune_spec.epochs)->capture_default_str();
  tune_cmd->add_option("--seed", tune_spec.base_seed)->capture_default_str();

  SyntheticSpec gen;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "write a synthetic LIBSVM train/test pair");
  gen_cmd->add_option("--count", gen.count, "total examples (80% train)")->capture_default_str();
  gen_cmd->add_option("--dimension", gen.dimension)->capture_default_str();
  gen_cmd->add_option("--separation", gen.separation, "inverse label-noise level")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "output prefix; writes PREFIX.train and PREFIX.test")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 1);
  }

  try {
    if (*run_cmd) {
      run_spec.solver = parse_solver(solver_name);
      resolve_data(run_spec.data, run_data);
      const AggregateResult agg = run_experiment(run_spec);
      std::cout << summary_json(run_spec, agg).dump(2) << '\n';
    } else if (*cmp_cmd) {
      resolve_data(cmp_spec.data, cmp_data);
      std::vector<ExperimentSpec> specs;
      ExperimentSpec s = cmp_spec;
      s.solver = Solver::sirtr;
      s.label = "sirtr";
      specs.push_back(s);
      for (double a : alphas) {
        ExperimentSpec t = cmp_spec;
        t.solver = Solver::trish;
        t.trish.alpha = a;
        t.label = "trish_alpha=" + detail::fmt_double(a);
        specs.push_back(t);
      }
      const CompareResult r = compare_epochwise(specs, ppu);
      if (!cmp_out.empty()) {
        std::ostringstream csv;
        write_compare_csv(r, csv);
        write_file(std::filesystem::path(cmp_out) / "compare.csv", csv.str());
        write_file(std::filesystem::path(cmp_out) / "compare.json",
                   compare_json(r).dump(2) + "\n");
      }
      nlohmann::ordered_json brief = nlohmann::ordered_json::array();
      for (std::size_t f = 0; f < r.families.size(); ++f) {
        brief.push_back({{"label", r.families[f].label},
                         {"final_err", r.aggregates[f].err},
                         {"final_train_loss", r.families[f].mean.back().train_loss}});
      }
      std::cout << brief.dump(2) << '\n';
    } else if (*tune_cmd) {
      resolve_data(tune_spec.data, tune_data);
      tune_spec.validate();
      const LoadedData data = load_data(tune_spec.data);
      const std::size_t sample = fraction_of(tune_spec.sample_fraction, data.train.size());
      const GammaChoice g = tune_gammas(SigmoidLeastSquares(data.train), sample,
                                        tune_spec.epochs, tune_spec.base_seed);
      nlohmann::ordered_json j;
      j["S"] = sample;
      j["epochs"] = tune_spec.epochs;
      j["seed"] = tune_spec.base_seed;
      j["mean_grad_norm"] = g.mean_grad_norm;
      j["gamma1"] = g.gamma1;
      j["gamma2"] = g.gamma2;
      std::cout << j.dump(2) << '\n';
    } else if (*gen_cmd) {
      const auto [train, test] = synthetic_dataset(gen.count, gen.dimension, gen.separation,
                                                   gen.seed);
      std::ostringstream a, b;
      write_libsvm(train, a);
      write_libsvm(test, b);
      write_file(gen_out + ".train", a.str());
      write_file(gen_out + ".test", b.str());
    }
  } catch (const InputError& e) {
    return fail("invalid_config", e.what(), 2);
  } catch (const DataError& e) {
    return fail("data", e.what(), 3);
  } catch (const TuningError& e) {
    return fail("tuning", e.what(), 4);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 5);
  }
  return 0;
}
