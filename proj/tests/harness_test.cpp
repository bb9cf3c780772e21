#include "sirtr/harness.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sirtr {
namespace {

namespace fs = std::filesystem;

ExperimentSpec tiny_spec(Solver solver = Solver::sirtr) {
  ExperimentSpec spec;
  spec.solver = solver;
  spec.data.synthetic = SyntheticSpec{120, 4, 3.0, 5};
  spec.sirtr.max_iter = 200;
  spec.runs = 3;
  spec.base_seed = 11;
  spec.epochs = 2;
  spec.sample_fraction = 0.05;
  return spec;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sirtr_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(RunExperiment, SingleRunAggregate) {
  ExperimentSpec spec = tiny_spec();
  spec.runs = 1;
  const AggregateResult agg = run_experiment(spec);
  ASSERT_EQ(agg.runs.size(), 1u);
  ASSERT_EQ(agg.results.size(), 1u);
  EXPECT_EQ(agg.runs[0].seed, 11u);
  EXPECT_DOUBLE_EQ(agg.err, agg.runs[0].err);
  EXPECT_DOUBLE_EQ(agg.cost, agg.results[0].cost);
  EXPECT_EQ(agg.train_size, 96u);
}

TEST(RunExperiment, AggregationIdentities) {
  for (Solver solver : {Solver::sirtr, Solver::trish, Solver::sgd}) {
    const AggregateResult agg = run_experiment(tiny_spec(solver));
    double err = 0.0;
    std::size_t flags = 0;
    for (const auto& r : agg.runs) {
      err += r.err;
      flags += r.reached_full_accuracy ? 1 : 0;
      EXPECT_GE(r.err, 0.0);
      EXPECT_LE(r.err, 1.0);
    }
    EXPECT_NEAR(agg.err, err / 3.0, 1e-12);
    EXPECT_EQ(agg.sub, 3u - flags);
  }
}

TEST(RunExperiment, WorkerCountDoesNotChangeResults) {
  ExperimentSpec a = tiny_spec();
  ExperimentSpec b = tiny_spec();
  b.workers = 3;
  EXPECT_EQ(summary_json(a, run_experiment(a)).dump(),
            summary_json(b, run_experiment(b)).dump());
}

TEST(RunExperiment, InvalidConfigFailsBeforeRuns) {
  ExperimentSpec spec = tiny_spec();
  spec.output_dir = fresh_dir("invalid").string();
  spec.sirtr.eta = 1.5;
  EXPECT_THROW(run_experiment(spec), InputError);
  EXPECT_FALSE(fs::exists(spec.output_dir));
  spec.sirtr.eta = 0.1;
  spec.runs = 0;
  EXPECT_THROW(run_experiment(spec), InputError);
  ExperimentSpec missing;
  missing.data.train_path = "/nonexistent/file.txt";
  EXPECT_THROW(run_experiment(missing), DataError);
}

TEST(RunExperiment, WritesDeterministicFiles) {
  ExperimentSpec spec = tiny_spec();
  spec.sample_size_traces = true;
  spec.output_dir = fresh_dir("det_a").string();
  run_experiment(spec);
  const std::string first = slurp(fs::path(spec.output_dir) / "summary.json");
  spec.output_dir = fresh_dir("det_b").string();
  run_experiment(spec);
  const std::string second = slurp(fs::path(spec.output_dir) / "summary.json");
  EXPECT_EQ(first, second);
  const auto j = nlohmann::json::parse(first);
  EXPECT_EQ(j["schema"], "sirtr-summary/1");
  EXPECT_EQ(j["per_run"].size(), 3u);

  const std::string trace = slurp(fs::path(spec.output_dir) / "run_000_trace.csv");
  EXPECT_EQ(trace.substr(0, trace.find('\n')), kTraceHeader);
  const std::string sizes = slurp(fs::path(spec.output_dir) / "run_002_sample_sizes.csv");
  EXPECT_EQ(sizes.substr(0, sizes.find('\n')), "k,N_trial,N_tilde,radius");
}

TEST(SampleSizeTrace, EmptyRunIsHeaderOnly) {
  std::ostringstream out;
  emit_sample_size_trace(RunResult{}, out);
  EXPECT_EQ(out.str(), "k,N_trial,N_tilde,radius\n");
}

TEST(SampleSizeTrace, TinyMuKeepsTrialEqualToTilde) {
  ExperimentSpec spec = tiny_spec();
  spec.runs = 1;
  spec.schedule.mu = 1e-12;
  const auto agg = run_experiment(spec);
  for (const auto& t : agg.results[0].trace) {
    if (t.trial_size != agg.train_size) {
      EXPECT_EQ(t.trial_size, t.tilde_size);
    }
  }
}

TEST(CompareEpochwise, Structure) {
  ExperimentSpec s = tiny_spec();
  ExperimentSpec t = tiny_spec(Solver::trish);
  t.label = "trish";
  const CompareResult r = compare_epochwise({s, t}, 4.0);
  ASSERT_EQ(r.families.size(), 2u);
  EXPECT_EQ(r.families[0].label, "sirtr");
  for (const auto& fam : r.families) {
    ASSERT_EQ(fam.mean.size(), 9u);  // costs 0, 0.25, ..., 2
    EXPECT_DOUBLE_EQ(fam.mean.back().cost, 2.0);
    for (std::size_t p = 1; p < fam.mean.size(); ++p) {
      EXPECT_GT(fam.mean[p].cost, fam.mean[p - 1].cost);
    }
  }
  std::ostringstream a, b;
  write_compare_csv(r, a);
  write_compare_csv(compare_epochwise({s, t}, 4.0), b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(compare_json(r)["schema"], "sirtr-compare/1");

  EXPECT_EQ(compare_epochwise({s}, 4.0).families.size(), 1u);
  ExperimentSpec other = tiny_spec();
  other.data.synthetic->seed = 6;
  EXPECT_THROW(compare_epochwise({s, other}), InputError);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SIRTR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

TEST(Cli, ExitCodesAndOutputs) {
  const fs::path dir = fresh_dir("cli");
  fs::create_directories(dir);
  const fs::path data = dir / "syn";
  EXPECT_EQ(run_cli("gen-synthetic --count 150 --dimension 3 --out " + data.string()), 0);
  ASSERT_TRUE(fs::exists(data.string() + ".train"));
  ASSERT_TRUE(fs::exists(data.string() + ".test"));

  const std::string files = " --train " + data.string() + ".train --test " + data.string() + ".test";
  EXPECT_EQ(run_cli("run" + files + " --runs 2 --max-iter 50 --out " + (dir / "run").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "run" / "summary.json"));
  EXPECT_EQ(run_cli("tune-trish" + files + " --epochs 1"), 0);
  EXPECT_EQ(run_cli("compare" + files + " --epochs 1 --runs 1 --alphas 0.1"
                    " --out " + (dir / "cmp").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "cmp" / "compare.csv"));

  EXPECT_EQ(run_cli("run --train /nonexistent"), 3);
  EXPECT_EQ(run_cli("run" + files + " --eta 2"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 1);
}

}  // namespace
}  // namespace sirtr
