#include "robust_mdp/errors.hpp"
#include "robust_mdp/harness.hpp"
#include "robust_mdp/mdp_io.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace robust_mdp;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("robust_mdp_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    [[nodiscard]] std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

int cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + ROBUST_MDP_CLI + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

} // namespace

TEST(EvaluatePolicy, SingleStateExact) {
    const TabularMdp mdp = testing_support::single_state({0.5, 0.5}, 0.9, 0.3);
    const PolicyTable pi = DirectPolicy::uniform(1, 2).table();
    const EvaluationResult r = evaluate_policy(mdp, pi, Vector::Ones(1), ExactEvaluation{});
    EXPECT_NEAR(r.mean, 5.0, 1e-9);
    ASSERT_EQ(r.per_rep.size(), 1u);
    EXPECT_NEAR(cost_to_reward(r.mean, 0.9), 5.0, 1e-9);
}

TEST(EvaluatePolicy, TdMatchesExactAndIsReproducible) {
    const TabularMdp mdp = garnet_generate(4, 2, 4, 3, 0.9, 0.2);
    RngStream rng(1);
    const PolicyTable pi = DirectPolicy::random_interior(4, 2, rng).table();
    const Vector rho = Vector::Constant(4, 0.25);
    const double exact = evaluate_policy(mdp, pi, rho, ExactEvaluation{}).mean;
    const EvaluationResult td = evaluate_policy(mdp, pi, rho, TdEvaluation{200000, 3}, 5);
    EXPECT_NEAR(td.mean, exact, 0.05);
    ASSERT_EQ(td.per_rep.size(), 3u);
    EXPECT_NE(td.per_rep[0], td.per_rep[1]);
    const EvaluationResult again = evaluate_policy(mdp, pi, rho, TdEvaluation{200000, 3}, 5);
    EXPECT_EQ(td.per_rep, again.per_rep);
    const double nominal = evaluate_policy(mdp, pi, rho, ExactEvaluation{}, 0, false).mean;
    EXPECT_LT(nominal, exact);
    EXPECT_NEAR(nominal, objective(mdp, pi, rho, EvalMode::nominal()), 1e-9);
}

TEST(Percentile, LinearInterpolation) {
    EXPECT_DOUBLE_EQ(percentile({3.0}, 0.95), 3.0);
    EXPECT_DOUBLE_EQ(percentile({4.0, 1.0, 3.0, 2.0}, 0.5), 2.5);
    // numpy.percentile(range(1, 11), [5, 95]) = 1.45, 9.55
    std::vector<double> v;
    for (int i = 10; i >= 1; --i) v.push_back(i);
    EXPECT_NEAR(percentile(v, 0.05), 1.45, 1e-12);
    EXPECT_NEAR(percentile(v, 0.95), 9.55, 1e-12);
    EXPECT_THROW((void)percentile({}, 0.5), ParameterError);
}

TEST(Percentile, SummaryGroupsByIterationAndMetric) {
    std::vector<MetricRow> rows;
    for (std::size_t trial = 0; trial < 5; ++trial)
        for (std::size_t t = 0; t < 2; ++t) {
            rows.push_back({trial, t, "a", static_cast<double>(trial + 10 * t)});
            rows.push_back({trial, t, "b", -static_cast<double>(trial)});
        }
    const auto summary = percentile_summary(rows);
    ASSERT_EQ(summary.size(), 4u);
    EXPECT_EQ(summary[0].iteration, 0u);
    EXPECT_EQ(summary[0].metric, "a");
    EXPECT_DOUBLE_EQ(summary[0].p50, 2.0);
    EXPECT_NEAR(summary[0].p05, 0.2, 1e-12);
    EXPECT_NEAR(summary[2].p95, 13.8, 1e-12);
    EXPECT_EQ(summary[3].metric, "b");
    EXPECT_NEAR(summary[3].p95, -0.2, 1e-12);
}

TEST(Experiment, ValidationRejectsBadConfigs) {
    ExperimentConfig c;
    c.mode = Mode::srpg;
    EXPECT_THROW(c.validate(), ParameterError);
    c.sigma = 10.0;
    EXPECT_NO_THROW(c.validate());
    c.trials = 0;
    EXPECT_THROW(c.validate(), ParameterError);
    c.trials = 1;
    c.radius = 1.5;
    EXPECT_THROW(c.validate(), ParameterError);
    EXPECT_THROW((void)parse_mode("sarsa"), ParameterError);
    EXPECT_EQ(parse_mode("nominal_ac"), Mode::nominal_ac);
}

TEST(Experiment, TrialsDrawIndependentInstancesUnlessPinned) {
    ExperimentConfig c;
    c.environment = GarnetSource{5, 3, 0, std::nullopt};
    EXPECT_NE(trial_mdp(c, 0), trial_mdp(c, 1));
    c.environment = GarnetSource{5, 3, 2, 42};
    EXPECT_EQ(trial_mdp(c, 0), trial_mdp(c, 1));
    EXPECT_EQ(trial_mdp(c, 0), garnet_generate(5, 3, 2, 42, 0.9, 0.15));
}

TEST(Experiment, RowsAreOrderedAndThreadInvariant) {
    ExperimentConfig c;
    c.environment = GarnetSource{5, 3, 0, std::nullopt};
    c.trials = 4;
    c.train.iterations = 20;
    c.sigma = 5.0;
    setenv("ROBUSTMDP_THREADS", "4", 1);
    const RunRecord a = run_experiment(c);
    setenv("ROBUSTMDP_THREADS", "1", 1);
    const RunRecord b = run_experiment(c);
    unsetenv("ROBUSTMDP_THREADS");
    std::ostringstream sa, sb;
    write_rows_csv(sa, a.rows);
    write_rows_csv(sb, b.rows);
    EXPECT_EQ(sa.str(), sb.str());
    // 4 trials x 21 iterations x 8 metrics (j_sigma present).
    EXPECT_EQ(a.rows.size(), 4u * 21u * 8u);
    for (std::size_t i = 1; i < a.rows.size(); ++i) {
        const bool ordered = a.rows[i - 1].trial < a.rows[i].trial ||
                             (a.rows[i - 1].trial == a.rows[i].trial && a.rows[i - 1].iteration <= a.rows[i].iteration);
        EXPECT_TRUE(ordered);
    }
    for (const MetricRow& r : a.rows)
        if (r.metric == "reward_robust") EXPECT_GT(r.value, 0.0);
}

TEST(Experiment, TdEvaluationOfSnapshots) {
    ExperimentConfig c;
    c.environment = GarnetSource{4, 2, 0, std::nullopt};
    c.trials = 2;
    c.train.iterations = 10;
    c.train.snapshot_period = 5;
    c.eval = TdEvaluation{100000, 2};
    const RunRecord r = run_experiment(c);
    std::map<std::pair<std::size_t, std::size_t>, double> exact, td;
    for (const MetricRow& row : r.rows) {
        if (row.metric == "j_robust") exact[{row.trial, row.iteration}] = row.value;
        if (row.metric == "j_robust_td") td[{row.trial, row.iteration}] = row.value;
    }
    ASSERT_EQ(td.size(), 6u);
    for (const auto& [key, v] : td) EXPECT_NEAR(v, exact.at(key), 0.1);
}

TEST(Experiment, TdEvalModeCurve) {
    ExperimentConfig c;
    c.mode = Mode::td_eval;
    c.environment = GarnetSource{4, 2, 0, std::nullopt};
    c.train.iterations = 10;
    c.ac.critic_steps = 100000;
    const RunRecord r = run_experiment(c);
    double first = -1, last = -1;
    for (const MetricRow& row : r.rows)
        if (row.metric == "q_error") {
            if (row.iteration == 0) first = row.value;
            if (row.iteration == 10) last = row.value;
        }
    EXPECT_GT(first, 1.0);
    EXPECT_LT(last, 0.1);
}

TEST(Experiment, ActorCriticModesRun) {
    ExperimentConfig c;
    c.environment = GarnetSource{4, 2, 0, std::nullopt};
    c.ac.iterations = 5;
    c.ac.critic_steps = 2000;
    c.ac.rollouts = 8;
    c.ac.actor_schedule = StepSchedule::constant(0.1);
    c.sigma = 10.0;
    for (Mode m : {Mode::ac, Mode::smoothed_ac, Mode::nominal_ac}) {
        c.mode = m;
        const RunRecord r = run_experiment(c);
        std::set<std::size_t> iterations;
        for (const MetricRow& row : r.rows) iterations.insert(row.iteration);
        EXPECT_EQ(iterations.size(), 6u) << mode_name(m);
    }
}

TEST(Snapshots, JsonRoundTripAndEvaluation) {
    ExperimentConfig c;
    c.environment = GarnetSource{4, 3, 0, std::nullopt};
    c.trials = 2;
    c.train.iterations = 6;
    c.train.snapshot_period = 3;
    const RunRecord r = run_experiment(c);
    const auto back = snapshots_from_json(nlohmann::json::parse(snapshots_to_json(r.policies).dump()));
    ASSERT_EQ(back.size(), 2u);
    ASSERT_EQ(back[1].snapshots.size(), 3u);
    EXPECT_EQ(back[1].mdp, r.policies[1].mdp);
    EXPECT_EQ(back[1].snapshots[2].params, r.policies[1].snapshots[2].params);
    const auto rows = evaluate_snapshots(back, std::nullopt, ExactEvaluation{}, 0);
    ASSERT_EQ(rows.size(), 2u * 3u * 2u);
    for (const MetricRow& e : rows)
        if (e.metric == "reward_robust")
            for (const MetricRow& t : r.rows)
                if (t.metric == "reward_robust" && t.trial == e.trial && t.iteration == e.iteration)
                    EXPECT_NEAR(e.value, t.value, 1e-8);
    EXPECT_THROW((void)snapshots_from_json(nlohmann::json::parse(R"({"trials":[{"trial":0}]})")), LoadError);
}

TEST(Cli, SpecExampleRowCount) {
    TempDir dir;
    ASSERT_EQ(cli("train --mode rpg --garnet 12 6 --R 0.15 --T 2000 --trials 30 --seed 7 --out " + dir.file("run.csv")), 0);
    const auto rows = lines(slurp(dir.file("run.csv")));
    ASSERT_FALSE(rows.empty());
    EXPECT_EQ(rows.front(), "trial,iteration,metric,value");
    std::set<std::pair<int, int>> pairs;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        int trial = 0, it = 0;
        ASSERT_EQ(std::sscanf(rows[i].c_str(), "%d,%d,", &trial, &it), 2);
        pairs.insert({trial, it});
    }
    EXPECT_EQ(pairs.size(), 30u * 2001u);
    EXPECT_EQ(rows.size() - 1, 30u * 2001u * 7u);
    const auto summary = lines(slurp(dir.file("run_summary.csv")));
    EXPECT_EQ(summary.front(), "iteration,metric,p05,p50,p95");
    EXPECT_EQ(summary.size() - 1, 2001u * 7u);
}

TEST(Cli, ZeroRadiusMatchesNominal) {
    TempDir dir;
    ASSERT_EQ(cli("train --mode rpg --R 0 --garnet 6 3 --T 100 --trials 3 --seed 11 --out " + dir.file("r.csv")), 0);
    ASSERT_EQ(cli("train --mode nominal_pg --R 0 --garnet 6 3 --T 100 --trials 3 --seed 11 --out " + dir.file("n.csv")), 0);
    EXPECT_EQ(slurp(dir.file("r.csv")), slurp(dir.file("n.csv")));
    ASSERT_EQ(cli("train --mode ac --R 0 --garnet 4 2 --T 5 --critic-steps 2000 --rollouts 8 --seed 11 --out " + dir.file("ra.csv")), 0);
    ASSERT_EQ(cli("train --mode nominal_ac --R 0 --garnet 4 2 --T 5 --critic-steps 2000 --rollouts 8 --seed 11 --out " + dir.file("na.csv")), 0);
    EXPECT_EQ(slurp(dir.file("ra.csv")), slurp(dir.file("na.csv")));
}

TEST(Cli, CsvIsByteIdenticalAcrossRunsAndThreads) {
    TempDir dir;
    const std::string args = "train --mode srpg --sigma 20 --garnet 5 3 --T 50 --trials 6 --seed 3 --eval td --eval-samples 2000 --eval-repeats 3 --snapshot-period 25 --dat " ;
    ASSERT_EQ(cli(args + dir.file("a.dat") + " --out " + dir.file("a.csv"), "ROBUSTMDP_THREADS=3"), 0);
    ASSERT_EQ(cli(args + dir.file("b.dat") + " --out " + dir.file("b.csv"), "ROBUSTMDP_THREADS=1"), 0);
    const std::string a = slurp(dir.file("a.csv"));
    EXPECT_EQ(a, slurp(dir.file("b.csv")));
    EXPECT_EQ(slurp(dir.file("a_summary.csv")), slurp(dir.file("b_summary.csv")));
    EXPECT_EQ(slurp(dir.file("a.dat")), slurp(dir.file("b.dat")));
    EXPECT_EQ(a.find('\r'), std::string::npos);
    // 17 significant digits survive a text round trip.
    const auto rows = lines(a);
    const std::string& sample = rows[1];
    const double v = std::stod(sample.substr(sample.rfind(',') + 1));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    EXPECT_EQ(sample.substr(sample.rfind(',') + 1), buf);
}

TEST(Cli, GarnetGenEvaluateAndConstants) {
    TempDir dir;
    ASSERT_EQ(cli("garnet-gen --garnet 5 3 --branching 2 --seed 9 --R 0.1 --out " + dir.file("g.json")), 0);
    EXPECT_EQ(load_mdp(dir.file("g.json")), garnet_generate(5, 3, 2, 9, 0.9, 0.1));
    ASSERT_EQ(cli("train --mode rpg --mdp " + dir.file("g.json") + " --T 20 --snapshot-period 10 --policies " +
                  dir.file("p.json") + " --out " + dir.file("t.csv")),
              0);
    ASSERT_EQ(cli("evaluate --policies " + dir.file("p.json") + " --out " + dir.file("e.csv")), 0);
    const auto rows = lines(slurp(dir.file("e.csv")));
    EXPECT_EQ(rows.size(), 1u + 3u * 2u);
    ASSERT_EQ(cli("evaluate --policies " + dir.file("p.json") + " --eval td --eval-samples 1000 --eval-repeats 2 --R 0.2 --out " +
                  dir.file("e2.csv")),
              0);
    ASSERT_EQ(cli("constants --gamma 0.9 --mu-min 0.1 --actions 6 > " + dir.file("c.txt")), 0);
    std::map<std::string, double> values;
    std::istringstream in(slurp(dir.file("c.txt")));
    for (std::string name; in >> name;) in >> values[name];
    EXPECT_NEAR(values.at("C_PL"), 100.0, 1e-12 * 100.0);
    EXPECT_NEAR(values.at("L_V"), 600.0, 1e-12 * 600.0);
    EXPECT_EQ(values.size(), 9u);
}

TEST(Cli, UsageErrorsExitNonzero) {
    TempDir dir;
    EXPECT_NE(cli(""), 0);
    EXPECT_NE(cli("train --mode sarsa --out " + dir.file("x.csv")), 0);
    EXPECT_NE(cli("train --mode srpg --out " + dir.file("x.csv")), 0);
    EXPECT_NE(cli("train --garnet 4 --out " + dir.file("x.csv")), 0);
    EXPECT_NE(cli("evaluate --policies " + dir.file("missing.json")), 0);
    EXPECT_NE(cli("verify --check 14"), 0);
}

TEST(Cli, VerifySmallSuitePasses) {
    EXPECT_EQ(cli("verify --small-suite > /dev/null"), 0);
}
