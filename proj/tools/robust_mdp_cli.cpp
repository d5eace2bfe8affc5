#include "robust_mdp/errors.hpp"
#include "robust_mdp/harness.hpp"
#include "robust_mdp/mdp_io.hpp"
#include "robust_mdp/verification.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

using namespace robust_mdp;

namespace {

struct GarnetArgs {
    std::vector<std::size_t> shape;
    std::size_t branching = 0;
};

struct TrainArgs {
    std::string mode = "rpg";
    GarnetArgs garnet;
    std::string mdp_path;
    std::optional<std::uint64_t> instance_seed;
    std::optional<double> gamma;
    std::optional<double> radius;
    std::optional<double> sigma;
    std::size_t iterations = 1000;
    std::optional<std::string> step;
    std::optional<double> alpha;
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    std::string init = "uniform";
    std::string eval = "exact";
    std::size_t eval_samples = 200;
    std::size_t eval_repeats = 30;
    std::size_t snapshot_period = 0;
    std::string critic = "tabular";
    std::size_t critic_steps = 20000;
    std::size_t critic_hidden = 20;
    std::size_t rollouts = 64;
    std::string out;
    std::string summary;
    std::string dat;
    std::string policies;
};

const std::map<std::string, StepRule> kStepRules{{"constant", StepRule::constant},
                                                 {"harmonic", StepRule::harmonic},
                                                 {"one_over_l", StepRule::one_over_l},
                                                 {"half_over_l", StepRule::half_over_l}};

EvaluationMethod make_eval(const std::string& kind, std::size_t samples, std::size_t repeats) {
    if (kind == "exact") return ExactEvaluation{};
    return TdEvaluation{samples, repeats};
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParameterError("cannot open '" + path + "' for writing");
    return out;
}

std::string default_summary_path(const std::string& out) {
    const std::filesystem::path p(out);
    return (p.parent_path() / (p.stem().string() + "_summary.csv")).string();
}

void add_garnet_options(CLI::App* cmd, GarnetArgs& g) {
    cmd->add_option("--garnet", g.shape, "Garnet shape: states actions")->expected(2);
    cmd->add_option("--branching", g.branching, "Nonzero entries per kernel row (0 = dense)");
}

int run_train(const TrainArgs& a) {
    ExperimentConfig config;
    config.mode = parse_mode(a.mode);
    if (!a.mdp_path.empty()) {
        const TabularMdp file = load_mdp(a.mdp_path);
        config.environment = FileSource{a.mdp_path};
        config.gamma = a.gamma.value_or(file.gamma());
        config.radius = a.radius.value_or(file.radius());
    } else {
        GarnetSource g;
        if (!a.garnet.shape.empty()) {
            g.states = a.garnet.shape[0];
            g.actions = a.garnet.shape[1];
        }
        g.branching = a.garnet.branching;
        g.instance_seed = a.instance_seed;
        config.environment = g;
        config.gamma = a.gamma.value_or(0.9);
        config.radius = a.radius.value_or(0.15);
    }
    config.sigma = a.sigma;
    config.trials = a.trials;
    config.seed = a.seed;
    config.init = a.init == "random" ? InitKind::random : InitKind::uniform;
    config.eval = make_eval(a.eval, a.eval_samples, a.eval_repeats);

    const bool actor_critic = config.mode == Mode::ac || config.mode == Mode::smoothed_ac ||
                              config.mode == Mode::nominal_ac;
    // Policy-gradient default: harmonic 1/(t+1). Actor-critic default: constant 0.1.
    StepSchedule schedule = actor_critic ? StepSchedule::constant(0.1) : StepSchedule::harmonic(1.0);
    if (a.step) schedule.rule = kStepRules.at(*a.step);
    if (a.alpha) schedule.value = *a.alpha;
    else if (a.step && schedule.rule == StepRule::half_over_l) schedule.value = 0.5;
    else if (a.step && schedule.rule != StepRule::constant) schedule.value = 1.0;

    config.train.iterations = a.iterations;
    config.train.schedule = schedule;
    config.train.snapshot_period = a.snapshot_period;
    config.ac.iterations = a.iterations;
    config.ac.actor_schedule = schedule;
    config.ac.snapshot_period = a.snapshot_period;
    config.ac.critic_steps = a.critic_steps;
    config.ac.critic_hidden = a.critic_hidden;
    config.ac.rollouts = a.rollouts;
    config.ac.critic = a.critic == "mlp" ? CriticKind::mlp : a.critic == "exact" ? CriticKind::exact : CriticKind::tabular;
    if (config.ac.critic == CriticKind::mlp) config.ac.critic_schedule = {0.1, 0.7, true};

    const RunRecord record = run_experiment(config);
    {
        std::ofstream out = open_output(a.out);
        write_rows_csv(out, record.rows);
    }
    const std::string summary_path = a.summary.empty() ? default_summary_path(a.out) : a.summary;
    {
        std::ofstream out = open_output(summary_path);
        write_summary_csv(out, record.summary);
    }
    if (!a.dat.empty()) {
        std::ofstream out = open_output(a.dat);
        write_summary_dat(out, record.summary);
    }
    if (!a.policies.empty()) {
        std::ofstream out = open_output(a.policies);
        out << snapshots_to_json(record.policies).dump() << '\n';
    }
    std::cerr << "wrote " << record.rows.size() << " rows to " << a.out << " and " << record.summary.size()
              << " summary rows to " << summary_path << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust MDP toolkit: R-contamination dynamic programming, policy gradient, TD and actor-critic"};
    app.require_subcommand(1);

    // garnet-gen
    auto* gen = app.add_subcommand("garnet-gen", "Write a random Garnet MDP as JSON");
    GarnetArgs gen_garnet;
    std::uint64_t gen_seed = 0;
    double gen_gamma = 0.9, gen_radius = 0.0;
    std::string gen_out;
    add_garnet_options(gen, gen_garnet);
    gen->get_option("--garnet")->required();
    gen->add_option("--seed", gen_seed, "Instance seed");
    gen->add_option("--gamma", gen_gamma, "Discount factor")->check(CLI::Range(0.0, 0.999999));
    gen->add_option("--R", gen_radius, "Contamination radius")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--out", gen_out, "Output path")->required();

    // train
    auto* train = app.add_subcommand("train", "Run an algorithm over several trials and write CSV");
    TrainArgs ta;
    train->add_option("--mode", ta.mode, "rpg|srpg|ac|smoothed_ac|nominal_pg|nominal_ac|td_eval")
        ->check(CLI::IsMember({"rpg", "srpg", "ac", "smoothed_ac", "nominal_pg", "nominal_ac", "td_eval"}));
    add_garnet_options(train, ta.garnet);
    auto* mdp_opt = train->add_option("--mdp", ta.mdp_path, "MDP JSON file")->check(CLI::ExistingFile);
    train->get_option("--garnet")->excludes(mdp_opt);
    train->add_option("--instance-seed", ta.instance_seed, "Share one Garnet instance across trials");
    train->add_option("--gamma", ta.gamma, "Discount factor (default 0.9 or the file's)");
    train->add_option("--R", ta.radius, "Contamination radius (default 0.15 or the file's)");
    train->add_option("--sigma", ta.sigma, "LSE smoothing parameter");
    train->add_option("--T", ta.iterations, "Outer iterations");
    train->add_option("--step", ta.step, "Step rule")->check(CLI::IsMember({"constant", "harmonic", "one_over_l", "half_over_l"}));
    train->add_option("--alpha", ta.alpha, "Step size (constant) or numerator (harmonic)");
    train->add_option("--trials", ta.trials, "Independent trials");
    train->add_option("--seed", ta.seed, "Master seed");
    train->add_option("--init", ta.init, "Initial policy")->check(CLI::IsMember({"uniform", "random"}));
    train->add_option("--eval", ta.eval, "Extra snapshot evaluation")->check(CLI::IsMember({"exact", "td"}));
    train->add_option("--eval-samples", ta.eval_samples, "TD evaluation samples per run");
    train->add_option("--eval-repeats", ta.eval_repeats, "TD evaluation runs");
    train->add_option("--snapshot-period", ta.snapshot_period, "Store the policy every k iterations");
    train->add_option("--critic", ta.critic, "Actor-critic critic")->check(CLI::IsMember({"tabular", "mlp", "exact"}));
    train->add_option("--critic-steps", ta.critic_steps, "TD steps per actor iteration (td_eval: total)");
    train->add_option("--critic-hidden", ta.critic_hidden, "Hidden width of the MLP critic");
    train->add_option("--rollouts", ta.rollouts, "Rollouts per gradient estimate");
    train->add_option("--out", ta.out, "Per-iteration CSV")->required();
    train->add_option("--summary", ta.summary, "Percentile CSV (default <out>_summary.csv)");
    train->add_option("--dat", ta.dat, "gnuplot data file with percentile envelopes");
    train->add_option("--policies", ta.policies, "Policy snapshot JSON");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Score stored policy snapshots");
    std::string ev_policies, ev_out, ev_kind = "exact";
    std::optional<double> ev_radius;
    std::size_t ev_samples = 200, ev_repeats = 30;
    std::uint64_t ev_seed = 0;
    eval->add_option("--policies", ev_policies, "Snapshot JSON written by train")->required()->check(CLI::ExistingFile);
    eval->add_option("--R", ev_radius, "Evaluate under this radius instead of the stored one");
    eval->add_option("--eval", ev_kind, "exact|td")->check(CLI::IsMember({"exact", "td"}));
    eval->add_option("--eval-samples", ev_samples, "TD samples per run");
    eval->add_option("--eval-repeats", ev_repeats, "TD runs");
    eval->add_option("--seed", ev_seed, "Master seed for TD evaluation");
    eval->add_option("--out", ev_out, "Output CSV (default stdout)");

    // verify
    auto* verify = app.add_subcommand("verify", "Run the property suite");
    bool small_suite = false;
    std::vector<int> only;
    verify->add_flag("--small-suite", small_suite, "Reduced sample sizes");
    verify->add_option("--check", only, "Run only these checks (1-13)")->check(CLI::Range(1, kCriterionCount));

    // constants
    auto* consts = app.add_subcommand("constants", "Print the closed-form constants");
    ConstantInputs in;
    std::optional<double> mu_min;
    consts->add_option("--gamma", in.gamma, "Discount factor");
    consts->add_option("--R", in.radius, "Contamination radius");
    consts->add_option("--sigma", in.sigma, "LSE smoothing parameter");
    consts->add_option("--states", in.num_states, "|S|");
    consts->add_option("--actions", in.num_actions, "|A|");
    consts->add_option("--mu-min", mu_min, "Smallest mass of the optimization measure (default 1/|S|)");
    consts->add_option("--k-pi", in.k_pi, "Policy gradient bound");
    consts->add_option("--l-pi", in.l_pi, "Policy smoothness");
    consts->add_option("--eps-est", in.eps_est, "Critic error bound");
    consts->add_option("--rollouts", in.rollouts, "Rollouts M");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const TabularMdp mdp = garnet_generate(gen_garnet.shape[0], gen_garnet.shape[1],
                                                   gen_garnet.branching == 0 ? gen_garnet.shape[0] : gen_garnet.branching,
                                                   gen_seed, gen_gamma, gen_radius);
            save_mdp(mdp, gen_out);
            return 0;
        }
        if (*train) return run_train(ta);
        if (*eval) {
            std::ifstream f(ev_policies);
            const auto policies = snapshots_from_json(nlohmann::json::parse(f));
            const auto rows = evaluate_snapshots(policies, ev_radius, make_eval(ev_kind, ev_samples, ev_repeats), ev_seed);
            if (ev_out.empty()) {
                write_rows_csv(std::cout, rows);
            } else {
                std::ofstream out = open_output(ev_out);
                write_rows_csv(out, rows);
            }
            return 0;
        }
        if (*verify) {
            const SuiteScale scale = small_suite ? SuiteScale::small : SuiteScale::full;
            if (only.empty())
                for (int id = 1; id <= kCriterionCount; ++id) only.push_back(id);
            bool all = true;
            for (int id : only) {
                const CheckResult r = run_check(id, scale);
                std::cout << format_result(r) << std::endl;
                all = all && r.passed;
            }
            return all ? 0 : 1;
        }
        if (*consts) {
            in.mu_min = mu_min.value_or(1.0 / static_cast<double>(in.num_states));
            const RobustConstants c = compute_constants(in);
            const std::pair<const char*, double> rows[] = {
                {"L_V", c.L_V},         {"C_PL", c.C_PL}, {"C_sigma", c.C_sigma}, {"C_V_sigma", c.C_V_sigma},
                {"k_B", c.k_B},         {"L_sigma", c.L_sigma}, {"b_g", c.b_g},   {"C_g", c.C_g},
                {"C_Omega", c.C_Omega},
            };
            for (const auto& [name, value] : rows) std::printf("%-10s %.17g\n", name, value);
            return 0;
        }
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
