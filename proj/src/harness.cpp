#include "robust_mdp/harness.hpp"

#include "robust_mdp/errors.hpp"
#include "robust_mdp/mdp_io.hpp"
#include "robust_mdp/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

namespace robust_mdp {

namespace {

constexpr std::array<std::pair<Mode, std::string_view>, 7> kModeNames{{
    {Mode::rpg, "rpg"},
    {Mode::srpg, "srpg"},
    {Mode::ac, "ac"},
    {Mode::smoothed_ac, "smoothed_ac"},
    {Mode::nominal_pg, "nominal_pg"},
    {Mode::nominal_ac, "nominal_ac"},
    {Mode::td_eval, "td_eval"},
}};

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool needs_sigma(Mode mode) { return mode == Mode::srpg || mode == Mode::smoothed_ac; }

bool is_actor_critic(Mode mode) {
    return mode == Mode::ac || mode == Mode::smoothed_ac || mode == Mode::nominal_ac;
}

struct TrialResult {
    std::vector<MetricRow> rows;
    TrialSnapshots policies;
};

void push(std::vector<MetricRow>& rows, std::size_t trial, std::size_t t, const char* metric, double v) {
    rows.push_back({trial, t, metric, v});
}

void append_trace_rows(std::vector<MetricRow>& rows, std::size_t trial, const TrainTrace& trace, double gamma) {
    for (const TraceRow& r : trace.rows) {
        push(rows, trial, r.t, "j_robust", r.j_robust);
        push(rows, trial, r.t, "j_nominal", r.j_nominal);
        if (!std::isnan(r.j_sigma)) push(rows, trial, r.t, "j_sigma", r.j_sigma);
        push(rows, trial, r.t, "min_j_robust", r.min_j_robust);
        push(rows, trial, r.t, "reward_robust", cost_to_reward(r.j_robust, gamma));
        push(rows, trial, r.t, "reward_nominal", cost_to_reward(r.j_nominal, gamma));
        push(rows, trial, r.t, "grad_norm", r.grad_norm);
        push(rows, trial, r.t, "gradient_mapping_norm", r.gradient_mapping_norm);
    }
}

TrainTrace train(const ExperimentConfig& config, const TabularMdp& mdp, DirectPolicy init,
                 std::uint64_t seed) {
    const ObjectiveSpec spec = ObjectiveSpec::uniform(mdp.num_states());
    if (is_actor_critic(config.mode)) {
        AcConfig ac = config.ac;
        ac.seed = seed;
        ac.sigma = config.sigma;
        ac.record_metrics = true;
        switch (config.mode) {
        case Mode::ac: return run_robust_ac(mdp, std::move(init), spec, ac);
        case Mode::smoothed_ac: return run_smoothed_ac_tabular(mdp, std::move(init), spec, ac);
        default: return run_nominal_ac(mdp, std::move(init), spec, ac);
        }
    }
    TrainConfig tc = config.train;
    tc.seed = seed;
    tc.sigma = config.sigma;
    tc.record_metrics = true;
    switch (config.mode) {
    case Mode::rpg: return run_rpg(mdp, std::move(init), spec, tc);
    case Mode::srpg: return run_srpg(mdp, std::move(init), spec, tc);
    default: return run_nominal_pg(mdp, std::move(init), spec, tc);
    }
}

// Learning curve of tabular robust TD for the initial policy.
std::vector<MetricRow> td_curve(const ExperimentConfig& config, const TabularMdp& mdp,
                                const PolicyTable& policy, std::size_t trial, RngStream rng) {
    const EvalMode mode = config.sigma ? EvalMode::smoothed(*config.sigma) : EvalMode::robust();
    const QTable exact = solve_value(mdp, policy, mode, config.train.tol).q;
    const Vector rho = Vector::Constant(static_cast<Eigen::Index>(mdp.num_states()),
                                        1.0 / static_cast<double>(mdp.num_states()));
    const double j_exact = rho.dot(state_values(policy, exact));
    const std::size_t checkpoints = config.iterations();
    TdOptions options;
    options.sigma = config.sigma;
    options.schedule = config.ac.critic_schedule;
    options.reset_period = config.ac.reset_period;
    options.start = rho;
    std::vector<MetricRow> rows;
    QTable q = QTable::Zero(exact.rows(), exact.cols());
    std::size_t done = 0;
    for (std::size_t k = 0; k <= checkpoints; ++k) {
        const std::size_t target = config.ac.critic_steps * k / std::max<std::size_t>(checkpoints, 1);
        if (target > done) {
            // One continuous run: each chunk resumes from the previous table on a fresh substream.
            options.steps = target - done;
            RngStream chunk = rng.split(k);
            q = robust_td_tabular(mdp, policy, options, chunk, q);
            done = target;
        }
        const double j_td = rho.dot(state_values(policy, q));
        push(rows, trial, k, "j_td", j_td);
        push(rows, trial, k, "j_exact", j_exact);
        push(rows, trial, k, "reward_td", cost_to_reward(j_td, mdp.gamma()));
        push(rows, trial, k, "q_error", (q - exact).cwiseAbs().maxCoeff());
    }
    return rows;
}

TrialResult run_trial(const ExperimentConfig& config, std::size_t trial) {
    const RngStream stream = RngStream(config.seed).split(trial);
    TabularMdp mdp = trial_mdp(config, trial);
    RngStream init_rng = stream.split(2);
    DirectPolicy init = config.init == InitKind::uniform
                            ? DirectPolicy::uniform(mdp.num_states(), mdp.num_actions())
                            : DirectPolicy::random_interior(mdp.num_states(), mdp.num_actions(), init_rng);
    TrialResult result{{}, {trial, mdp, {}}};
    if (config.mode == Mode::td_eval) {
        result.rows = td_curve(config, mdp, init.table(), trial, stream.split(1));
        result.policies.snapshots.push_back({0, flatten(init.table())});
        return result;
    }
    RngStream seed_rng = stream.split(1);
    const TrainTrace trace = train(config, mdp, std::move(init), seed_rng());
    append_trace_rows(result.rows, trial, trace, mdp.gamma());
    result.policies.snapshots = trace.snapshots;
    const std::size_t last = config.iterations();
    if (result.policies.snapshots.empty() || result.policies.snapshots.back().t != last)
        result.policies.snapshots.push_back({last, trace.final_params});

    if (const auto* td = std::get_if<TdEvaluation>(&config.eval)) {
        const Vector rho = ObjectiveSpec::uniform(mdp.num_states()).rho();
        for (const Snapshot& s : result.policies.snapshots) {
            const PolicyTable table = unflatten(s.params, mdp.num_states(), mdp.num_actions());
            const EvaluationResult e = evaluate_policy(mdp, table, rho, *td, stream.split(3).split(s.t)());
            push(result.rows, trial, s.t, "j_robust_td", e.mean);
            push(result.rows, trial, s.t, "reward_robust_td", cost_to_reward(e.mean, mdp.gamma()));
        }
    }
    return result;
}

} // namespace

std::string_view mode_name(Mode mode) noexcept {
    for (const auto& [m, name] : kModeNames)
        if (m == mode) return name;
    return "unknown";
}

Mode parse_mode(std::string_view name) {
    for (const auto& [m, n] : kModeNames)
        if (n == name) return m;
    throw ParameterError("unknown mode '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ParameterError("gamma must lie in [0,1)");
    if (!(radius >= 0.0 && radius <= 1.0)) throw ParameterError("R must lie in [0,1]");
    if (trials == 0) throw ParameterError("trials must be positive");
    if (sigma && !(*sigma > 0.0)) throw ParameterError("sigma must be positive");
    if (needs_sigma(mode) && !sigma) throw ParameterError(std::string(mode_name(mode)) + " requires sigma");
    if (const auto* g = std::get_if<GarnetSource>(&environment)) {
        if (g->states < 2 || g->actions < 2) throw ParameterError("garnet needs at least 2 states and 2 actions");
        if (g->branching > g->states) throw ParameterError("garnet branching exceeds the state count");
    }
    if (const auto* td = std::get_if<TdEvaluation>(&eval)) {
        if (td->samples == 0 || td->repeats == 0) throw ParameterError("td evaluation needs samples and repeats");
    }
}

std::size_t ExperimentConfig::iterations() const {
    return is_actor_critic(mode) ? ac.iterations : train.iterations;
}

EvaluationResult evaluate_policy(const TabularMdp& mdp, const PolicyTable& policy, const Vector& rho,
                                 const EvaluationMethod& method, std::uint64_t seed, bool robust) {
    const TabularMdp model = robust ? mdp : mdp.with_parameters(mdp.gamma(), 0.0);
    if (std::holds_alternative<ExactEvaluation>(method)) {
        const double j = objective(model, policy, rho, EvalMode::robust());
        return {j, {j}};
    }
    const TdEvaluation& td = std::get<TdEvaluation>(method);
    TdOptions options;
    options.steps = td.samples;
    options.start = rho;
    EvaluationResult result;
    result.per_rep.assign(td.repeats, 0.0);
    const RngStream master(seed);
    parallel_for(td.repeats, [&](std::size_t r) {
        RngStream rng = master.split(r);
        const QTable q = robust_td_tabular(model, policy, options, rng);
        result.per_rep[r] = rho.dot(state_values(policy, q));
    });
    double sum = 0.0;
    for (double v : result.per_rep) sum += v;
    result.mean = sum / static_cast<double>(td.repeats);
    return result;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw ParameterError("percentile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("percentile level must lie in [0,1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<PercentileRow> percentile_summary(const std::vector<MetricRow>& rows) {
    std::vector<std::string> names;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> groups;
    for (const MetricRow& r : rows) {
        auto it = std::find(names.begin(), names.end(), r.metric);
        if (it == names.end()) it = names.insert(names.end(), r.metric);
        groups[{r.iteration, static_cast<std::size_t>(it - names.begin())}].push_back(r.value);
    }
    std::vector<PercentileRow> out;
    out.reserve(groups.size());
    for (const auto& [key, values] : groups)
        out.push_back({key.first, names[key.second], percentile(values, 0.05), percentile(values, 0.5),
                       percentile(values, 0.95)});
    return out;
}

TabularMdp trial_mdp(const ExperimentConfig& config, std::size_t trial) {
    if (const auto* g = std::get_if<GarnetSource>(&config.environment)) {
        RngStream draw = RngStream(config.seed).split(trial).split(0);
        const std::uint64_t seed = g->instance_seed ? *g->instance_seed : draw();
        return garnet_generate(g->states, g->actions, g->branching == 0 ? g->states : g->branching, seed,
                               config.gamma, config.radius);
    }
    return load_mdp(std::get<FileSource>(config.environment).path).with_parameters(config.gamma, config.radius);
}

RunRecord run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::vector<std::optional<TrialResult>> results(config.trials);
    parallel_for(config.trials, [&](std::size_t k) { results[k] = run_trial(config, k); });
    RunRecord record;
    for (auto& r : results) {
        record.rows.insert(record.rows.end(), std::make_move_iterator(r->rows.begin()),
                           std::make_move_iterator(r->rows.end()));
        record.policies.push_back(std::move(r->policies));
    }
    record.summary = percentile_summary(record.rows);
    return record;
}

void write_rows_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
    out << "trial,iteration,metric,value\n";
    for (const MetricRow& r : rows)
        out << r.trial << ',' << r.iteration << ',' << r.metric << ',' << format_double(r.value) << '\n';
}

void write_summary_csv(std::ostream& out, const std::vector<PercentileRow>& summary) {
    out << "iteration,metric,p05,p50,p95\n";
    for (const PercentileRow& r : summary)
        out << r.iteration << ',' << r.metric << ',' << format_double(r.p05) << ',' << format_double(r.p50)
            << ',' << format_double(r.p95) << '\n';
}

void write_summary_dat(std::ostream& out, const std::vector<PercentileRow>& summary) {
    std::vector<std::string> names;
    for (const PercentileRow& r : summary)
        if (std::find(names.begin(), names.end(), r.metric) == names.end()) names.push_back(r.metric);
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out << "\n\n";
        out << "# " << names[i] << "\n# iteration p05 p50 p95\n";
        for (const PercentileRow& r : summary)
            if (r.metric == names[i])
                out << r.iteration << ' ' << format_double(r.p05) << ' ' << format_double(r.p50) << ' '
                    << format_double(r.p95) << '\n';
    }
}

nlohmann::json snapshots_to_json(const std::vector<TrialSnapshots>& policies) {
    nlohmann::json trials = nlohmann::json::array();
    for (const TrialSnapshots& p : policies) {
        nlohmann::json snaps = nlohmann::json::array();
        const std::size_t na = p.mdp.num_actions();
        for (const Snapshot& s : p.snapshots) {
            nlohmann::json table = nlohmann::json::array();
            for (std::size_t st = 0; st < p.mdp.num_states(); ++st) {
                std::vector<double> row(na);
                for (std::size_t a = 0; a < na; ++a) row[a] = s.params[static_cast<Eigen::Index>(st * na + a)];
                table.push_back(row);
            }
            snaps.push_back({{"iteration", s.t}, {"policy", table}});
        }
        trials.push_back({{"trial", p.trial}, {"mdp", mdp_to_json(p.mdp)}, {"snapshots", snaps}});
    }
    return {{"trials", trials}};
}

std::vector<TrialSnapshots> snapshots_from_json(const nlohmann::json& doc) {
    std::vector<TrialSnapshots> out;
    try {
        for (const auto& t : doc.at("trials")) {
            TrialSnapshots p{t.at("trial").get<std::size_t>(), mdp_from_json(t.at("mdp")), {}};
            const std::size_t ns = p.mdp.num_states(), na = p.mdp.num_actions();
            for (const auto& s : t.at("snapshots")) {
                const auto table = s.at("policy").get<std::vector<std::vector<double>>>();
                if (table.size() != ns) throw LoadError("snapshot policy has the wrong number of states");
                Vector params(static_cast<Eigen::Index>(ns * na));
                for (std::size_t st = 0; st < ns; ++st) {
                    if (table[st].size() != na) throw LoadError("snapshot policy has the wrong number of actions");
                    for (std::size_t a = 0; a < na; ++a) params[static_cast<Eigen::Index>(st * na + a)] = table[st][a];
                }
                p.snapshots.push_back({s.at("iteration").get<std::size_t>(), params});
            }
            out.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("malformed snapshot file: ") + e.what());
    }
    return out;
}

std::vector<MetricRow> evaluate_snapshots(const std::vector<TrialSnapshots>& policies,
                                          std::optional<double> radius, const EvaluationMethod& method,
                                          std::uint64_t seed) {
    std::vector<std::vector<MetricRow>> per_trial(policies.size());
    parallel_for(policies.size(), [&](std::size_t i) {
        const TrialSnapshots& p = policies[i];
        const TabularMdp mdp = radius ? p.mdp.with_parameters(p.mdp.gamma(), *radius) : p.mdp;
        const Vector rho = ObjectiveSpec::uniform(mdp.num_states()).rho();
        const RngStream stream = RngStream(seed).split(p.trial);
        for (const Snapshot& s : p.snapshots) {
            const PolicyTable table = unflatten(s.params, mdp.num_states(), mdp.num_actions());
            if (!(table.array() >= -kSimplexTolerance).all())
                throw ParameterError("snapshot policy has negative entries");
            const std::uint64_t sub = stream.split(s.t)();
            const EvaluationResult robust = evaluate_policy(mdp, table, rho, method, sub, true);
            const EvaluationResult nominal = evaluate_policy(mdp, table, rho, method, sub, false);
            push(per_trial[i], p.trial, s.t, "reward_robust", cost_to_reward(robust.mean, mdp.gamma()));
            push(per_trial[i], p.trial, s.t, "reward_nominal", cost_to_reward(nominal.mean, mdp.gamma()));
        }
    });
    std::vector<MetricRow> rows;
    for (auto& v : per_trial) rows.insert(rows.end(), v.begin(), v.end());
    return rows;
}

} // namespace robust_mdp
