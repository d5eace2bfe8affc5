#include "robust_mdp/actor_critic.hpp"

#include "robust_mdp/errors.hpp"
#include "robust_mdp/parallel.hpp"

#include <cmath>
#include <limits>

namespace robust_mdp {

std::size_t sample_geometric_horizon(double gamma, double radius, RngStream& rng) {
    if (!(gamma >= 0.0 && gamma < 1.0) || !(radius >= 0.0 && radius <= 1.0))
        throw ParameterError("sample_geometric_horizon: need 0 <= gamma < 1 and 0 <= R <= 1");
    const double fail = gamma - gamma * radius; // 1 - success probability
    const double u = rng.uniform_open();
    if (fail <= 0.0) return 0;
    // P(T >= k) = fail^k, so T = floor(log U / log fail).
    return static_cast<std::size_t>(std::floor(std::log(u) / std::log(fail)));
}

RolloutSample sample_rollout(const TabularMdp& mdp, const PolicyHandle& policy, const QTable& q,
                             std::size_t start, std::size_t horizon, RngStream& rng) {
    RolloutSample out;
    out.horizon = horizon;
    out.start = start;
    out.states.reserve(horizon + 1);
    out.actions.reserve(horizon);
    std::size_t s = start;
    out.states.push_back(s);
    for (std::size_t k = 0; k < horizon; ++k) {
        const Vector pi = policy.evaluate(s);
        const std::size_t a = rng.categorical({pi.data(), static_cast<std::size_t>(pi.size())});
        s = rng.categorical(mdp.row(s, a));
        out.actions.push_back(a);
        out.states.push_back(s);
    }
    const double restart = 1.0 - mdp.gamma() + mdp.gamma() * mdp.radius();
    out.term = Vector::Zero(static_cast<Eigen::Index>(policy.num_params()));
    policy.accumulate_weighted_grad(s, q.row(static_cast<Eigen::Index>(s)).transpose(), 1.0 / restart,
                                    out.term);
    return out;
}

GradientSampleSet estimate_gradient(const TabularMdp& mdp, const PolicyHandle& policy,
                                    const QTable& q, const Vector& measure, StartRule rule,
                                    double sigma, std::size_t rollouts, const RngStream& rng) {
    if (rollouts < 1) throw ParameterError("estimate_gradient: need at least one rollout");
    if (rule == StartRule::softmax && !(sigma > 0.0))
        throw ParameterError("estimate_gradient: softmax start needs sigma > 0");
    if (static_cast<std::size_t>(measure.size()) != mdp.num_states() || !is_distribution(measure, 1e-9))
        throw ParameterError("estimate_gradient: measure must be a distribution over the states");

    const double gamma = mdp.gamma();
    const double radius = mdp.radius();
    const double weight = gamma * radius / (1.0 - gamma);
    const Vector v = state_values(policy.table(), q);
    const Vector start_weights = rule == StartRule::softmax ? softmax(sigma, v) : Vector();
    const std::size_t worst = argmax_lowest(v);
    const auto as_span = [](const Vector& x) {
        return std::span<const double>(x.data(), static_cast<std::size_t>(x.size()));
    };

    std::vector<Vector> samples(rollouts);
    parallel_for(rollouts, [&](std::size_t j) {
        RngStream sub = rng.split(j);
        const std::size_t horizon = sample_geometric_horizon(gamma, radius, sub);
        RngStream b_rng = sub.split(0);
        const std::size_t s0 = b_rng.categorical(as_span(measure));
        Vector g = sample_rollout(mdp, policy, q, s0, horizon, b_rng).term;
        if (weight > 0.0) {
            RngStream d_rng = sub.split(1);
            const std::size_t x0 =
                rule == StartRule::softmax ? d_rng.categorical(as_span(start_weights)) : worst;
            g += weight * sample_rollout(mdp, policy, q, x0, horizon, d_rng).term;
        }
        samples[j] = std::move(g);
    });

    GradientSampleSet out;
    out.count = rollouts;
    const auto dim = static_cast<Eigen::Index>(policy.num_params());
    out.mean = Vector::Zero(dim);
    for (const Vector& g : samples) {
        out.mean += g;
        out.max_sample_norm = std::max(out.max_sample_norm, g.norm());
    }
    out.mean /= static_cast<double>(rollouts);
    Vector sq = Vector::Zero(dim);
    for (const Vector& g : samples) sq += (g - out.mean).cwiseAbs2();
    const double n = static_cast<double>(rollouts);
    out.standard_error = rollouts > 1 ? Vector((sq / (n - 1.0) / n).cwiseSqrt()) : Vector::Zero(dim);
    return out;
}

Vector expected_gradient(const TabularMdp& mdp, const PolicyHandle& policy, const QTable& q,
                         const Vector& measure, StartRule rule, double sigma) {
    const PolicyTable table = policy.table();
    const double gamma = mdp.gamma();
    const double radius = mdp.radius();
    const double restart = 1.0 - gamma + gamma * radius;
    Vector weight = visitation_distribution(mdp, table, measure) / restart;
    if (radius > 0.0) {
        const Vector v = state_values(table, q);
        const Vector start = rule == StartRule::softmax ? softmax(sigma, v)
                                                        : one_hot(argmax_lowest(v), mdp.num_states());
        weight += gamma * radius / ((1.0 - gamma) * restart) * visitation_distribution(mdp, table, start);
    }
    return weighted_policy_gradient(policy, weight, q);
}

namespace {

struct Variant {
    EvalMode critic_mode;
    StartRule rule;
    double sigma;
};

TdOptions critic_options(const AcConfig& config, const ObjectiveSpec& spec, const Variant& variant) {
    TdOptions o;
    o.steps = config.critic_steps;
    if (variant.critic_mode.kind == ValueKind::smoothed) o.sigma = variant.sigma;
    o.schedule = config.critic_schedule;
    o.reset_period = config.reset_period;
    o.start = spec.rho();
    return o;
}

class CriticState {
public:
    CriticState(const TabularMdp& model, const ObjectiveSpec& spec, const AcConfig& config,
                const Variant& variant)
        : model_(model), config_(config), variant_(variant),
          options_(critic_options(config, spec, variant)),
          mlp_(model.num_states(), model.num_actions(), config.critic_hidden) {
        if (config.critic == CriticKind::mlp) {
            RngStream init = RngStream(config.seed).split(0x5eed);
            mlp_.randomize(init);
        }
    }

    QTable update(const PolicyTable& table, RngStream rng) {
        switch (config_.critic) {
        case CriticKind::exact:
            return solve_value(model_, table, variant_.critic_mode, config_.tol).q;
        case CriticKind::tabular: {
            QTable q = config_.warm_start ? q_ : QTable();
            q = robust_td_tabular(model_, table, options_, rng, q);
            if (config_.eps_est) {
                const QTable exact = solve_value(model_, table, variant_.critic_mode, config_.tol).q;
                for (std::size_t round = 1;
                     round < config_.max_critic_rounds && (q - exact).cwiseAbs().maxCoeff() > *config_.eps_est;
                     ++round) {
                    RngStream more = rng.split(round);
                    q = robust_td_tabular(model_, table, options_, more, q);
                }
            }
            q_ = q;
            return q;
        }
        case CriticKind::mlp: {
            if (!config_.warm_start) {
                RngStream init = rng.split(0x5eed);
                mlp_.randomize(init);
            }
            robust_td_fa(model_, table, mlp_, options_, rng);
            return mlp_.table();
        }
        }
        throw ParameterError("unknown critic kind");
    }

private:
    const TabularMdp& model_;
    const AcConfig& config_;
    Variant variant_;
    TdOptions options_;
    QTable q_;
    MlpCritic mlp_;
};

double actor_smoothness(const TabularMdp& model, const PolicyHandle& policy, const ObjectiveSpec& spec,
                        const AcConfig& config) {
    if (!config.actor_schedule.needs_smoothness()) return 0.0;
    if (!policy.is_direct())
        throw UnsupportedError("1/L actor steps need the direct policy class (k_pi = 1, l_pi = 0)");
    if (model.radius() > 0.0 && !config.sigma)
        throw ParameterError("1/L actor steps need sigma when R > 0");
    ConstantInputs in;
    in.mu_min = spec.mu_min();
    in.gamma = model.gamma();
    in.radius = model.radius();
    in.sigma = config.sigma.value_or(1.0);
    in.num_states = model.num_states();
    in.num_actions = model.num_actions();
    return compute_constants(in).L_sigma;
}

TrainTrace run_ac(const TabularMdp& mdp, const TabularMdp& model, PolicyHandle policy,
                  const ObjectiveSpec& spec, const AcConfig& config, const Variant& variant) {
    if (config.iterations < 1 || config.rollouts < 1)
        throw ParameterError("AcConfig: iterations and rollouts must be at least 1");
    if (config.critic != CriticKind::exact && config.critic_steps < 1)
        throw ParameterError("AcConfig: critic_steps must be at least 1");
    if (!config.actor_schedule.needs_smoothness() && !(config.actor_schedule.value > 0.0))
        throw ParameterError("AcConfig: actor step size must be positive");
    if (static_cast<std::size_t>(spec.rho().size()) != mdp.num_states())
        throw ParameterError("AcConfig: measure length does not match the MDP");

    const double smoothness = actor_smoothness(model, policy, spec, config);
    CriticState critic(model, spec, config, variant);
    MetricRecorder recorder(mdp, spec, config.sigma, config.tol, config.record_metrics);
    const RngStream master(config.seed);
    TrainTrace trace;
    trace.rows.reserve(config.iterations + 1);

    for (std::size_t t = 0;; ++t) {
        const RngStream step_rng = master.split(t);
        const QTable q = critic.update(policy.table(), step_rng.split(0));
        const GradientSampleSet g = estimate_gradient(model, policy, q, spec.mu(), variant.rule,
                                                      variant.sigma, config.rollouts, step_rng.split(1));
        const double alpha = config.actor_schedule.alpha(t, smoothness);
        const Vector theta = policy.parameters();
        const Vector next = policy.project(theta - alpha * g.mean);
        trace.rows.push_back(recorder.row(t, policy, g.mean.norm(), ((theta - next) / alpha).norm()));
        if (config.snapshot_period > 0 && t % config.snapshot_period == 0)
            trace.snapshots.push_back({t, theta});
        if (t == config.iterations) break;
        policy.set_parameters(next);
    }
    trace.final_params = policy.parameters();
    return trace;
}

} // namespace

TrainTrace run_robust_ac(const TabularMdp& mdp, PolicyHandle policy, const ObjectiveSpec& spec,
                         const AcConfig& config) {
    return run_ac(mdp, mdp, std::move(policy), spec, config,
                  {EvalMode::robust(), StartRule::argmax, config.sigma.value_or(0.0)});
}

TrainTrace run_smoothed_ac_tabular(const TabularMdp& mdp, DirectPolicy policy,
                                   const ObjectiveSpec& spec, const AcConfig& config) {
    if (!config.sigma || !(*config.sigma > 0.0))
        throw ParameterError("run_smoothed_ac_tabular: sigma > 0 is required");
    if (config.critic == CriticKind::mlp)
        throw UnsupportedError("run_smoothed_ac_tabular: the critic must be tabular or exact");
    return run_ac(mdp, mdp, std::move(policy), spec, config,
                  {EvalMode::smoothed(*config.sigma), StartRule::softmax, *config.sigma});
}

TrainTrace run_nominal_ac(const TabularMdp& mdp, PolicyHandle policy, const ObjectiveSpec& spec,
                          const AcConfig& config) {
    const TabularMdp model = mdp.with_parameters(mdp.gamma(), 0.0);
    return run_ac(mdp, model, std::move(policy), spec, config,
                  {EvalMode::nominal(), StartRule::argmax, 0.0});
}

double estimator_bias_bound(const RobustConstants& constants, double eps_est, double sigma) {
    if (!(eps_est >= 0.0)) throw ParameterError("estimator_bias_bound: eps_est must be nonnegative");
    ConstantInputs in = constants.inputs;
    in.eps_est = eps_est;
    in.sigma = sigma;
    if (!(in.mu_min > 0.0)) in.mu_min = 1.0; // b_g does not involve mu_min
    return compute_constants(in).b_g;
}

} // namespace robust_mdp
