#include "robust_mdp/optimizers.hpp"

#include "robust_mdp/errors.hpp"
#include "robust_mdp/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace robust_mdp {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

double smoothness_for(const TabularMdp& mdp, const PolicyHandle& policy, const ObjectiveSpec& spec,
                      const EvalMode& mode, const TrainConfig& config) {
    if (!config.schedule.needs_smoothness()) return 0.0;
    if (!policy.is_direct())
        throw UnsupportedError("1/L step rules need the direct policy class (k_pi = 1, l_pi = 0)");
    ConstantInputs in;
    in.mu_min = spec.mu_min();
    in.gamma = mdp.gamma();
    in.radius = effective_radius(mdp, mode);
    in.num_states = mdp.num_states();
    in.num_actions = mdp.num_actions();
    if (mode.kind == ValueKind::smoothed) {
        in.sigma = mode.sigma;
    } else if (in.radius > 0.0) {
        // L_sigma grows with sigma and the robust objective is not smooth.
        throw ParameterError("1/L step rules need a smoothed objective or R = 0");
    }
    return compute_constants(in).L_sigma;
}

} // namespace

double StepSchedule::alpha(std::size_t t, double smoothness) const {
    switch (rule) {
    case StepRule::constant: return value;
    case StepRule::harmonic: return value / static_cast<double>(t + 1);
    case StepRule::one_over_l: return 1.0 / smoothness;
    case StepRule::half_over_l: return 0.5 / smoothness;
    }
    return value;
}

Vector gradient_mapping(const PolicyHandle& policy, const Vector& grad, double alpha) {
    if (!(alpha > 0.0)) throw ParameterError("gradient_mapping: alpha must be positive");
    const Vector theta = policy.parameters();
    if (grad.size() != theta.size()) throw ParameterError("gradient_mapping: size mismatch");
    return (theta - policy.project(theta - alpha * grad)) / alpha;
}

MetricRecorder::MetricRecorder(const TabularMdp& mdp, const ObjectiveSpec& spec,
                               std::optional<double> sigma, double tol, bool enabled)
    : mdp_(mdp), spec_(spec), sigma_(sigma), tol_(tol), enabled_(enabled),
      min_j_(std::numeric_limits<double>::infinity()), start_(now_seconds()) {}

TraceRow MetricRecorder::row(std::size_t t, const PolicyHandle& policy, double grad_norm,
                             double mapping_norm) {
    TraceRow r;
    r.t = t;
    r.grad_norm = grad_norm;
    r.gradient_mapping_norm = mapping_norm;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.j_robust = r.j_nominal = r.j_sigma = r.min_j_robust = nan;
    if (enabled_) {
        const PolicyTable table = policy.table();
        r.j_robust = objective(mdp_, table, spec_.rho(), EvalMode::robust(), tol_);
        r.j_nominal = objective(mdp_, table, spec_.rho(), EvalMode::nominal(), tol_);
        if (sigma_) r.j_sigma = objective(mdp_, table, spec_.rho(), EvalMode::smoothed(*sigma_), tol_);
        min_j_ = std::min(min_j_, r.j_robust);
        r.min_j_robust = min_j_;
    }
    r.wall_time = now_seconds() - start_;
    return r;
}

TrainTrace run_projected_descent(const TabularMdp& mdp, PolicyHandle policy,
                                 const ObjectiveSpec& spec, const EvalMode& mode,
                                 const TrainConfig& config) {
    if (config.iterations < 1) throw ParameterError("TrainConfig: iterations must be at least 1");
    if (!(config.tol > 0.0)) throw ParameterError("TrainConfig: tol must be positive");
    if (!config.schedule.needs_smoothness() && !(config.schedule.value > 0.0))
        throw ParameterError("TrainConfig: step size must be positive");
    if (static_cast<std::size_t>(spec.rho().size()) != mdp.num_states())
        throw ParameterError("TrainConfig: measure length does not match the MDP");
    if (mode.kind == ValueKind::smoothed && !(mode.sigma > 0.0))
        throw ParameterError("TrainConfig: sigma must be positive");

    const double smoothness = smoothness_for(mdp, policy, spec, mode, config);
    MetricRecorder recorder(mdp, spec, config.sigma, config.tol, config.record_metrics);
    TrainTrace trace;
    trace.rows.reserve(config.iterations + 1);

    for (std::size_t t = 0;; ++t) {
        const Vector grad = mode_gradient(mdp, policy, spec.mu(), mode, config.tol).vector;
        const double alpha = config.schedule.alpha(t, smoothness);
        const Vector theta = policy.parameters();
        const Vector next = policy.project(theta - alpha * grad);
        const double mapping_norm = ((theta - next) / alpha).norm();
        trace.rows.push_back(recorder.row(t, policy, grad.norm(), mapping_norm));
        if (config.snapshot_period > 0 && t % config.snapshot_period == 0)
            trace.snapshots.push_back({t, theta});
        if (t == config.iterations) break;
        policy.set_parameters(next);
    }
    trace.final_params = policy.parameters();
    return trace;
}

TrainTrace run_rpg(const TabularMdp& mdp, DirectPolicy policy, const ObjectiveSpec& spec,
                   const TrainConfig& config) {
    return run_projected_descent(mdp, std::move(policy), spec, EvalMode::robust(), config);
}

TrainTrace run_srpg(const TabularMdp& mdp, DirectPolicy policy, const ObjectiveSpec& spec,
                    const TrainConfig& config) {
    if (!config.sigma) throw ParameterError("run_srpg: sigma is required");
    return run_projected_descent(mdp, std::move(policy), spec, EvalMode::smoothed(*config.sigma),
                                 config);
}

TrainTrace run_nominal_pg(const TabularMdp& mdp, DirectPolicy policy, const ObjectiveSpec& spec,
                          const TrainConfig& config) {
    return run_projected_descent(mdp, std::move(policy), spec, EvalMode::nominal(), config);
}

BruteForceResult brute_force_optimum(const TabularMdp& mdp, const ObjectiveSpec& spec,
                                     const EvalMode& mode, double tol) {
    const std::size_t ns = mdp.num_states(), na = mdp.num_actions();
    std::size_t count = 1;
    for (std::size_t s = 0; s < ns; ++s) {
        if (count > kBruteForceLimit / na)
            throw ParameterError("brute_force_optimum: |A|^|S| exceeds " +
                                 std::to_string(kBruteForceLimit));
        count *= na;
    }
    if (static_cast<std::size_t>(spec.rho().size()) != ns)
        throw ParameterError("brute_force_optimum: measure length does not match the MDP");

    const auto decode = [&](std::size_t k) {
        std::vector<std::size_t> actions(ns);
        for (std::size_t s = 0; s < ns; ++s, k /= na) actions[s] = k % na;
        return actions;
    };
    std::vector<double> values(count);
    parallel_for(count, [&](std::size_t k) {
        const auto actions = decode(k);
        const DirectPolicy pi = DirectPolicy::deterministic(actions, na);
        values[k] = objective(mdp, pi.table(), spec.rho(), mode, tol);
    });
    // Values within the solver tolerance are ties; the first index wins.
    const double lowest = *std::min_element(values.begin(), values.end());
    std::size_t best = 0;
    while (values[best] > lowest + tol) ++best;
    auto actions = decode(best);
    DirectPolicy policy = DirectPolicy::deterministic(actions, na);
    return {std::move(policy), std::move(actions), values[best]};
}

} // namespace robust_mdp
