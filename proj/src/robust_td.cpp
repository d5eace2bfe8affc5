#include "robust_mdp/robust_td.hpp"

#include "robust_mdp/errors.hpp"

#include <cmath>

namespace robust_mdp {

namespace {

Vector resolve_start(const TabularMdp& mdp, const Vector& start) {
    const auto ns = static_cast<Eigen::Index>(mdp.num_states());
    if (start.size() == 0) return Vector::Constant(ns, 1.0 / static_cast<double>(ns));
    if (start.size() != ns || !is_distribution(start, 1e-9))
        throw ParameterError("start distribution must be a distribution over the states");
    return start;
}

void check_policy(const TabularMdp& mdp, const PolicyTable& policy) {
    if (static_cast<std::size_t>(policy.rows()) != mdp.num_states() ||
        static_cast<std::size_t>(policy.cols()) != mdp.num_actions())
        throw ParameterError("policy table shape does not match the MDP");
}

std::span<const double> row_of(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

} // namespace

SampleStream::SampleStream(const TabularMdp& mdp, PolicyTable policy, Vector start, RngStream rng,
                           std::size_t reset_period)
    : mdp_(mdp), policy_(std::move(policy)), start_(resolve_start(mdp, start)), rng_(rng),
      reset_period_(reset_period) {
    check_policy(mdp_, policy_);
    restart();
}

void SampleStream::restart() {
    s_ = rng_.categorical(row_of(start_));
    a_ = action(s_);
}

std::size_t SampleStream::action(std::size_t s) {
    const Vector row = policy_.row(static_cast<Eigen::Index>(s)).transpose();
    return rng_.categorical(row_of(row));
}

std::size_t SampleStream::step(std::size_t s, std::size_t a) {
    return rng_.categorical(mdp_.row(s, a));
}

Transition SampleStream::next() {
    Transition tr;
    tr.s = s_;
    tr.a = a_;
    tr.cost = mdp_.cost(s_, a_);
    tr.s_next = step(s_, a_);
    tr.a_next = action(tr.s_next);
    ++taken_;
    if (reset_period_ > 0 && taken_ % reset_period_ == 0) {
        restart();
    } else {
        s_ = tr.s_next;
        a_ = tr.a_next;
    }
    return tr;
}

double TdSchedule::alpha(std::size_t global_step, std::size_t pair_visits) const {
    const double n = static_cast<double>(per_pair ? pair_visits : global_step);
    return scale / std::pow(1.0 + n, exponent);
}

double td_error(double q_sa, double cost, double q_next, double v_star, double gamma, double radius) {
    return q_sa - cost - gamma * (1.0 - radius) * q_next - gamma * radius * v_star;
}

Vector state_values(const PolicyTable& policy, const QTable& q) {
    return (policy.array() * q.array()).rowwise().sum();
}

QTable robust_td_tabular(const TabularMdp& mdp, const PolicyTable& policy, const TdOptions& options,
                         RngStream& rng, const QTable& init) {
    check_policy(mdp, policy);
    if (options.sigma && !(*options.sigma > 0.0)) throw ParameterError("robust TD: sigma must be positive");
    const auto ns = static_cast<Eigen::Index>(mdp.num_states());
    const auto na = static_cast<Eigen::Index>(mdp.num_actions());
    QTable q = init.size() == 0 ? QTable::Zero(ns, na) : init;
    if (q.rows() != ns || q.cols() != na) throw ParameterError("robust TD: initial Q has the wrong shape");

    SampleStream stream(mdp, policy, options.start, rng.split(0), options.reset_period);
    Vector v = state_values(policy, q);
    Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic> visits =
        Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(ns, na);
    const double gamma = mdp.gamma();
    const double radius = mdp.radius();

    for (std::size_t t = 0; t < options.steps; ++t) {
        const Transition tr = stream.next();
        double contamination = 0.0;
        if (radius > 0.0) contamination = options.sigma ? lse(*options.sigma, v) : v.maxCoeff();
        const auto s = static_cast<Eigen::Index>(tr.s);
        const auto a = static_cast<Eigen::Index>(tr.a);
        const double target = tr.cost + gamma * (1.0 - radius) * v[static_cast<Eigen::Index>(tr.s_next)] +
                              gamma * radius * contamination;
        const double alpha = options.schedule.alpha(t, visits(s, a)++);
        const double delta = alpha * (target - q(s, a));
        q(s, a) += delta;
        v[s] += policy(s, a) * delta;
    }
    return q;
}

MlpCritic::MlpCritic(std::size_t num_states, std::size_t num_actions, std::size_t hidden)
    : net_(num_states, hidden, num_actions) {}

void MlpCritic::randomize(RngStream& rng, double output_scale) { net_.randomize(rng, output_scale); }

Vector MlpCritic::q(std::size_t s) const { return net_.forward(one_hot(s, num_states())); }

QTable MlpCritic::table() const {
    QTable out(num_states(), num_actions());
    for (std::size_t s = 0; s < num_states(); ++s) out.row(static_cast<Eigen::Index>(s)) = q(s).transpose();
    return out;
}

Mlp::ValueAndGradient MlpCritic::forward_backward(std::size_t s, std::size_t a) const {
    return net_.forward_backward(one_hot(s, num_states()), a);
}

void robust_td_fa(const TabularMdp& mdp, const PolicyTable& policy, MlpCritic& critic,
                  const TdOptions& options, RngStream& rng) {
    check_policy(mdp, policy);
    if (critic.num_states() != mdp.num_states() || critic.num_actions() != mdp.num_actions())
        throw ParameterError("robust TD: critic shape does not match the MDP");
    if (options.sigma && !(*options.sigma > 0.0)) throw ParameterError("robust TD: sigma must be positive");
    const auto ns = static_cast<Eigen::Index>(mdp.num_states());
    const auto na = static_cast<Eigen::Index>(mdp.num_actions());
    SampleStream stream(mdp, policy, options.start, rng.split(0), options.reset_period);
    Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic> visits =
        Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(ns, na);
    const double gamma = mdp.gamma();
    const double radius = mdp.radius();
    Vector zeta = critic.params();

    for (std::size_t t = 0; t < options.steps; ++t) {
        const Transition tr = stream.next();
        double v_star = 0.0;
        if (radius > 0.0) {
            const Vector v = state_values(policy, critic.table());
            v_star = options.sigma ? lse(*options.sigma, v) : v.maxCoeff();
        }
        const auto current = critic.forward_backward(tr.s, tr.a);
        const double q_next = critic.q(tr.s_next)[static_cast<Eigen::Index>(tr.a_next)];
        const double delta = td_error(current.value, tr.cost, q_next, v_star, gamma, radius);
        const double beta = options.schedule.alpha(
            t, visits(static_cast<Eigen::Index>(tr.s), static_cast<Eigen::Index>(tr.a))++);
        zeta -= beta * delta * current.gradient;
        const double norm = zeta.norm();
        if (!std::isfinite(norm) || norm > 1e6)
            throw InstabilityError("robust TD: critic parameters diverged at step " + std::to_string(t));
        critic.set_params(zeta);
    }
}

} // namespace robust_mdp
