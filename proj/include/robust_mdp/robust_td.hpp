#pragma once

#include "robust_mdp/mdp.hpp"
#include "robust_mdp/mlp.hpp"
#include "robust_mdp/policy.hpp"
#include "robust_mdp/robust_dp.hpp"
#include "robust_mdp/rng.hpp"

#include <optional>
#include <variant>

namespace robust_mdp {

/// One on-policy step (s, a, c, s', a') drawn from the centroid kernel.
struct Transition {
    std::size_t s = 0;
    std::size_t a = 0;
    double cost = 0;
    std::size_t s_next = 0;
    std::size_t a_next = 0;
};

/**
 * Simulator for a fixed policy that only samples the centroid kernel.
 *
 * The chain starts from `start` and is restarted from it every
 * `reset_period` transitions (0 never restarts). Consecutive transitions
 * chain: the next s and a are the previous s' and a' unless a restart happens.
 */
class SampleStream {
public:
    SampleStream(const TabularMdp& mdp, PolicyTable policy, Vector start, RngStream rng,
                 std::size_t reset_period = 1000);

    Transition next();

    /// Draws s' ~ p^a_s alone; used by rollouts that manage their own state.
    std::size_t step(std::size_t s, std::size_t a);
    std::size_t action(std::size_t s);

private:
    void restart();

    const TabularMdp& mdp_;
    PolicyTable policy_;
    Vector start_;
    RngStream rng_;
    std::size_t reset_period_;
    std::size_t taken_ = 0;
    std::size_t s_ = 0;
    std::size_t a_ = 0;
};

/**
 * Robbins-Monro steps alpha = scale / (1 + n)^exponent.
 *
 * n counts visits of the updated (s,a) pair when `per_pair` is set and
 * global updates otherwise.
 */
struct TdSchedule {
    double scale = 1.0;
    double exponent = 0.7;
    bool per_pair = true;

    [[nodiscard]] double alpha(std::size_t global_step, std::size_t pair_visits) const;
};

struct TdOptions {
    std::size_t steps = 200000;
    std::optional<double> sigma; ///< LSE target when set, max otherwise
    TdSchedule schedule;
    std::size_t reset_period = 1000;
    Vector start; ///< restart distribution; empty means uniform
};

/// Q(s,a) - c - gamma (1-R) q_next - gamma R v_star.
[[nodiscard]] double td_error(double q_sa, double cost, double q_next, double v_star, double gamma,
                              double radius);

/**
 * Tabular smoothed robust TD.
 *
 * Q(s,a) <- Q(s,a) + alpha (c + gamma (1-R) V(s') + gamma R m(V) - Q(s,a)),
 * V(s) = sum_a pi(a|s) Q(s,a), m = LSE(sigma, .) or max. Starts from `init`
 * (zeros when empty).
 */
[[nodiscard]] QTable robust_td_tabular(const TabularMdp& mdp, const PolicyTable& policy,
                                       const TdOptions& options, RngStream& rng,
                                       const QTable& init = QTable());

/// Q_zeta(s, .) as an MLP on one-hot states with |A| output heads.
class MlpCritic {
public:
    MlpCritic(std::size_t num_states, std::size_t num_actions, std::size_t hidden = 20);

    void randomize(RngStream& rng, double output_scale = 0.1);

    [[nodiscard]] std::size_t num_states() const noexcept { return net_.num_inputs(); }
    [[nodiscard]] std::size_t num_actions() const noexcept { return net_.num_outputs(); }
    [[nodiscard]] const Vector& params() const noexcept { return net_.params(); }
    void set_params(const Vector& params) { net_.set_params(params); }

    [[nodiscard]] Vector q(std::size_t s) const;
    [[nodiscard]] QTable table() const;
    /// Q_zeta(s,a) and its gradient with respect to zeta.
    [[nodiscard]] Mlp::ValueAndGradient forward_backward(std::size_t s, std::size_t a) const;

private:
    Mlp net_;
};

/// Tabular estimate or parametric critic.
using Critic = std::variant<QTable, MlpCritic>;

/**
 * Robust TD with a parametric critic (semi-gradient):
 *
 *   V* = max_s sum_a pi(a|s) Q(s,a)
 *   delta = Q(s,a) - c - gamma (1-R) Q(s',a') - gamma R V*
 *   zeta <- zeta - beta delta grad Q(s,a)
 *
 * Throws InstabilityError once ||zeta|| exceeds 1e6 or turns non-finite.
 */
void robust_td_fa(const TabularMdp& mdp, const PolicyTable& policy, MlpCritic& critic,
                  const TdOptions& options, RngStream& rng);

/// Per-state values sum_a pi(a|s) Q(s,a).
[[nodiscard]] Vector state_values(const PolicyTable& policy, const QTable& q);

} // namespace robust_mdp
