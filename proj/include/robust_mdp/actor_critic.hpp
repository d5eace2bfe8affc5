#pragma once

#include "robust_mdp/optimizers.hpp"
#include "robust_mdp/robust_td.hpp"

#include <optional>
#include <vector>

namespace robust_mdp {

/// Draw from P(T = k) = (1-gamma+gamma R)(gamma - gamma R)^k, k >= 0, by inversion.
[[nodiscard]] std::size_t sample_geometric_horizon(double gamma, double radius, RngStream& rng);

/// One trajectory of `horizon` steps and its terminal gradient term.
struct RolloutSample {
    std::size_t horizon = 0;
    std::size_t start = 0;
    std::vector<std::size_t> states;  ///< horizon + 1 entries, states.back() is terminal
    std::vector<std::size_t> actions; ///< horizon entries
    Vector term; ///< 1/(1-gamma+gamma R) sum_a grad pi(a|s_T) Q(s_T,a)
};

/// Follows the policy from `start` for `horizon` steps on the centroid kernel.
[[nodiscard]] RolloutSample sample_rollout(const TabularMdp& mdp, const PolicyHandle& policy,
                                           const QTable& q, std::size_t start, std::size_t horizon,
                                           RngStream& rng);

/// How the second rollout picks its start state x_0.
enum class StartRule {
    argmax,  ///< argmax_s V_t(s), lowest index on ties
    softmax, ///< x_0 ~ softmax(sigma, V_t)
};

struct GradientSampleSet {
    Vector mean;           ///< g_t
    Vector standard_error; ///< per-coordinate sample standard deviation / sqrt(M)
    double max_sample_norm = 0; ///< max_j ||g^j||
    std::size_t count = 0;
};

/**
 * g_t = (1/M) sum_j [B^j + gamma R/(1-gamma) D^j].
 *
 * Rollout j uses substream rng.split(j); its horizon is shared by the B and
 * D trajectories. B starts from `measure`, D from the start rule applied to
 * V_t = sum_a pi Q. The D trajectory is skipped when R = 0.
 */
[[nodiscard]] GradientSampleSet estimate_gradient(const TabularMdp& mdp, const PolicyHandle& policy,
                                                  const QTable& q, const Vector& measure,
                                                  StartRule rule, double sigma, std::size_t rollouts,
                                                  const RngStream& rng);

/**
 * Exact expectation of estimate_gradient for a fixed critic Q:
 * weighted_policy_gradient with state weights (d_measure + gamma R/(1-gamma) d_x0)/(1-gamma+gamma R),
 * where x0 follows the start rule. Used to measure critic-induced bias.
 */
[[nodiscard]] Vector expected_gradient(const TabularMdp& mdp, const PolicyHandle& policy,
                                       const QTable& q, const Vector& measure, StartRule rule,
                                       double sigma);

enum class CriticKind {
    tabular, ///< tabular robust TD (max, or LSE when smoothed)
    mlp,     ///< robust TD with an MLP critic
    exact,   ///< Q from solve_value; test mode
};

struct AcConfig {
    std::size_t iterations = 300;    ///< T
    std::size_t critic_steps = 20000; ///< T_c per outer iteration
    std::size_t rollouts = 64;       ///< M
    std::optional<double> sigma;     ///< required by the smoothed variant
    StepSchedule actor_schedule = StepSchedule::half_over_l();
    std::uint64_t seed = 0;
    CriticKind critic = CriticKind::tabular;
    TdSchedule critic_schedule;
    std::size_t critic_hidden = 20;
    std::size_t reset_period = 1000;
    bool warm_start = true; ///< keep the critic between outer iterations
    /// Test mode: extend each critic run in T_c chunks until ||Q - Q*||_inf <= eps_est
    /// (checked with solve_value), at most `max_critic_rounds` chunks.
    std::optional<double> eps_est;
    std::size_t max_critic_rounds = 50;
    std::size_t snapshot_period = 0;
    double tol = 1e-10;
    bool record_metrics = true;
};

/// Robust actor-critic with an argmax start for the D rollouts; any policy class.
[[nodiscard]] TrainTrace run_robust_ac(const TabularMdp& mdp, PolicyHandle policy,
                                       const ObjectiveSpec& spec, const AcConfig& config);

/// Tabular smoothed variant: softmax(sigma, V_t) start and an LSE critic. Requires config.sigma.
[[nodiscard]] TrainTrace run_smoothed_ac_tabular(const TabularMdp& mdp, DirectPolicy policy,
                                                 const ObjectiveSpec& spec, const AcConfig& config);

/// Non-robust actor-critic: the same loop on the centroid model (R = 0); metrics use the true radius.
[[nodiscard]] TrainTrace run_nominal_ac(const TabularMdp& mdp, PolicyHandle policy,
                                        const ObjectiveSpec& spec, const AcConfig& config);

/// b_g for the given critic error and sigma; the other inputs come from `constants.inputs`.
[[nodiscard]] double estimator_bias_bound(const RobustConstants& constants, double eps_est, double sigma);

} // namespace robust_mdp
