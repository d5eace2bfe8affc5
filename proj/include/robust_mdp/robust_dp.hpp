#pragma once

#include "robust_mdp/mdp.hpp"
#include "robust_mdp/policy.hpp"

#include <cstddef>
#include <span>

namespace robust_mdp {

using ValueTable = Vector; ///< V(s), length |S|
using QTable = Matrix;     ///< Q(s,a), shape |S| x |A|

enum class ValueKind { robust, smoothed, nominal };

/**
 * Which Bellman operator to use.
 *
 * robust:   worst case over the R-contamination set (max over next states).
 * smoothed: max replaced by LSE(sigma, .).
 * nominal:  the centroid kernel alone, i.e. the radius is treated as 0.
 *
 * `shift_cost` (smoothed only) adds gamma*R*log|S|/sigma to every cost so the
 * smoothed values stay nonnegative. It is off by default.
 */
struct EvalMode {
    ValueKind kind = ValueKind::robust;
    double sigma = 0.0;
    bool shift_cost = false;

    static EvalMode robust() { return {ValueKind::robust, 0.0, false}; }
    static EvalMode smoothed(double sigma, bool shift_cost = false) {
        return {ValueKind::smoothed, sigma, shift_cost};
    }
    static EvalMode nominal() { return {ValueKind::nominal, 0.0, false}; }
};

/// Radius the operator actually uses: 0 in nominal mode, mdp.radius() otherwise.
[[nodiscard]] double effective_radius(const TabularMdp& mdp, const EvalMode& mode);

/// Lowest index attaining the maximum.
[[nodiscard]] std::size_t argmax_lowest(const Vector& v);

/// max over the R-contamination set around p of q.V: (1-R) p.V + R max V.
[[nodiscard]] double support_function(std::span<const double> p, const ValueTable& v, double radius);

/// log(sum_i exp(sigma V_i)) / sigma, evaluated max-shifted. sigma must be positive.
[[nodiscard]] double lse(double sigma, const ValueTable& v);

/// exp(sigma V_i) / sum_j exp(sigma V_j), evaluated max-shifted.
[[nodiscard]] Vector softmax(double sigma, const ValueTable& v);

/// (T_pi V)(s) = sum_a pi(a|s) (c(s,a) + gamma [(1-R) p^a_s . V + R max V]).
[[nodiscard]] ValueTable robust_bellman_apply(const TabularMdp& mdp, const PolicyTable& policy,
                                              const ValueTable& v);
[[nodiscard]] ValueTable robust_bellman_apply(const TabularMdp& mdp, const PolicyHandle& policy,
                                              const ValueTable& v);

/// As robust_bellman_apply with R max V replaced by R LSE(sigma, V).
[[nodiscard]] ValueTable smoothed_bellman_apply(const TabularMdp& mdp, const PolicyTable& policy,
                                                const ValueTable& v, double sigma);
[[nodiscard]] ValueTable smoothed_bellman_apply(const TabularMdp& mdp, const PolicyHandle& policy,
                                                const ValueTable& v, double sigma);

/// One application of the operator selected by `mode`.
[[nodiscard]] ValueTable bellman_apply(const TabularMdp& mdp, const PolicyTable& policy,
                                       const ValueTable& v, const EvalMode& mode);

/// Q(s,a) = c(s,a) + gamma [(1-R) p^a_s . V + R m(V)], m = max, LSE or 0 per mode.
[[nodiscard]] QTable q_backup(const TabularMdp& mdp, const ValueTable& v, const EvalMode& mode);

struct ValueSolution {
    ValueTable v;
    QTable q;
    std::size_t iterations = 0;
};

/**
 * Fixed point of the selected operator by iteration from V = 0.
 *
 * Stops once ||V_{k+1} - V_k||_inf <= tol (1-gamma)/gamma, which bounds the
 * distance to the fixed point by tol. Q is one backup of the returned V.
 * Throws SolverError if the a-priori iteration cap is exceeded.
 *
 * The policy table is used as given; rows need not be normalized, which
 * lets finite-difference probes step off the simplex.
 */
[[nodiscard]] ValueSolution solve_value(const TabularMdp& mdp, const PolicyTable& policy,
                                        const EvalMode& mode, double tol = 1e-10);
[[nodiscard]] ValueSolution solve_value(const TabularMdp& mdp, const PolicyHandle& policy,
                                        const EvalMode& mode, double tol = 1e-10);

/// P_pi(s, s') = sum_a pi(a|s) p^a_{s,s'}.
[[nodiscard]] Matrix policy_kernel(const TabularMdp& mdp, const PolicyTable& policy);

/**
 * d(s') = (1-gamma+gamma R) sum_t gamma^t (1-R)^t P(S_t = s' | S_0 ~ start),
 * solved exactly as a linear system. Uses mdp.radius().
 */
[[nodiscard]] Vector visitation_distribution(const TabularMdp& mdp, const PolicyTable& policy,
                                             const Vector& start);
[[nodiscard]] Vector visitation_distribution(const TabularMdp& mdp, const PolicyTable& policy,
                                             std::size_t start_state);

/// Kernel (1-R) p^a_s + R e_{s*}, s* = argmax V (lowest index). Returned model has radius 0.
[[nodiscard]] TabularMdp worst_case_kernel(const TabularMdp& mdp, const ValueTable& v);

struct ConstantInputs {
    double k_pi = 1.0; ///< bound on ||grad pi(a|s)||; 1 for the direct class
    double l_pi = 0.0; ///< smoothness of pi; 0 for the direct class
    double mu_min = 0.0;
    double gamma = 0.9;
    double radius = 0.0;
    double sigma = 1.0;
    std::size_t num_states = 1;
    std::size_t num_actions = 1;
    double eps_est = 0.0;      ///< critic error bound
    std::size_t rollouts = 1;  ///< M, enters C_Omega only
};

/// Closed-form constants of the convergence analysis.
struct RobustConstants {
    ConstantInputs inputs;
    double L_V = 0;       ///< Lipschitz constant of the robust value function
    double C_PL = 0;      ///< PL coefficient
    double C_sigma = 0;   ///< bound on the smoothed Q function
    double C_V_sigma = 0; ///< bound on ||grad V_sigma||
    double k_B = 0;
    double L_sigma = 0;   ///< smoothness modulus of J_sigma
    double b_g = 0;       ///< bias bound of the actor-critic gradient estimate
    double C_g = 0;       ///< bound on a single gradient sample
    double C_Omega = 0;
};

[[nodiscard]] RobustConstants compute_constants(const ConstantInputs& in);

/// Stationarity error bound eps_G for T actor-critic iterations from an initial gap.
[[nodiscard]] double epsilon_g(const RobustConstants& c, double initial_gap, std::size_t iterations);

/// sigma = 2 gamma R log|S| / (eps (1-gamma)).
[[nodiscard]] double smoothing_for_accuracy(double gamma, double radius, std::size_t num_states,
                                            double eps);
/// T = 64 |S| C_PL^2 L_sigma C_sigma / eps^2.
[[nodiscard]] double iterations_for_accuracy(const RobustConstants& c, double eps);

} // namespace robust_mdp
