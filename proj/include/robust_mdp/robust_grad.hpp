#pragma once

#include "robust_mdp/mdp.hpp"
#include "robust_mdp/policy.hpp"
#include "robust_mdp/robust_dp.hpp"

#include <functional>

namespace robust_mdp {

/// Performance measure rho (what is reported) and optimization measure mu
/// (what the gradient is taken against). mu must have full support.
class ObjectiveSpec {
public:
    ObjectiveSpec(Vector rho, Vector mu);
    static ObjectiveSpec uniform(std::size_t num_states);

    [[nodiscard]] const Vector& rho() const noexcept { return rho_; }
    [[nodiscard]] const Vector& mu() const noexcept { return mu_; }
    [[nodiscard]] double mu_min() const noexcept { return mu_.minCoeff(); }

private:
    Vector rho_;
    Vector mu_;
};

enum class GradientKind { sub_gradient, smoothed, monte_carlo };

struct GradientEstimate {
    Vector vector;
    GradientKind kind = GradientKind::sub_gradient;
};

/// sum_s rho(s) V(s) under the selected operator.
[[nodiscard]] double objective(const TabularMdp& mdp, const PolicyTable& policy,
                               const Vector& rho, const EvalMode& mode, double tol = 1e-10);
[[nodiscard]] double objective(const TabularMdp& mdp, const PolicyHandle& policy,
                               const Vector& rho, const EvalMode& mode, double tol = 1e-10);

/**
 * sum_s weight(s) sum_a grad pi(a|s) Q(s,a).
 *
 * Every exact and Monte-Carlo gradient in the library reduces to this with a
 * suitable state weighting.
 */
[[nodiscard]] Vector weighted_policy_gradient(const PolicyHandle& policy, const Vector& weight,
                                              const QTable& q);

/**
 * Robust policy sub-gradient psi(theta) with respect to the measure `measure`:
 *
 *   gamma R / ((1-gamma)(1-gamma+gamma R)) sum_s d_{s_theta}(s) sum_a grad pi(a|s) Q(s,a)
 *   + 1/(1-gamma+gamma R) sum_s d_measure(s) sum_a grad pi(a|s) Q(s,a)
 *
 * with Q the robust action value and s_theta the (lowest-index) argmax of V.
 * With R = 0 this is the vanilla policy gradient.
 */
[[nodiscard]] GradientEstimate psi_subgradient(const TabularMdp& mdp, const PolicyHandle& policy,
                                               const Vector& measure, double tol = 1e-10);

/**
 * Gradient of J_sigma(theta) = sum_s measure(s) V_sigma(s):
 *
 *   B(measure) + gamma R/(1-gamma) * sum_s w(s) B(s),  w = softmax(sigma, V_sigma)
 *
 * with B(s) = 1/(1-gamma+gamma R) sum_s' d_s(s') sum_a grad pi(a|s') Q_sigma(s',a).
 */
[[nodiscard]] GradientEstimate grad_j_sigma(const TabularMdp& mdp, const PolicyHandle& policy,
                                            const Vector& measure, double sigma,
                                            double tol = 1e-10);

/// The first-order direction for `mode`: psi (robust), grad J_sigma (smoothed),
/// or the vanilla policy gradient (nominal).
[[nodiscard]] GradientEstimate mode_gradient(const TabularMdp& mdp, const PolicyHandle& policy,
                                             const Vector& measure, const EvalMode& mode,
                                             double tol = 1e-10);

struct PlResidual {
    double lhs = 0.0; ///< J(theta) - J*
    double rhs = 0.0; ///< C_PL max_pihat <pi_theta - pihat, grad_mu> (+ slack when smoothed)
};

/**
 * Both sides of the PL inequality under direct parameterization.
 *
 * `j_star` is the optimum of the same objective (robust, smoothed or
 * nominal) with respect to spec.rho(). Throws UnsupportedError for non-direct policies.
 */
[[nodiscard]] PlResidual pl_residual(const TabularMdp& mdp, const PolicyHandle& policy,
                                     const ObjectiveSpec& spec, double j_star,
                                     const EvalMode& mode, double tol = 1e-10);

/// max over product-of-simplices pihat of <pi - pihat, g> for a direct policy table.
[[nodiscard]] double max_linear_gap(const PolicyTable& pi, const Vector& grad);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
[[nodiscard]] Vector finite_diff_gradient(const std::function<double(const Vector&)>& f,
                                          const Vector& theta, double h);

} // namespace robust_mdp
