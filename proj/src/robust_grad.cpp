#include "robust_mdp/robust_grad.hpp"

#include "robust_mdp/errors.hpp"

#include <cmath>

namespace robust_mdp {

ObjectiveSpec::ObjectiveSpec(Vector rho, Vector mu) : rho_(std::move(rho)), mu_(std::move(mu)) {
    if (rho_.size() != mu_.size()) throw ParameterError("ObjectiveSpec: rho and mu lengths differ");
    if (!is_distribution(rho_)) throw ParameterError("ObjectiveSpec: rho is not a distribution");
    if (!is_distribution(mu_)) throw ParameterError("ObjectiveSpec: mu is not a distribution");
    if (!(mu_.minCoeff() > 0.0)) throw ParameterError("ObjectiveSpec: mu must have full support");
}

ObjectiveSpec ObjectiveSpec::uniform(std::size_t num_states) {
    const Vector u = Vector::Constant(static_cast<Eigen::Index>(num_states),
                                      1.0 / static_cast<double>(num_states));
    return {u, u};
}

double objective(const TabularMdp& mdp, const PolicyTable& policy, const Vector& rho,
                 const EvalMode& mode, double tol) {
    if (static_cast<std::size_t>(rho.size()) != mdp.num_states())
        throw ParameterError("objective: measure length mismatch");
    return rho.dot(solve_value(mdp, policy, mode, tol).v);
}

double objective(const TabularMdp& mdp, const PolicyHandle& policy, const Vector& rho,
                 const EvalMode& mode, double tol) {
    return objective(mdp, policy.table(), rho, mode, tol);
}

Vector weighted_policy_gradient(const PolicyHandle& policy, const Vector& weight, const QTable& q) {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(policy.num_params()));
    for (Eigen::Index s = 0; s < weight.size(); ++s) {
        if (weight[s] == 0.0) continue;
        policy.accumulate_weighted_grad(static_cast<std::size_t>(s), q.row(s).transpose(),
                                        weight[s], out);
    }
    return out;
}

namespace {

// Shared tail of psi and grad J_sigma: the two terms differ only in the
// value function used and in the start distribution of the second term.
Vector two_term_gradient(const TabularMdp& mdp, const PolicyHandle& policy, const Vector& measure,
                         const Vector& second_start, const QTable& q) {
    const PolicyTable table = policy.table();
    const double gamma = mdp.gamma();
    const double radius = mdp.radius();
    const double restart = 1.0 - gamma + gamma * radius;
    const Vector d_measure = visitation_distribution(mdp, table, measure);
    Vector weight = d_measure / restart;
    if (radius > 0.0) {
        const Vector d_second = visitation_distribution(mdp, table, second_start);
        weight += gamma * radius / ((1.0 - gamma) * restart) * d_second;
    }
    return weighted_policy_gradient(policy, weight, q);
}

void check_measure(const TabularMdp& mdp, const Vector& measure) {
    if (static_cast<std::size_t>(measure.size()) != mdp.num_states() || !is_distribution(measure, 1e-9))
        throw ParameterError("gradient: measure must be a distribution over the states");
}

} // namespace

GradientEstimate psi_subgradient(const TabularMdp& mdp, const PolicyHandle& policy,
                                 const Vector& measure, double tol) {
    check_measure(mdp, measure);
    const ValueSolution sol = solve_value(mdp, policy, EvalMode::robust(), tol);
    const Vector worst = one_hot(argmax_lowest(sol.v), mdp.num_states());
    return {two_term_gradient(mdp, policy, measure, worst, sol.q), GradientKind::sub_gradient};
}

GradientEstimate grad_j_sigma(const TabularMdp& mdp, const PolicyHandle& policy,
                              const Vector& measure, double sigma, double tol) {
    check_measure(mdp, measure);
    const ValueSolution sol = solve_value(mdp, policy, EvalMode::smoothed(sigma), tol);
    const Vector weights = softmax(sigma, sol.v);
    return {two_term_gradient(mdp, policy, measure, weights, sol.q), GradientKind::smoothed};
}

GradientEstimate mode_gradient(const TabularMdp& mdp, const PolicyHandle& policy,
                               const Vector& measure, const EvalMode& mode, double tol) {
    switch (mode.kind) {
    case ValueKind::robust: return psi_subgradient(mdp, policy, measure, tol);
    case ValueKind::smoothed: return grad_j_sigma(mdp, policy, measure, mode.sigma, tol);
    case ValueKind::nominal:
        return psi_subgradient(mdp.with_parameters(mdp.gamma(), 0.0), policy, measure, tol);
    }
    throw ParameterError("mode_gradient: unknown mode");
}

double max_linear_gap(const PolicyTable& pi, const Vector& grad) {
    const auto ns = pi.rows();
    const auto na = pi.cols();
    if (grad.size() != ns * na) throw ParameterError("max_linear_gap: size mismatch");
    double gap = 0.0;
    for (Eigen::Index s = 0; s < ns; ++s) {
        const auto row = grad.segment(s * na, na);
        // The inner minimum over a simplex sits at a vertex.
        gap += pi.row(s).dot(row.transpose()) - row.minCoeff();
    }
    return gap;
}

PlResidual pl_residual(const TabularMdp& mdp, const PolicyHandle& policy, const ObjectiveSpec& spec,
                       double j_star, const EvalMode& mode, double tol) {
    const DirectPolicy& direct = policy.direct();
    if (static_cast<std::size_t>(spec.rho().size()) != mdp.num_states())
        throw ParameterError("pl_residual: measure length mismatch");
    const double c_pl = 1.0 / ((1.0 - mdp.gamma()) * spec.mu_min());
    const GradientEstimate grad = mode_gradient(mdp, policy, spec.mu(), mode, tol);

    PlResidual out;
    out.lhs = objective(mdp, direct.table(), spec.rho(), mode, tol) - j_star;
    out.rhs = c_pl * max_linear_gap(direct.table(), grad.vector);
    if (mode.kind == ValueKind::smoothed) {
        out.rhs += mdp.gamma() * mdp.radius() / (1.0 - mdp.gamma()) * 2.0 *
                   std::log(static_cast<double>(mdp.num_states())) / mode.sigma;
    }
    return out;
}

Vector finite_diff_gradient(const std::function<double(const Vector&)>& f, const Vector& theta,
                            double h) {
    if (!(h > 0.0)) throw ParameterError("finite_diff_gradient: h must be positive");
    Vector grad(theta.size());
    Vector probe = theta;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        probe[i] = theta[i] + h;
        const double up = f(probe);
        probe[i] = theta[i] - h;
        const double down = f(probe);
        probe[i] = theta[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

} // namespace robust_mdp
