#include "robust_mdp/robust_dp.hpp"

#include "robust_mdp/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace robust_mdp {

namespace {

void check_shapes(const TabularMdp& mdp, const PolicyTable& policy, const ValueTable& v) {
    if (static_cast<std::size_t>(policy.rows()) != mdp.num_states() ||
        static_cast<std::size_t>(policy.cols()) != mdp.num_actions())
        throw ParameterError("policy table shape does not match the MDP");
    if (static_cast<std::size_t>(v.size()) != mdp.num_states())
        throw ParameterError("value table length does not match the MDP");
}

void check_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw ParameterError("sigma must be positive and finite, got " + std::to_string(sigma));
}

// Contamination term m(V) of the selected operator.
double contamination_term(const ValueTable& v, const EvalMode& mode) {
    switch (mode.kind) {
    case ValueKind::robust: return v.maxCoeff();
    case ValueKind::smoothed: return lse(mode.sigma, v);
    case ValueKind::nominal: return 0.0;
    }
    return 0.0;
}

double cost_shift(const TabularMdp& mdp, const EvalMode& mode) {
    if (mode.kind != ValueKind::smoothed || !mode.shift_cost) return 0.0;
    return mdp.gamma() * mdp.radius() * std::log(static_cast<double>(mdp.num_states())) /
           mode.sigma;
}

} // namespace

double effective_radius(const TabularMdp& mdp, const EvalMode& mode) {
    return mode.kind == ValueKind::nominal ? 0.0 : mdp.radius();
}

std::size_t argmax_lowest(const Vector& v) {
    if (v.size() == 0) throw ParameterError("argmax of an empty vector");
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return static_cast<std::size_t>(best);
}

double support_function(std::span<const double> p, const ValueTable& v, double radius) {
    if (p.size() != static_cast<std::size_t>(v.size()))
        throw ParameterError("support_function: distribution and value lengths differ");
    if (!(radius >= 0.0 && radius <= 1.0))
        throw ParameterError("support_function: radius must lie in [0,1]");
    double expectation = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) expectation += p[i] * v[static_cast<Eigen::Index>(i)];
    return (1.0 - radius) * expectation + radius * v.maxCoeff();
}

double lse(double sigma, const ValueTable& v) {
    check_sigma(sigma);
    if (v.size() == 0) throw ParameterError("lse of an empty vector");
    const double m = v.maxCoeff();
    const double total = (sigma * (v.array() - m)).exp().sum();
    return m + std::log(total) / sigma;
}

Vector softmax(double sigma, const ValueTable& v) {
    check_sigma(sigma);
    const Vector e = (sigma * (v.array() - v.maxCoeff())).exp().matrix();
    return e / e.sum();
}

ValueTable robust_bellman_apply(const TabularMdp& mdp, const PolicyTable& policy,
                                const ValueTable& v) {
    return bellman_apply(mdp, policy, v, EvalMode::robust());
}

ValueTable robust_bellman_apply(const TabularMdp& mdp, const PolicyHandle& policy,
                                const ValueTable& v) {
    return robust_bellman_apply(mdp, policy.table(), v);
}

ValueTable smoothed_bellman_apply(const TabularMdp& mdp, const PolicyTable& policy,
                                  const ValueTable& v, double sigma) {
    check_sigma(sigma);
    return bellman_apply(mdp, policy, v, EvalMode::smoothed(sigma));
}

ValueTable smoothed_bellman_apply(const TabularMdp& mdp, const PolicyHandle& policy,
                                  const ValueTable& v, double sigma) {
    return smoothed_bellman_apply(mdp, policy.table(), v, sigma);
}

ValueTable bellman_apply(const TabularMdp& mdp, const PolicyTable& policy, const ValueTable& v,
                         const EvalMode& mode) {
    check_shapes(mdp, policy, v);
    const QTable q = q_backup(mdp, v, mode);
    ValueTable out(v.size());
    for (Eigen::Index s = 0; s < v.size(); ++s) out[s] = policy.row(s).dot(q.row(s));
    return out;
}

QTable q_backup(const TabularMdp& mdp, const ValueTable& v, const EvalMode& mode) {
    if (mode.kind == ValueKind::smoothed) check_sigma(mode.sigma);
    const std::size_t ns = mdp.num_states();
    const std::size_t na = mdp.num_actions();
    const double radius = effective_radius(mdp, mode);
    const double gamma = mdp.gamma();
    const double tail = radius * contamination_term(v, mode);
    const double shift = cost_shift(mdp, mode);
    QTable q(ns, na);
    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t a = 0; a < na; ++a) {
            const auto row = mdp.row(s, a);
            double expectation = 0.0;
            for (std::size_t t = 0; t < ns; ++t) expectation += row[t] * v[static_cast<Eigen::Index>(t)];
            q(s, a) = mdp.cost(s, a) + shift + gamma * ((1.0 - radius) * expectation + tail);
        }
    }
    return q;
}

Matrix policy_kernel(const TabularMdp& mdp, const PolicyTable& policy) {
    const std::size_t ns = mdp.num_states();
    Matrix p = Matrix::Zero(ns, ns);
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            const double w = policy(s, a);
            if (w == 0.0) continue;
            const auto row = mdp.row(s, a);
            for (std::size_t t = 0; t < ns; ++t) p(s, t) += w * row[t];
        }
    return p;
}

ValueSolution solve_value(const TabularMdp& mdp, const PolicyTable& policy, const EvalMode& mode,
                          double tol) {
    if (!(tol > 0.0)) throw ParameterError("solve_value: tol must be positive");
    if (mode.kind == ValueKind::smoothed) check_sigma(mode.sigma);
    const std::size_t ns = mdp.num_states();
    check_shapes(mdp, policy, ValueTable::Zero(static_cast<Eigen::Index>(ns)));

    const double gamma = mdp.gamma();
    const double radius = effective_radius(mdp, mode);
    const double shift = cost_shift(mdp, mode);

    // T V = cbar + gamma (1-R) P_pi V + gamma R w m(V), with w(s) = sum_a pi(a|s).
    Vector cbar(ns);
    const Vector weight = policy.rowwise().sum();
    for (std::size_t s = 0; s < ns; ++s) {
        double c = 0.0;
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) c += policy(s, a) * (mdp.cost(s, a) + shift);
        cbar[static_cast<Eigen::Index>(s)] = c;
    }
    const Matrix transition = gamma * (1.0 - radius) * policy_kernel(mdp, policy);
    const Vector tail_weight = gamma * radius * weight;

    auto apply = [&](const Vector& v) -> Vector {
        return cbar + transition * v + tail_weight * contamination_term(v, mode);
    };

    ValueSolution out;
    Vector v = Vector::Zero(static_cast<Eigen::Index>(ns));
    const double threshold =
        gamma > 0.0 ? tol * (1.0 - gamma) / gamma : std::numeric_limits<double>::infinity();

    Vector next = apply(v);
    const double first_step = std::max(1.0, (next - v).lpNorm<Eigen::Infinity>());
    // a-priori bound: gamma^k * first_step <= threshold, plus a fixed margin.
    std::size_t cap = 1;
    if (gamma > 0.0) {
        const double k = std::log(tol * (1.0 - gamma) / first_step) / std::log(gamma);
        cap = static_cast<std::size_t>(std::ceil(std::max(k, 0.0))) + 50;
    }
    std::size_t it = 1;
    while (true) {
        const double diff = (next - v).lpNorm<Eigen::Infinity>();
        if (!std::isfinite(diff)) throw NumericError("solve_value: non-finite iterate");
        v = std::move(next);
        if (diff <= threshold) break;
        if (it >= cap)
            throw SolverError("solve_value: no convergence within " + std::to_string(cap) +
                              " iterations");
        next = apply(v);
        ++it;
    }
    out.iterations = it;
    out.q = q_backup(mdp, v, mode);
    out.v = std::move(v);
    return out;
}

ValueSolution solve_value(const TabularMdp& mdp, const PolicyHandle& policy, const EvalMode& mode,
                          double tol) {
    return solve_value(mdp, policy.table(), mode, tol);
}

Vector visitation_distribution(const TabularMdp& mdp, const PolicyTable& policy,
                               const Vector& start) {
    const auto ns = static_cast<Eigen::Index>(mdp.num_states());
    if (start.size() != ns) throw ParameterError("visitation_distribution: start length mismatch");
    const double decay = mdp.gamma() * (1.0 - mdp.radius());
    const Matrix system =
        Matrix::Identity(ns, ns) - decay * policy_kernel(mdp, policy).transpose();
    return (1.0 - decay) * system.partialPivLu().solve(start);
}

Vector visitation_distribution(const TabularMdp& mdp, const PolicyTable& policy,
                               std::size_t start_state) {
    return visitation_distribution(mdp, policy, one_hot(start_state, mdp.num_states()));
}

TabularMdp worst_case_kernel(const TabularMdp& mdp, const ValueTable& v) {
    if (static_cast<std::size_t>(v.size()) != mdp.num_states())
        throw ParameterError("worst_case_kernel: value length mismatch");
    if (!v.allFinite()) throw NumericError("worst_case_kernel: non-finite value table");
    const std::size_t worst = argmax_lowest(v);
    const double radius = mdp.radius();
    std::vector<double> kernel(mdp.kernel().size());
    const std::size_t ns = mdp.num_states();
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            const auto row = mdp.row(s, a);
            double* out = kernel.data() + (s * mdp.num_actions() + a) * ns;
            for (std::size_t t = 0; t < ns; ++t) out[t] = (1.0 - radius) * row[t];
            out[worst] += radius;
        }
    return TabularMdp(ns, mdp.num_actions(), std::move(kernel), mdp.costs(), mdp.gamma(), 0.0);
}

RobustConstants compute_constants(const ConstantInputs& in) {
    if (!(in.mu_min > 0.0)) throw ParameterError("compute_constants: mu_min must be positive");
    check_sigma(in.sigma);
    if (!(in.gamma >= 0.0 && in.gamma < 1.0))
        throw ParameterError("compute_constants: gamma must lie in [0,1)");
    if (!(in.radius >= 0.0 && in.radius <= 1.0))
        throw ParameterError("compute_constants: radius must lie in [0,1]");
    if (in.num_states == 0 || in.num_actions == 0 || in.rollouts == 0)
        throw ParameterError("compute_constants: sizes must be positive");
    if (!(in.k_pi > 0.0) || in.l_pi < 0.0 || in.eps_est < 0.0)
        throw ParameterError("compute_constants: k_pi > 0, l_pi >= 0, eps_est >= 0 required");

    const double g = in.gamma;
    const double r = in.radius;
    const double ns = static_cast<double>(in.num_states);
    const double na = static_cast<double>(in.num_actions);
    const double log_s = std::log(ns);
    const double restart = 1.0 - g + g * r;
    const double tilt = g * r / (1.0 - g);
    const double eps = in.eps_est;

    RobustConstants c;
    c.inputs = in;
    c.L_V = in.k_pi * na / ((1.0 - g) * (1.0 - g));
    c.C_PL = 1.0 / ((1.0 - g) * in.mu_min);
    c.C_sigma = (1.0 + 2.0 * g * r * log_s / in.sigma) / (1.0 - g);
    c.C_V_sigma = na * in.k_pi * c.C_sigma / (1.0 - g);
    c.k_B = (na * c.C_sigma * in.l_pi + na * in.k_pi * c.C_V_sigma) / restart +
            2.0 * na * na * g * (1.0 - r) * in.k_pi * in.k_pi * c.C_sigma / (restart * restart);
    c.L_sigma = c.k_B + tilt * (std::sqrt(ns) * c.k_B + 2.0 * in.sigma * ns * c.C_V_sigma *
                                                            in.k_pi * na * c.C_sigma / restart);
    c.b_g = 2.0 * in.sigma * eps * std::exp(in.sigma * eps) * tilt * na * (eps + c.C_sigma) / restart +
            tilt * na * eps / restart + na * eps / restart;
    c.C_g = (tilt + 1.0) * na / restart * (c.C_sigma + eps);
    c.C_Omega = c.b_g * c.b_g +
                2.0 * (c.C_g * c.C_g + c.C_V_sigma * c.C_V_sigma) / static_cast<double>(in.rollouts);
    return c;
}

double epsilon_g(const RobustConstants& c, double initial_gap, std::size_t iterations) {
    if (iterations == 0) throw ParameterError("epsilon_g: iterations must be positive");
    return 8.0 * c.L_sigma * initial_gap / static_cast<double>(iterations) +
           4.0 * c.C_V_sigma * c.b_g + 6.0 * c.C_Omega;
}

double smoothing_for_accuracy(double gamma, double radius, std::size_t num_states, double eps) {
    if (!(eps > 0.0)) throw ParameterError("smoothing_for_accuracy: eps must be positive");
    return 2.0 * gamma * radius * std::log(static_cast<double>(num_states)) / (eps * (1.0 - gamma));
}

double iterations_for_accuracy(const RobustConstants& c, double eps) {
    if (!(eps > 0.0)) throw ParameterError("iterations_for_accuracy: eps must be positive");
    return 64.0 * static_cast<double>(c.inputs.num_states) * c.C_PL * c.C_PL * c.L_sigma *
           c.C_sigma / (eps * eps);
}

} // namespace robust_mdp
