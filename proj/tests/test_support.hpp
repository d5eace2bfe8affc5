#pragma once

#include "robust_mdp/mdp.hpp"
#include "robust_mdp/policy.hpp"
#include "robust_mdp/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace testing_support {

using robust_mdp::Matrix;
using robust_mdp::TabularMdp;
using robust_mdp::Vector;

/// Garnet kernel with uniformly random costs in [0,1].
inline TabularMdp random_mdp(std::size_t ns, std::size_t na, std::uint64_t seed, double gamma,
                             double radius) {
    const TabularMdp base = robust_mdp::garnet_generate(ns, na, ns, seed, gamma, radius);
    robust_mdp::RngStream rng(seed ^ 0xabcdefULL);
    std::vector<double> cost(ns * na);
    for (double& c : cost) c = rng.uniform();
    return {ns, na, base.kernel(), cost, gamma, radius};
}

/// Single-state MDP with the given per-action costs.
inline TabularMdp single_state(std::vector<double> cost, double gamma, double radius) {
    const std::size_t na = cost.size();
    return {1, na, std::vector<double>(na, 1.0), std::move(cost), gamma, radius};
}

inline Matrix kernel_under(const TabularMdp& mdp, const Matrix& pi) {
    const auto ns = static_cast<Eigen::Index>(mdp.num_states());
    Matrix p = Matrix::Zero(ns, ns);
    for (Eigen::Index s = 0; s < ns; ++s)
        for (Eigen::Index a = 0; a < pi.cols(); ++a)
            for (Eigen::Index t = 0; t < ns; ++t)
                p(s, t) += pi(s, a) * mdp.p(s, a, t);
    return p;
}

inline Vector mean_cost(const TabularMdp& mdp, const Matrix& pi) {
    Vector c = Vector::Zero(pi.rows());
    for (Eigen::Index s = 0; s < pi.rows(); ++s)
        for (Eigen::Index a = 0; a < pi.cols(); ++a) c[s] += pi(s, a) * mdp.cost(s, a);
    return c;
}

/// Nominal evaluation (I - gamma P_pi)^{-1} c_pi by a dense solve.
inline Vector linear_policy_value(const TabularMdp& mdp, const Matrix& pi) {
    const auto n = pi.rows();
    const Matrix a = Matrix::Identity(n, n) - mdp.gamma() * kernel_under(mdp, pi);
    return a.fullPivLu().solve(mean_cost(mdp, pi));
}

/**
 * Robust evaluation by case analysis: guess the argmax state k, solve the
 * linear system V = c + gamma (1-R) P V + gamma R V(k) 1, keep the solution
 * whose maximum is attained at k.
 */
inline Vector case_analysis_robust_value(const TabularMdp& mdp, const Matrix& pi) {
    const auto n = pi.rows();
    const double g = mdp.gamma();
    const double r = mdp.radius();
    const Matrix p = kernel_under(mdp, pi);
    const Vector c = mean_cost(mdp, pi);
    Vector best;
    for (Eigen::Index k = 0; k < n; ++k) {
        Matrix a = Matrix::Identity(n, n) - g * (1.0 - r) * p;
        a.col(k).array() -= g * r;
        const Vector v = a.fullPivLu().solve(c);
        if (v.maxCoeff() <= v[k] + 1e-12) return v;
    }
    return Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
}

/// Truncated series (1-g+gR) sum_t (g(1-R))^t (P^T)^t start.
inline Vector series_visitation(const TabularMdp& mdp, const Matrix& pi, const Vector& start) {
    const double decay = mdp.gamma() * (1.0 - mdp.radius());
    const Matrix pt = kernel_under(mdp, pi).transpose();
    Vector term = start;
    Vector sum = Vector::Zero(start.size());
    double weight = 1.0;
    while (weight > 1e-16) {
        sum += weight * term;
        term = pt * term;
        weight *= decay;
        if (decay == 0.0) break;
    }
    return (1.0 - mdp.gamma() + mdp.gamma() * mdp.radius()) * sum;
}

inline double relative_error(const Vector& a, const Vector& b) {
    const double scale = std::max(b.norm(), 1e-12);
    return (a - b).norm() / scale;
}

} // namespace testing_support
