#include "robust_mdp/errors.hpp"
#include "robust_mdp/robust_grad.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace robust_mdp;
using testing_support::random_mdp;
using testing_support::relative_error;

namespace {

DirectPolicy random_direct(std::size_t ns, std::size_t na, std::uint64_t seed) {
    RngStream rng(seed);
    return DirectPolicy::random_interior(ns, na, rng);
}

std::function<double(const Vector&)> objective_of_table(const TabularMdp& mdp, const Vector& rho,
                                                        EvalMode mode) {
    const std::size_t ns = mdp.num_states(), na = mdp.num_actions();
    return [=](const Vector& theta) {
        return objective(mdp, unflatten(theta, ns, na), rho, mode, 1e-13);
    };
}

/// (1/(1-g)) sum_s d(s) sum_a grad pi(a|s) Q(s,a) with everything from dense solves.
Vector vanilla_gradient_oracle(const TabularMdp& mdp, const Matrix& pi, const Vector& rho) {
    const auto ns = pi.rows(), na = pi.cols();
    const Vector v = testing_support::linear_policy_value(mdp, pi);
    const Matrix p = testing_support::kernel_under(mdp, pi);
    const Vector d = (1 - mdp.gamma()) *
                     (Matrix::Identity(ns, ns) - mdp.gamma() * p.transpose()).fullPivLu().solve(rho);
    Vector g(ns * na);
    for (Eigen::Index s = 0; s < ns; ++s)
        for (Eigen::Index a = 0; a < na; ++a) {
            double q = mdp.cost(s, a);
            for (Eigen::Index t = 0; t < ns; ++t) q += mdp.gamma() * mdp.p(s, a, t) * v[t];
            g[s * na + a] = d[s] * q / (1 - mdp.gamma());
        }
    return g;
}

/// Exhaustive minimum of sum_s rho(s) V(s) over deterministic policies.
double brute_force_j_star(const TabularMdp& mdp, const Vector& rho, const EvalMode& mode) {
    const std::size_t ns = mdp.num_states(), na = mdp.num_actions();
    std::size_t count = 1;
    for (std::size_t s = 0; s < ns; ++s) count *= na;
    double best = 1e300;
    for (std::size_t k = 0; k < count; ++k) {
        Matrix pi = Matrix::Zero(ns, na);
        std::size_t code = k;
        for (std::size_t s = 0; s < ns; ++s, code /= na) pi(s, code % na) = 1.0;
        best = std::min(best, objective(mdp, pi, rho, mode, 1e-12));
    }
    return best;
}

} // namespace

TEST(Objective, Examples) {
    const TabularMdp one = testing_support::single_state({0.5, 0.5}, 0.9, 0.3);
    EXPECT_NEAR(objective(one, Matrix{{0.4, 0.6}}, Vector{{1.0}}, EvalMode::robust(), 1e-12), 5.0, 1e-11);

    // Two absorbing states with costs chosen so that V = [1, 3] at gamma = 0.5.
    const TabularMdp two(2, 1, {1, 0, 0, 1}, {0.5, 1.0}, 0.5, 0.0);
    const Matrix pi = Matrix::Ones(2, 1);
    EXPECT_NEAR(objective(two, pi, Vector{{0.5, 0.5}}, EvalMode::robust(), 1e-13), 1.5, 1e-12);
    EXPECT_NEAR(objective(two, pi, Vector{{0.0, 1.0}}, EvalMode::robust(), 1e-13), 2.0, 1e-12);
    const TabularMdp two_b(2, 1, {1, 0, 0, 1}, {0.5, 1.0}, 0.75, 0.0);
    EXPECT_NEAR(objective(two_b, pi, Vector{{0.5, 0.5}}, EvalMode::robust(), 1e-13), 3.0, 1e-11);
}

TEST(ObjectiveSpec, Validation) {
    EXPECT_NO_THROW(ObjectiveSpec::uniform(4));
    EXPECT_THROW(ObjectiveSpec(Vector{{0.5, 0.5}}, Vector{{1.0, 0.0}}), ParameterError);
    EXPECT_THROW(ObjectiveSpec(Vector{{0.6, 0.5}}, Vector{{0.5, 0.5}}), ParameterError);
    EXPECT_THROW(ObjectiveSpec(Vector{{1.0}}, Vector{{0.5, 0.5}}), ParameterError);
}

TEST(PsiSubgradient, ZeroRadiusIsVanillaGradient) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const TabularMdp mdp = random_mdp(4, 3, seed, 0.9, 0.0);
        const DirectPolicy pi = random_direct(4, 3, seed + 10);
        const Vector rho = Vector::Constant(4, 0.25);
        const Vector psi = psi_subgradient(mdp, pi, rho, 1e-12).vector;
        EXPECT_LE(relative_error(psi, vanilla_gradient_oracle(mdp, pi.table(), rho)), 1e-9);
        EXPECT_EQ(mode_gradient(mdp.with_parameters(0.9, 0.4), pi, rho, EvalMode::nominal()).vector,
                  psi_subgradient(mdp, pi, rho).vector);
    }
}

TEST(PsiSubgradient, DirectEntriesNonnegative) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const TabularMdp mdp = random_mdp(5, 3, seed, 0.9, 0.2);
        const Vector psi =
            psi_subgradient(mdp, random_direct(5, 3, seed), Vector::Constant(5, 0.2)).vector;
        EXPECT_GE(psi.minCoeff(), 0.0);
    }
}

TEST(PsiSubgradient, MatchesFiniteDifferencesAwayFromKinks) {
    RngStream pick(99);
    int checked = 0;
    for (std::uint64_t seed = 0; checked < 10 && seed < 40; ++seed) {
        const TabularMdp mdp = random_mdp(3, 2, seed, 0.9, 0.1 + 0.2 * pick.uniform());
        const DirectPolicy pi = random_direct(3, 2, seed + 1000);
        const Vector rho = Vector::Constant(3, 1.0 / 3.0);
        const auto f = objective_of_table(mdp, rho, EvalMode::robust());
        const Vector theta = pi.parameters();
        const double h = 1e-6;
        // One-sided differences disagree at points where the argmax state switches.
        bool kink = false;
        const double f0 = f(theta);
        for (Eigen::Index i = 0; i < theta.size() && !kink; ++i) {
            Vector t = theta;
            t[i] += h;
            const double fwd = (f(t) - f0) / h;
            t[i] = theta[i] - h;
            const double bwd = (f0 - f(t)) / h;
            kink = std::abs(fwd - bwd) > 1e-3 * std::max(1.0, std::abs(fwd));
        }
        if (kink) continue;
        const Vector fd = finite_diff_gradient(f, theta, h);
        EXPECT_LE(relative_error(psi_subgradient(mdp, pi, rho, 1e-13).vector, fd), 1e-4);
        ++checked;
    }
    EXPECT_EQ(checked, 10);
}

TEST(PsiSubgradient, MlpPolicyMatchesFiniteDifferences) {
    const TabularMdp mdp = random_mdp(3, 2, 4, 0.8, 0.2);
    RngStream rng(6);
    MlpPolicy mlp(3, 2, 5);
    mlp.randomize(rng, 1.0);
    PolicyHandle h(mlp);
    const Vector rho{{0.2, 0.5, 0.3}};
    const Vector theta = h.parameters();
    const auto f = [&](const Vector& x) {
        PolicyHandle probe = h;
        probe.set_parameters(x);
        return objective(mdp, probe, rho, EvalMode::robust(), 1e-13);
    };
    EXPECT_LE(relative_error(psi_subgradient(mdp, h, rho, 1e-13).vector,
                             finite_diff_gradient(f, theta, 1e-6)),
              1e-4);
}

TEST(GradJSigma, ZeroRadiusIgnoresSigma) {
    const TabularMdp mdp = random_mdp(4, 2, 3, 0.9, 0.0);
    const DirectPolicy pi = random_direct(4, 2, 4);
    const Vector rho = Vector::Constant(4, 0.25);
    const Vector oracle = vanilla_gradient_oracle(mdp, pi.table(), rho);
    for (double sigma : {0.5, 10.0, 1000.0})
        EXPECT_LE(relative_error(grad_j_sigma(mdp, pi, rho, sigma, 1e-12).vector, oracle), 1e-9);
}

TEST(GradJSigma, SingleStateClosedForm) {
    const TabularMdp mdp = testing_support::single_state({0.2, 0.9, 0.5}, 0.8, 0.4);
    const DirectPolicy pi(Matrix{{0.2, 0.3, 0.5}});
    const Vector g = grad_j_sigma(mdp, pi, Vector{{1.0}}, 3.0, 1e-13).vector;
    // On raw table entries J = sum theta c / (1 - gamma sum theta), so
    // dJ/dtheta_a = c_a / (1-gamma) + gamma J / (1-gamma) on the simplex.
    const Vector c{{0.2, 0.9, 0.5}};
    const double j = (0.2 * 0.2 + 0.3 * 0.9 + 0.5 * 0.5) / 0.2;
    for (Eigen::Index a = 0; a < 3; ++a) EXPECT_NEAR(g[a], c[a] / 0.2 + 0.8 * j / 0.2, 1e-10);
    // Along the simplex only the centred part matters, which is c / (1-gamma) centred.
    const Vector tangent = g.array() - g.mean();
    const Vector expected = (c / 0.2).array() - (c / 0.2).mean();
    EXPECT_LE((tangent - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GradJSigma, MatchesFiniteDifferences) {
    RngStream rng(77);
    const double sigmas[] = {1.0, 10.0, 100.0};
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t ns = 2 + rng.index(4), na = 2 + rng.index(2);
        const double sigma = sigmas[trial % 3];
        const TabularMdp mdp = random_mdp(ns, na, 300 + trial, 0.9, 0.3 * rng.uniform());
        const DirectPolicy pi = random_direct(ns, na, 400 + trial);
        const Vector rho = Vector::Constant(ns, 1.0 / ns);
        const auto f = objective_of_table(mdp, rho, EvalMode::smoothed(sigma));
        const Vector fd = finite_diff_gradient(f, pi.parameters(), 1e-6);
        EXPECT_LE(relative_error(grad_j_sigma(mdp, pi, rho, sigma, 1e-13).vector, fd), 1e-5)
            << "trial " << trial;
    }
}

TEST(GradJSigma, NormAndSmoothnessWithinConstants) {
    RngStream rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const double sigma = std::pow(10.0, rng.index(3));
        const double radius = 0.3 * rng.uniform();
        const TabularMdp mdp = random_mdp(4, 3, 50 + trial, 0.9, radius);
        const Vector rho = Vector::Constant(4, 0.25);
        ConstantInputs in;
        in.gamma = 0.9;
        in.radius = radius;
        in.sigma = sigma;
        in.num_states = 4;
        in.num_actions = 3;
        in.mu_min = 0.25;
        const RobustConstants c = compute_constants(in);
        const DirectPolicy a = random_direct(4, 3, 600 + trial), b = random_direct(4, 3, 700 + trial);
        const Vector ga = grad_j_sigma(mdp, a, rho, sigma).vector;
        const Vector gb = grad_j_sigma(mdp, b, rho, sigma).vector;
        EXPECT_LE(ga.norm(), c.C_V_sigma);
        EXPECT_LE((ga - gb).norm(), c.L_sigma * (a.parameters() - b.parameters()).norm());
    }
}

TEST(GradJSigma, ObjectiveApproximation) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const TabularMdp mdp = random_mdp(5, 2, seed, 0.9, 0.25);
        const DirectPolicy pi = random_direct(5, 2, seed + 8);
        const Vector rho = Vector::Constant(5, 0.2);
        for (double sigma : {1.0, 10.0, 100.0}) {
            const double gap = objective(mdp, pi.table(), rho, EvalMode::smoothed(sigma), 1e-12) -
                               objective(mdp, pi.table(), rho, EvalMode::robust(), 1e-12);
            EXPECT_LE(std::abs(gap), 0.9 * 0.25 / 0.1 * std::log(5.0) / sigma + 1e-10);
        }
    }
}

TEST(PlResidual, HoldsAtRandomPolicies) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const TabularMdp mdp = garnet_generate(5, 3, 5, seed, 0.9, 0.15);
        const ObjectiveSpec spec = ObjectiveSpec::uniform(5);
        const double j_star = brute_force_j_star(mdp, spec.rho(), EvalMode::robust());
        for (std::uint64_t k = 0; k < 50; ++k) {
            const PlResidual r =
                pl_residual(mdp, random_direct(5, 3, 1000 * seed + k), spec, j_star, EvalMode::robust());
            EXPECT_GE(r.lhs, -1e-9);
            EXPECT_LE(r.lhs, r.rhs);
        }
    }
}

TEST(PlResidual, SmoothedVariantHolds) {
    const TabularMdp mdp = random_mdp(4, 3, 12, 0.9, 0.2);
    const ObjectiveSpec spec = ObjectiveSpec::uniform(4);
    for (double sigma : {1.0, 10.0}) {
        const EvalMode mode = EvalMode::smoothed(sigma);
        const double j_star = brute_force_j_star(mdp, spec.rho(), mode);
        for (std::uint64_t k = 0; k < 30; ++k) {
            const PlResidual r = pl_residual(mdp, random_direct(4, 3, 77 + k), spec, j_star, mode);
            EXPECT_LE(r.lhs, r.rhs);
        }
    }
}

TEST(PlResidual, OptimumAndSymmetricCosts) {
    // Action 0 is free everywhere, so the deterministic all-zero policy is optimal.
    const TabularMdp base = garnet_generate(3, 2, 3, 4, 0.9, 0.2);
    std::vector<double> cost = {0, 1, 0, 1, 0, 1};
    const TabularMdp mdp(3, 2, base.kernel(), cost, 0.9, 0.2);
    const ObjectiveSpec spec = ObjectiveSpec::uniform(3);
    const std::size_t zeros[] = {0, 0, 0};
    const PlResidual at_opt = pl_residual(mdp, DirectPolicy::deterministic(zeros, 2), spec,
                                          brute_force_j_star(mdp, spec.rho(), EvalMode::robust()),
                                          EvalMode::robust());
    EXPECT_NEAR(at_opt.lhs, 0.0, 1e-12);
    EXPECT_GE(at_opt.rhs, 0.0);

    const TabularMdp flat(3, 2, base.kernel(), std::vector<double>(6, 0.4), 0.9, 0.2);
    const double j_star = brute_force_j_star(flat, spec.rho(), EvalMode::robust());
    EXPECT_NEAR(pl_residual(flat, DirectPolicy::uniform(3, 2), spec, j_star, EvalMode::robust()).lhs,
                0.0, 1e-9);
    EXPECT_THROW((void)pl_residual(flat, MlpPolicy(3, 2), spec, j_star, EvalMode::robust()),
                 UnsupportedError);
}

TEST(MaxLinearGap, PerStateVertex) {
    const Matrix pi{{0.5, 0.5}, {1.0, 0.0}};
    const Vector g{{1.0, 3.0, 2.0, -1.0}};
    EXPECT_NEAR(max_linear_gap(pi, g), (2.0 - 1.0) + (2.0 - -1.0), 1e-15);
}

TEST(FiniteDiff, Examples) {
    const auto quad = [](const Vector& x) { return x.squaredNorm(); };
    const Vector g = finite_diff_gradient(quad, Vector{{1.0, 2.0}}, 1e-5);
    EXPECT_NEAR(g[0], 2.0, 1e-8);
    EXPECT_NEAR(g[1], 4.0, 1e-8);
    const auto lin = [](const Vector& x) { return 3.0 * x[0] - 0.5 * x[1]; };
    for (double h : {1e-3, 0.5, 2.0}) {
        const Vector gl = finite_diff_gradient(lin, Vector{{0.3, -2.0}}, h);
        EXPECT_NEAR(gl[0], 3.0, 1e-12);
        EXPECT_NEAR(gl[1], -0.5, 1e-12);
    }
    EXPECT_THROW((void)finite_diff_gradient(lin, Vector{{0.0}}, 0.0), ParameterError);
}
