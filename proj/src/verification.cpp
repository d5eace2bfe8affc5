#include "robust_mdp/verification.hpp"

#include "robust_mdp/actor_critic.hpp"
#include "robust_mdp/optimizers.hpp"
#include "robust_mdp/robust_dp.hpp"
#include "robust_mdp/robust_grad.hpp"
#include "robust_mdp/robust_td.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace robust_mdp {

namespace {

// Garnet kernel with uniform random costs; gives instances with nontrivial optima.
TabularMdp random_cost_mdp(std::size_t ns, std::size_t na, std::uint64_t seed, double gamma, double radius) {
    const TabularMdp base = garnet_generate(ns, na, ns, seed, gamma, radius);
    RngStream rng = RngStream(seed).split(0x5eed);
    std::vector<double> cost(ns * na);
    for (double& c : cost) c = rng.uniform();
    return {ns, na, base.kernel(), std::move(cost), gamma, radius};
}

Vector uniform_measure(std::size_t n) {
    return Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
}

double relative_l2(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

struct Outcome {
    bool passed;
    std::string detail;
};

Outcome gradient_fd(SuiteScale scale) {
    const std::size_t instances = scale == SuiteScale::full ? 20 : 4;
    double worst = 0.0;
    std::size_t checks = 0;
    for (std::size_t i = 0; i < instances; ++i) {
        const std::size_t ns = 2 + i % 4, na = 2 + i % 2;
        for (double radius : {0.0, 0.1, 0.3}) {
            const TabularMdp mdp = random_cost_mdp(ns, na, 100 + i, 0.9, radius);
            const Vector rho = uniform_measure(ns);
            for (double sigma : {1.0, 10.0, 100.0}) {
                RngStream rng = RngStream(i).split(static_cast<std::uint64_t>(radius * 10 + sigma));
                const DirectPolicy pi = DirectPolicy::random_interior(ns, na, rng);
                const Vector g = grad_j_sigma(mdp, pi, rho, sigma, 1e-13).vector;
                const Vector fd = finite_diff_gradient(
                    [&](const Vector& x) {
                        return objective(mdp, unflatten(x, ns, na), rho, EvalMode::smoothed(sigma), 1e-13);
                    },
                    flatten(pi.table()), 1e-5);
                worst = std::max(worst, relative_l2(g, fd));
                ++checks;
            }
        }
    }
    return {worst <= 1e-4, fmt("%.0f cases, worst relative error %.3g (limit 1e-4)", static_cast<double>(checks), worst)};
}

Outcome subgradient_fd(SuiteScale scale) {
    const std::size_t points = scale == SuiteScale::full ? 20 : 10;
    std::size_t matches = 0;
    double worst = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
        const std::size_t ns = 3 + k % 3, na = 2 + k % 2;
        const TabularMdp mdp = random_cost_mdp(ns, na, 200 + k, 0.9, 0.2);
        const Vector rho = uniform_measure(ns);
        RngStream rng(300 + k);
        const DirectPolicy pi = DirectPolicy::random_interior(ns, na, rng);
        const Vector psi = psi_subgradient(mdp, pi, rho, 1e-13).vector;
        const Vector fd = finite_diff_gradient(
            [&](const Vector& x) { return objective(mdp, unflatten(x, ns, na), rho, EvalMode::robust(), 1e-13); },
            flatten(pi.table()), 1e-6);
        const double err = relative_l2(psi, fd);
        if (err <= 1e-3) ++matches;
        else worst = std::max(worst, err);
    }
    const std::size_t needed = (points * 9 + 9) / 10;
    return {matches >= needed, fmt("%.0f of %.0f points within 1e-3 (largest miss %.3g)", static_cast<double>(matches),
                                   static_cast<double>(points), worst)};
}

Outcome smoothing_bound(SuiteScale scale) {
    const std::size_t pairs = scale == SuiteScale::full ? 50 : 10;
    std::size_t violations = 0;
    double tightest = 0.0;
    RngStream rng(3);
    for (std::size_t k = 0; k < pairs; ++k) {
        const std::size_t ns = 2 + rng.index(5), na = 2 + rng.index(2);
        const double radius = 0.05 + 0.45 * rng.uniform();
        const double sigma = std::pow(10.0, -1.0 + 3.0 * rng.uniform());
        const TabularMdp mdp = random_cost_mdp(ns, na, 400 + k, 0.9, radius);
        const DirectPolicy pi = DirectPolicy::random_interior(ns, na, rng);
        const Vector v = solve_value(mdp, pi.table(), EvalMode::robust(), 1e-12).v;
        const Vector vs = solve_value(mdp, pi.table(), EvalMode::smoothed(sigma), 1e-12).v;
        const double bound = 0.9 * radius / 0.1 * std::log(static_cast<double>(ns)) / sigma;
        const Vector rho = uniform_measure(ns);
        const double gap_j = std::abs(rho.dot(vs - v));
        const double gap_v = (vs - v).cwiseAbs().maxCoeff();
        if (gap_j > bound + 1e-9 || gap_v > bound + 1e-9) ++violations;
        tightest = std::max(tightest, gap_v / bound);
    }
    return {violations == 0, fmt("%.0f violations over %.0f pairs, largest gap/bound %.3g",
                                 static_cast<double>(violations), static_cast<double>(pairs), tightest)};
}

Outcome lse_bracket(SuiteScale scale) {
    const std::size_t vectors = scale == SuiteScale::full ? 10000 : 1000;
    std::size_t violations = 0;
    RngStream rng(4);
    for (std::size_t k = 0; k < vectors; ++k) {
        const std::size_t n = 1 + rng.index(30);
        Vector v(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 10.0 * rng.normal();
        const double sigma = std::pow(10.0, -2.0 + 5.0 * rng.uniform());
        const double m = v.maxCoeff(), l = lse(sigma, v);
        const double slack = 1e-12 * (1.0 + std::abs(m));
        if (!(l >= m - slack && l <= m + std::log(static_cast<double>(n)) / sigma + slack)) ++violations;
    }
    bool finite = true;
    for (std::size_t k = 0; k < 100; ++k) {
        Vector v(8);
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 1e3 * rng.normal();
        const double l = lse(1e6, v);
        const Vector w = softmax(1e6, v);
        finite = finite && std::isfinite(l) && l >= v.maxCoeff() && w.allFinite() && std::abs(w.sum() - 1.0) < 1e-12;
    }
    return {violations == 0 && finite,
            fmt("%.0f violations over %.0f vectors; sigma = 1e6 finite: %.0f", static_cast<double>(violations),
                static_cast<double>(vectors), finite ? 1.0 : 0.0)};
}

Outcome contraction(SuiteScale scale) {
    const std::size_t pairs = scale == SuiteScale::full ? 1000 : 100;
    std::size_t violations = 0;
    double ratio = 0.0;
    RngStream rng(5);
    for (std::size_t k = 0; k < pairs; ++k) {
        const std::size_t ns = 2 + rng.index(6), na = 2 + rng.index(3);
        const double gamma = 0.5 + 0.49 * rng.uniform();
        const TabularMdp mdp = random_cost_mdp(ns, na, 500 + k, gamma, rng.uniform());
        const PolicyTable pi = DirectPolicy::random_interior(ns, na, rng).table();
        Vector v1(static_cast<Eigen::Index>(ns)), v2(static_cast<Eigen::Index>(ns));
        for (Eigen::Index i = 0; i < v1.size(); ++i) {
            v1[i] = 10.0 * rng.normal();
            v2[i] = 10.0 * rng.normal();
        }
        const double dv = (v1 - v2).cwiseAbs().maxCoeff();
        const double sigma = std::pow(10.0, -1.0 + 4.0 * rng.uniform());
        for (const EvalMode& mode : {EvalMode::robust(), EvalMode::smoothed(sigma)}) {
            const double dt = (bellman_apply(mdp, pi, v1, mode) - bellman_apply(mdp, pi, v2, mode)).cwiseAbs().maxCoeff();
            if (dt > gamma * dv * (1.0 + 1e-12) + 1e-12) ++violations;
            ratio = std::max(ratio, dt / (gamma * dv));
        }
    }
    return {violations == 0, fmt("%.0f violations over %.0f pairs x 2 operators, largest ratio/gamma %.6f",
                                 static_cast<double>(violations), static_cast<double>(pairs), ratio)};
}

Outcome pl_condition(SuiteScale scale) {
    const std::size_t instances = scale == SuiteScale::full ? 5 : 2;
    const std::size_t points = scale == SuiteScale::full ? 50 : 10;
    const double sigma = 10.0;
    std::size_t violations = 0, checks = 0;
    for (std::size_t i = 0; i < instances; ++i) {
        const TabularMdp mdp = random_cost_mdp(5, 3, 600 + i, 0.9, 0.2);
        const ObjectiveSpec spec = ObjectiveSpec::uniform(5);
        const double j_robust = brute_force_optimum(mdp, spec, EvalMode::robust(), 1e-12).j_star;
        const double j_smooth = brute_force_optimum(mdp, spec, EvalMode::smoothed(sigma), 1e-12).j_star;
        RngStream rng(700 + i);
        for (std::size_t k = 0; k < points; ++k) {
            const DirectPolicy pi = DirectPolicy::random_interior(5, 3, rng);
            const PlResidual r = pl_residual(mdp, pi, spec, j_robust, EvalMode::robust(), 1e-12);
            const PlResidual s = pl_residual(mdp, pi, spec, j_smooth, EvalMode::smoothed(sigma), 1e-12);
            violations += (r.lhs > r.rhs + 1e-9) + (s.lhs > s.rhs + 1e-9);
            checks += 2;
        }
    }
    return {violations == 0, fmt("%.0f violations over %.0f checks", static_cast<double>(violations),
                                 static_cast<double>(checks))};
}

Outcome global_optimality(SuiteScale scale) {
    const std::size_t instances = scale == SuiteScale::full ? 10 : 4;
    const std::size_t iterations = scale == SuiteScale::full ? 2000 : 300;
    const double radius = 0.15, eps = 0.1;
    std::size_t rpg_ok = 0, srpg_ok = 0;
    double rpg_worst = 0.0, srpg_worst = 0.0;
    for (std::size_t i = 0; i < instances; ++i) {
        const std::size_t ns = i < instances / 2 ? 4 : 5;
        const TabularMdp mdp = garnet_generate(ns, 3, ns, 800 + i, 0.9, radius);
        const ObjectiveSpec spec = ObjectiveSpec::uniform(ns);
        const double j_star = brute_force_optimum(mdp, spec, EvalMode::robust()).j_star;
        TrainConfig cfg;
        cfg.iterations = iterations;
        cfg.schedule = StepSchedule::harmonic(1.0);
        const double rpg_gap = run_rpg(mdp, DirectPolicy::uniform(ns, 3), spec, cfg).rows.back().min_j_robust - j_star;
        cfg.sigma = smoothing_for_accuracy(0.9, radius, ns, eps);
        const double srpg_gap = run_srpg(mdp, DirectPolicy::uniform(ns, 3), spec, cfg).rows.back().min_j_robust - j_star;
        rpg_ok += rpg_gap <= 0.05;
        srpg_ok += srpg_gap <= 3 * eps;
        rpg_worst = std::max(rpg_worst, rpg_gap);
        srpg_worst = std::max(srpg_worst, srpg_gap);
    }
    const std::size_t needed = (instances * 9 + 9) / 10;
    std::ostringstream os;
    os << "rpg " << rpg_ok << "/" << instances << " (worst gap " << rpg_worst << "), srpg " << srpg_ok << "/"
       << instances << " (worst gap " << srpg_worst << "), T = " << iterations;
    return {rpg_ok >= needed && srpg_ok >= needed, os.str()};
}

Outcome td_convergence(SuiteScale scale) {
    const std::size_t instances = scale == SuiteScale::full ? 5 : 1;
    const std::size_t steps = 200000;
    double worst = 0.0;
    for (std::size_t i = 0; i < instances; ++i) {
        for (double radius : {0.0, 0.2}) {
            const TabularMdp mdp = garnet_generate(4, 2, 4, 900 + i, 0.9, radius);
            RngStream prng(950 + i);
            const PolicyTable pi = DirectPolicy::random_interior(4, 2, prng).table();
            for (bool smoothed : {false, true}) {
                TdOptions options;
                options.steps = steps;
                if (smoothed) options.sigma = 10.0;
                const EvalMode mode = smoothed ? EvalMode::smoothed(10.0) : EvalMode::robust();
                RngStream rng = RngStream(i).split(smoothed ? 1 : 0).split(radius > 0 ? 1 : 0);
                const QTable q = robust_td_tabular(mdp, pi, options, rng);
                worst = std::max(worst, (q - solve_value(mdp, pi, mode, 1e-12).q).cwiseAbs().maxCoeff());
            }
        }
    }
    return {worst <= 0.05, fmt("worst max|Q - Q*| %.4g over %.0f runs (limit 0.05)", worst,
                               static_cast<double>(instances * 4))};
}

Outcome ac_unbiased(SuiteScale) {
    const TabularMdp mdp = garnet_generate(4, 3, 4, 1, 0.9, 0.2);
    RngStream prng(3);
    const DirectPolicy pi = DirectPolicy::random_interior(4, 3, prng);
    const Vector mu = uniform_measure(4);
    const double sigma = 10.0;
    std::ostringstream os;
    bool ok = true;
    for (StartRule rule : {StartRule::softmax, StartRule::argmax}) {
        const bool smooth = rule == StartRule::softmax;
        const QTable q = solve_value(mdp, pi, smooth ? EvalMode::smoothed(sigma) : EvalMode::robust(), 1e-12).q;
        const Vector truth =
            smooth ? grad_j_sigma(mdp, pi, mu, sigma, 1e-12).vector : psi_subgradient(mdp, pi, mu, 1e-12).vector;
        double previous = INFINITY;
        GradientSampleSet last;
        os << (smooth ? "softmax start vs grad J_sigma:" : "; argmax start vs psi:");
        for (std::size_t m : {100u, 1000u, 10000u}) {
            last = estimate_gradient(mdp, pi, q, mu, rule, sigma, m, RngStream(7));
            const double err = (last.mean - truth).norm();
            ok = ok && err < previous;
            previous = err;
            os << " " << err;
        }
        double z = 0.0;
        for (Eigen::Index i = 0; i < truth.size(); ++i)
            z = std::max(z, std::abs(last.mean[i] - truth[i]) / std::max(last.standard_error[i], 1e-300));
        ok = ok && z <= 3.0;
        os << " (max |z| " << z << ")";
    }
    return {ok, os.str()};
}

Outcome geometric_law(SuiteScale) {
    const std::size_t draws = 1000000;
    bool ok = true;
    std::ostringstream os;
    for (double radius : {0.1, 0.3}) {
        RngStream rng(static_cast<std::uint64_t>(radius * 100));
        double zeros = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < draws; ++i) {
            const std::size_t k = sample_geometric_horizon(0.9, radius, rng);
            zeros += k == 0;
            sum += static_cast<double>(k);
        }
        const double p = 1 - 0.9 + 0.9 * radius, mean = (0.9 - 0.9 * radius) / p;
        const double p_hat = zeros / draws, mean_hat = sum / draws;
        ok = ok && std::abs(p_hat - p) <= 0.002 && std::abs(mean_hat - mean) <= 0.02 * mean;
        os << (radius == 0.1 ? "" : "; ") << "R=" << radius << ": P(T=0) " << p_hat << " vs " << p << ", mean "
           << mean_hat << " vs " << mean;
    }
    return {ok, os.str()};
}

Outcome worst_case_attainment(SuiteScale scale) {
    const std::size_t pairs = scale == SuiteScale::full ? 20 : 5;
    const double tol = 1e-10;
    double worst = 0.0;
    RngStream rng(11);
    for (std::size_t k = 0; k < pairs; ++k) {
        const std::size_t ns = 2 + rng.index(6), na = 2 + rng.index(3);
        const TabularMdp mdp = random_cost_mdp(ns, na, 1100 + k, 0.9, 0.05 + 0.5 * rng.uniform());
        const PolicyTable pi = DirectPolicy::random_interior(ns, na, rng).table();
        const Vector v = solve_value(mdp, pi, EvalMode::robust(), tol).v;
        const TabularMdp worst_model = worst_case_kernel(mdp, v);
        // Nominal evaluation by a direct linear solve (I - gamma P_pi) V = c_pi.
        const auto n = static_cast<Eigen::Index>(ns);
        const Matrix p = policy_kernel(worst_model, pi);
        Vector c = Vector::Zero(n);
        for (Eigen::Index s = 0; s < n; ++s)
            for (Eigen::Index a = 0; a < pi.cols(); ++a)
                c[s] += pi(s, a) * worst_model.cost(static_cast<std::size_t>(s), static_cast<std::size_t>(a));
        const Vector nominal = (Matrix::Identity(n, n) - 0.9 * p).fullPivLu().solve(c);
        worst = std::max(worst, (nominal - v).cwiseAbs().maxCoeff());
    }
    return {worst <= 10 * tol, fmt("worst |V_nominal(P_worst) - V_robust| %.3g (limit %.0e)", worst, 10 * tol)};
}

bool same_trace(const TrainTrace& a, const TrainTrace& b) {
    if (a.rows.size() != b.rows.size() || a.final_params != b.final_params) return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const TraceRow& x = a.rows[i];
        const TraceRow& y = b.rows[i];
        if (x.j_robust != y.j_robust || x.j_nominal != y.j_nominal || x.grad_norm != y.grad_norm ||
            x.gradient_mapping_norm != y.gradient_mapping_norm || x.min_j_robust != y.min_j_robust)
            return false;
    }
    return true;
}

Outcome robustness_ordering(SuiteScale scale) {
    std::ostringstream os;
    bool identical = true;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const TabularMdp mdp = garnet_generate(12, 6, 12, seed, 0.9, 0.0);
        TrainConfig cfg;
        cfg.iterations = 100;
        const ObjectiveSpec spec = ObjectiveSpec::uniform(12);
        identical = identical && same_trace(run_rpg(mdp, DirectPolicy::uniform(12, 6), spec, cfg),
                                            run_nominal_pg(mdp, DirectPolicy::uniform(12, 6), spec, cfg));
    }
    os << "R=0 traces identical: " << (identical ? "yes" : "no");
    if (scale == SuiteScale::small) return {identical, os.str()};

    bool ordered = true;
    for (double radius : {0.1, 0.15, 0.25}) {
        std::size_t wins = 0, ties = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const TabularMdp mdp = garnet_generate(12, 6, 12, seed, 0.9, radius);
            const ObjectiveSpec spec = ObjectiveSpec::uniform(12);
            TrainConfig cfg;
            cfg.iterations = 1000;
            cfg.record_metrics = false;
            const Vector robust = run_rpg(mdp, DirectPolicy::uniform(12, 6), spec, cfg).final_params;
            const Vector nominal = run_nominal_pg(mdp, DirectPolicy::uniform(12, 6), spec, cfg).final_params;
            // Worst-case reward ordering is the reverse of the worst-case cost ordering.
            const double jr = objective(mdp, unflatten(robust, 12, 6), spec.rho(), EvalMode::robust(), 1e-12);
            const double jn = objective(mdp, unflatten(nominal, 12, 6), spec.rho(), EvalMode::robust(), 1e-12);
            if (jr < jn - 1e-9) ++wins;
            else if (std::abs(jr - jn) <= 1e-9) ++ties;
        }
        ordered = ordered && wins >= 8;
        os << "; R=" << radius << ": robust ahead on " << wins << "/10, tied " << ties;
    }
    return {identical && ordered, os.str()};
}

Outcome constants_check(SuiteScale) {
    ConstantInputs pl;
    pl.gamma = 0.9;
    pl.mu_min = 0.1;
    ConstantInputs lv;
    lv.gamma = 0.9;
    lv.k_pi = 1.0;
    lv.num_actions = 6;
    lv.mu_min = 0.1;
    const double c_pl = compute_constants(pl).C_PL, l_v = compute_constants(lv).L_V;
    const bool ok = std::abs(c_pl - 100.0) <= 1e-12 * 100.0 && std::abs(l_v - 600.0) <= 1e-12 * 600.0;
    return {ok, fmt("C_PL = %.15g (expected 100), L_V = %.15g (expected 600)", c_pl, l_v)};
}

struct Entry {
    const char* name;
    Outcome (*run)(SuiteScale);
};

constexpr Entry kChecks[kCriterionCount] = {
    {"gradient_matches_finite_differences", gradient_fd},
    {"subgradient_matches_finite_differences", subgradient_fd},
    {"smoothing_bound", smoothing_bound},
    {"lse_bracket", lse_bracket},
    {"bellman_contraction", contraction},
    {"pl_condition", pl_condition},
    {"global_optimality", global_optimality},
    {"robust_td_convergence", td_convergence},
    {"actor_critic_unbiased", ac_unbiased},
    {"geometric_horizon_law", geometric_law},
    {"worst_case_attainment", worst_case_attainment},
    {"robustness_ordering", robustness_ordering},
    {"constants", constants_check},
};

} // namespace

CheckResult run_check(int id, SuiteScale scale) {
    if (id < 1 || id > kCriterionCount) throw std::out_of_range("check id out of range");
    const Entry& e = kChecks[id - 1];
    const auto start = std::chrono::steady_clock::now();
    CheckResult r{id, e.name, false, {}, 0.0};
    try {
        Outcome o = e.run(scale);
        r.passed = o.passed;
        r.detail = std::move(o.detail);
    } catch (const std::exception& ex) {
        r.detail = std::string("error: ") + ex.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::vector<CheckResult> run_suite(SuiteScale scale) {
    std::vector<CheckResult> out;
    for (int id = 1; id <= kCriterionCount; ++id) out.push_back(run_check(id, scale));
    return out;
}

std::string format_result(const CheckResult& r) {
    char head[96];
    std::snprintf(head, sizeof head, "%s [%02d] %s (%.1fs): ", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(),
                  r.seconds);
    return head + r.detail;
}

} // namespace robust_mdp
