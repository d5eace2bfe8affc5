#pragma once

#include "robust_mdp/policy.hpp"
#include "robust_mdp/robust_dp.hpp"
#include "robust_mdp/robust_grad.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace robust_mdp {

enum class StepRule { constant, one_over_l, half_over_l, harmonic };

/**
 * Step sizes alpha_t for the projected descent loops.
 *
 * constant: alpha_t = value. harmonic: alpha_t = value / (t + 1).
 * one_over_l / half_over_l: 1/L_sigma and 1/(2 L_sigma) from compute_constants.
 */
struct StepSchedule {
    StepRule rule = StepRule::harmonic;
    double value = 1.0;

    static StepSchedule constant(double alpha) { return {StepRule::constant, alpha}; }
    static StepSchedule harmonic(double a) { return {StepRule::harmonic, a}; }
    static StepSchedule one_over_l() { return {StepRule::one_over_l, 1.0}; }
    static StepSchedule half_over_l() { return {StepRule::half_over_l, 0.5}; }

    /// alpha_t; `smoothness` is L_sigma and is only read by the 1/L rules.
    [[nodiscard]] double alpha(std::size_t t, double smoothness) const;
    [[nodiscard]] bool needs_smoothness() const noexcept {
        return rule == StepRule::one_over_l || rule == StepRule::half_over_l;
    }
};

struct TrainConfig {
    std::size_t iterations = 1000;
    StepSchedule schedule = StepSchedule::harmonic(1.0);
    std::optional<double> sigma;   ///< required by run_srpg; adds the J_sigma column otherwise
    std::uint64_t seed = 0;
    std::size_t snapshot_period = 0; ///< 0 keeps only the final parameters
    double tol = 1e-10;              ///< value solver tolerance
    bool record_metrics = true;      ///< false skips the per-iteration objective solves
};

struct TraceRow {
    std::size_t t = 0;
    double j_robust = 0;
    double j_sigma = 0;  ///< NaN when no sigma is configured
    double j_nominal = 0;
    double grad_norm = 0;
    double gradient_mapping_norm = 0;
    double min_j_robust = 0;
    double wall_time = 0; ///< seconds since the loop started
};

struct Snapshot {
    std::size_t t = 0;
    Vector params;
};

/// T+1 rows (initial point included), optional snapshots and the final parameters.
struct TrainTrace {
    std::vector<TraceRow> rows;
    std::vector<Snapshot> snapshots;
    Vector final_params;
};

/// (theta - Proj(theta - alpha grad)) / alpha.
[[nodiscard]] Vector gradient_mapping(const PolicyHandle& policy, const Vector& grad, double alpha);

/// Records the objective columns of one trace row for the current parameters.
class MetricRecorder {
public:
    MetricRecorder(const TabularMdp& mdp, const ObjectiveSpec& spec, std::optional<double> sigma,
                   double tol, bool enabled);

    [[nodiscard]] TraceRow row(std::size_t t, const PolicyHandle& policy, double grad_norm,
                               double mapping_norm);

private:
    const TabularMdp& mdp_;
    const ObjectiveSpec& spec_;
    std::optional<double> sigma_;
    double tol_;
    bool enabled_;
    double min_j_;
    double start_;
};

/// Robust projected sub-gradient descent: theta <- Proj(theta - alpha_t psi_mu(theta)).
[[nodiscard]] TrainTrace run_rpg(const TabularMdp& mdp, DirectPolicy policy,
                                 const ObjectiveSpec& spec, const TrainConfig& config);

/// Smoothed projected gradient descent: theta <- Proj(theta - alpha_t grad J_sigma(theta)). Requires config.sigma.
[[nodiscard]] TrainTrace run_srpg(const TabularMdp& mdp, DirectPolicy policy,
                                  const ObjectiveSpec& spec, const TrainConfig& config);

/// Vanilla projected policy gradient (the R = 0 gradient); metrics use the true radius.
[[nodiscard]] TrainTrace run_nominal_pg(const TabularMdp& mdp, DirectPolicy policy,
                                        const ObjectiveSpec& spec, const TrainConfig& config);

/// Generic loop shared by the three entry points; any policy class.
[[nodiscard]] TrainTrace run_projected_descent(const TabularMdp& mdp, PolicyHandle policy,
                                               const ObjectiveSpec& spec, const EvalMode& mode,
                                               const TrainConfig& config);

struct BruteForceResult {
    DirectPolicy policy;
    std::vector<std::size_t> actions;
    double j_star = 0;
};

inline constexpr std::size_t kBruteForceLimit = 4096;

/**
 * Minimizes sum_s rho(s) V(s) over all deterministic policies.
 *
 * Policy k assigns action (k / |A|^s) mod |A| to state s. Values within
 * `tol` of the minimum count as ties and the first index is kept. Throws ParameterError when |A|^|S| exceeds kBruteForceLimit.
 */
[[nodiscard]] BruteForceResult brute_force_optimum(const TabularMdp& mdp, const ObjectiveSpec& spec,
                                                   const EvalMode& mode, double tol = 1e-10);

} // namespace robust_mdp
