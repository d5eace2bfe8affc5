#pragma once

#include "robust_mdp/actor_critic.hpp"
#include "robust_mdp/mdp.hpp"
#include "robust_mdp/optimizers.hpp"
#include "robust_mdp/robust_td.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace robust_mdp {

enum class Mode { rpg, srpg, ac, smoothed_ac, nominal_pg, nominal_ac, td_eval };

[[nodiscard]] std::string_view mode_name(Mode mode) noexcept;
/// Throws ParameterError on an unknown name.
[[nodiscard]] Mode parse_mode(std::string_view name);

/// Garnet instances; without `instance_seed` every trial draws its own instance.
struct GarnetSource {
    std::size_t states = 12;
    std::size_t actions = 6;
    std::size_t branching = 0; ///< 0 means dense (= states)
    std::optional<std::uint64_t> instance_seed;
};

struct FileSource {
    std::filesystem::path path;
};

using Environment = std::variant<GarnetSource, FileSource>;

struct ExactEvaluation {};

/// Robust TD with `samples` transitions, repeated `repeats` times from zero.
struct TdEvaluation {
    std::size_t samples = 200;
    std::size_t repeats = 30;
};

using EvaluationMethod = std::variant<ExactEvaluation, TdEvaluation>;

enum class InitKind { uniform, random };

struct ExperimentConfig {
    Mode mode = Mode::rpg;
    Environment environment = GarnetSource{};
    double gamma = 0.9;
    double radius = 0.15;
    std::optional<double> sigma;
    TrainConfig train;
    AcConfig ac;
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    InitKind init = InitKind::uniform;
    EvaluationMethod eval = ExactEvaluation{};

    /// Throws ParameterError naming the first invalid field.
    void validate() const;
    [[nodiscard]] std::size_t iterations() const;
};

struct EvaluationResult {
    double mean = 0;
    std::vector<double> per_rep;
};

/**
 * Cost objective sum_s rho(s) V(s) of a fixed policy table.
 *
 * Exact mode solves the robust (or nominal) Bellman equation; TD mode
 * averages sum_s rho(s) sum_a pi(a|s) Q_TD(s,a) over independent runs, run r
 * drawing from RngStream(seed).split(r).
 */
[[nodiscard]] EvaluationResult evaluate_policy(const TabularMdp& mdp, const PolicyTable& policy,
                                               const Vector& rho, const EvaluationMethod& method,
                                               std::uint64_t seed = 0, bool robust = true);

/// Accumulated discounted reward under r = 1 - c.
[[nodiscard]] inline double cost_to_reward(double j, double gamma) { return 1.0 / (1.0 - gamma) - j; }

struct MetricRow {
    std::size_t trial = 0;
    std::size_t iteration = 0;
    std::string metric;
    double value = 0;
};

struct PercentileRow {
    std::size_t iteration = 0;
    std::string metric;
    double p05 = 0;
    double p50 = 0;
    double p95 = 0;
};

struct TrialSnapshots {
    std::size_t trial = 0;
    TabularMdp mdp;
    std::vector<Snapshot> snapshots; ///< parameters are flattened policy tables
};

struct RunRecord {
    std::vector<MetricRow> rows; ///< trial-major, then iteration, then metric
    std::vector<PercentileRow> summary;
    std::vector<TrialSnapshots> policies;
};

/// Linear interpolation between order statistics (q in [0,1]).
[[nodiscard]] double percentile(std::vector<double> values, double q);

[[nodiscard]] std::vector<PercentileRow> percentile_summary(const std::vector<MetricRow>& rows);

/// The MDP of trial `trial` (Garnet draw or file) with the configured gamma and R.
[[nodiscard]] TabularMdp trial_mdp(const ExperimentConfig& config, std::size_t trial);

/// Runs every trial (concurrently) and collects rows in trial order.
[[nodiscard]] RunRecord run_experiment(const ExperimentConfig& config);

void write_rows_csv(std::ostream& out, const std::vector<MetricRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<PercentileRow>& summary);
/// gnuplot blocks "iteration p05 p50 p95", one per metric, separated by two blank lines.
void write_summary_dat(std::ostream& out, const std::vector<PercentileRow>& summary);

[[nodiscard]] nlohmann::json snapshots_to_json(const std::vector<TrialSnapshots>& policies);
[[nodiscard]] std::vector<TrialSnapshots> snapshots_from_json(const nlohmann::json& doc);

/// Scores every stored snapshot: robust and nominal reward, exact or TD.
[[nodiscard]] std::vector<MetricRow> evaluate_snapshots(const std::vector<TrialSnapshots>& policies,
                                                        std::optional<double> radius,
                                                        const EvaluationMethod& method,
                                                        std::uint64_t seed);

} // namespace robust_mdp
