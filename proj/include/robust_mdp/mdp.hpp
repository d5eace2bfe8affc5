#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace robust_mdp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Tolerance on row sums of every probability table in the library.
inline constexpr double kSimplexTolerance = 1e-12;

/**
 * Finite MDP with an R-contamination uncertainty set around its kernel.
 *
 * The kernel is stored row-major as p[s][a][s'] and the cost as c[s][a].
 * Costs lie in [0,1], 0 <= gamma < 1 and 0 <= radius <= 1. The constructor
 * rejects anything else with a ParameterError whose message names the
 * offending field, e.g. "kernel[3][1]".
 */
class TabularMdp {
public:
    TabularMdp(std::size_t num_states, std::size_t num_actions, std::vector<double> kernel,
               std::vector<double> cost, double gamma, double radius);

    [[nodiscard]] std::size_t num_states() const noexcept { return num_states_; }
    [[nodiscard]] std::size_t num_actions() const noexcept { return num_actions_; }
    [[nodiscard]] double gamma() const noexcept { return gamma_; }
    [[nodiscard]] double radius() const noexcept { return radius_; }

    [[nodiscard]] double p(std::size_t s, std::size_t a, std::size_t next) const noexcept {
        return kernel_[(s * num_actions_ + a) * num_states_ + next];
    }
    [[nodiscard]] std::span<const double> row(std::size_t s, std::size_t a) const noexcept {
        return {kernel_.data() + (s * num_actions_ + a) * num_states_, num_states_};
    }
    [[nodiscard]] double cost(std::size_t s, std::size_t a) const noexcept {
        return cost_[s * num_actions_ + a];
    }

    [[nodiscard]] const std::vector<double>& kernel() const noexcept { return kernel_; }
    [[nodiscard]] const std::vector<double>& costs() const noexcept { return cost_; }

    /// Copy with a different discount factor and contamination radius.
    [[nodiscard]] TabularMdp with_parameters(double gamma, double radius) const;

    friend bool operator==(const TabularMdp&, const TabularMdp&) = default;

private:
    void validate() const;

    std::size_t num_states_;
    std::size_t num_actions_;
    std::vector<double> kernel_;
    std::vector<double> cost_;
    double gamma_;
    double radius_;
};

/// Garnet reward: 1 for a_1 in s_1 and for a_2 in every other state, else 0.
[[nodiscard]] double garnet_reward(std::size_t s, std::size_t a) noexcept;

/**
 * Random Garnet instance G(num_states, num_actions).
 *
 * Every kernel row has exactly `branching` nonzero entries on a uniformly
 * random support, with Dirichlet(1,...,1) masses. Costs are 1 - garnet_reward.
 * The same seed always produces a bitwise-identical model.
 */
[[nodiscard]] TabularMdp garnet_generate(std::size_t num_states, std::size_t num_actions,
                                         std::size_t branching, std::uint64_t seed,
                                         double gamma = 0.9, double radius = 0.0);

/// Euclidean projection of v onto the probability simplex (sort-and-threshold).
[[nodiscard]] Vector project_row_simplex(const Vector& v);

/// Applies project_row_simplex to every row of m.
[[nodiscard]] Matrix project_rows_simplex(const Matrix& m);

/// True if every entry is >= -tol and the entries sum to 1 within tol.
[[nodiscard]] bool is_distribution(const Vector& v, double tol = kSimplexTolerance);

} // namespace robust_mdp
