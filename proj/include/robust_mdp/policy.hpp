#pragma once

#include "robust_mdp/mdp.hpp"
#include "robust_mdp/mlp.hpp"
#include "robust_mdp/rng.hpp"

#include <cstddef>
#include <span>
#include <variant>

namespace robust_mdp {

/// Per-state action probabilities, shape |S| x |A|.
using PolicyTable = Matrix;

/// Direct parameterization pi(a|s) = theta[s][a]; every row lies on the simplex.
class DirectPolicy {
public:
    explicit DirectPolicy(Matrix table);

    static DirectPolicy uniform(std::size_t num_states, std::size_t num_actions);
    static DirectPolicy deterministic(std::span<const std::size_t> actions,
                                      std::size_t num_actions);
    /// Rows drawn from Dirichlet(1,...,1); strictly interior with probability one.
    static DirectPolicy random_interior(std::size_t num_states, std::size_t num_actions,
                                        RngStream& rng);

    [[nodiscard]] std::size_t num_states() const noexcept {
        return static_cast<std::size_t>(table_.rows());
    }
    [[nodiscard]] std::size_t num_actions() const noexcept {
        return static_cast<std::size_t>(table_.cols());
    }
    [[nodiscard]] std::size_t num_params() const noexcept {
        return static_cast<std::size_t>(table_.size());
    }
    [[nodiscard]] const PolicyTable& table() const noexcept { return table_; }

    /// Row-major flattening of the table; parameter index s*|A| + a.
    [[nodiscard]] Vector parameters() const;
    void set_parameters(const Vector& params);

private:
    Matrix table_;
};

/// Softmax policy over a one-hot-state MLP (tanh hidden layer, |A| logits).
class MlpPolicy {
public:
    MlpPolicy(std::size_t num_states, std::size_t num_actions, std::size_t hidden = 15);

    void randomize(RngStream& rng, double output_scale = 0.1);

    [[nodiscard]] std::size_t num_states() const noexcept { return net_.num_inputs(); }
    [[nodiscard]] std::size_t num_actions() const noexcept { return net_.num_outputs(); }
    [[nodiscard]] std::size_t num_params() const noexcept { return net_.num_params(); }
    [[nodiscard]] const Mlp& network() const noexcept { return net_; }

    [[nodiscard]] Vector evaluate(std::size_t s) const;
    [[nodiscard]] Vector parameters() const { return net_.params(); }
    void set_parameters(const Vector& params) { net_.set_params(params); }

    /// out += scale * sum_a weights[a] * grad pi(a|s).
    void accumulate_weighted_grad(std::size_t s, const Vector& weights, double scale,
                                  Eigen::Ref<Vector> out) const;

private:
    Mlp net_;
};

/**
 * Uniform view over the supported policy classes.
 *
 * The feasible parameter set is the product of simplices for the direct
 * class and all of R^n for the MLP class; `project` maps onto it.
 */
class PolicyHandle {
public:
    PolicyHandle(DirectPolicy policy) : impl_(std::move(policy)) {}
    PolicyHandle(MlpPolicy policy) : impl_(std::move(policy)) {}

    [[nodiscard]] std::size_t num_states() const;
    [[nodiscard]] std::size_t num_actions() const;
    [[nodiscard]] std::size_t num_params() const;

    [[nodiscard]] Vector evaluate(std::size_t s) const;
    /// Gradient of pi(a|s) with respect to the flat parameter vector.
    [[nodiscard]] Vector grad(std::size_t s, std::size_t a) const;
    void accumulate_weighted_grad(std::size_t s, const Vector& weights, double scale,
                                  Eigen::Ref<Vector> out) const;

    [[nodiscard]] Vector parameters() const;
    void set_parameters(const Vector& params);
    [[nodiscard]] Vector project(const Vector& params) const;

    /// pi(a|s) for every state, shape |S| x |A|.
    [[nodiscard]] PolicyTable table() const;

    [[nodiscard]] bool is_direct() const noexcept {
        return std::holds_alternative<DirectPolicy>(impl_);
    }
    [[nodiscard]] const DirectPolicy& direct() const;

private:
    std::variant<DirectPolicy, MlpPolicy> impl_;
};

/// Row-major table <-> flat parameter vector for the direct class.
[[nodiscard]] Vector flatten(const Matrix& table);
[[nodiscard]] Matrix unflatten(const Vector& params, std::size_t rows, std::size_t cols);

} // namespace robust_mdp
