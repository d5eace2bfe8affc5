#pragma once

#include "robust_mdp/mdp.hpp"
#include "robust_mdp/rng.hpp"

#include <cstddef>

namespace robust_mdp {

/**
 * Two-layer perceptron: out = W2 * tanh(W1 * x + b1) + b2.
 *
 * Parameters are stored flat as [W1 (row-major), b1, W2 (row-major), b2].
 * Freshly constructed networks have all-zero parameters.
 */
class Mlp {
public:
    Mlp(std::size_t inputs, std::size_t hidden, std::size_t outputs);

    /// Gaussian weights scaled by 1/sqrt(fan_in), zero biases; the output
    /// layer is additionally scaled by output_scale.
    void randomize(RngStream& rng, double output_scale = 1.0);

    [[nodiscard]] std::size_t num_inputs() const noexcept { return inputs_; }
    [[nodiscard]] std::size_t num_hidden() const noexcept { return hidden_; }
    [[nodiscard]] std::size_t num_outputs() const noexcept { return outputs_; }
    [[nodiscard]] std::size_t num_params() const noexcept {
        return static_cast<std::size_t>(params_.size());
    }

    [[nodiscard]] const Vector& params() const noexcept { return params_; }
    void set_params(const Vector& params);

    [[nodiscard]] Vector forward(const Vector& x) const;

    /// grad += scale * sum_k out_weights[k] * d out_k / d params, evaluated at x.
    void accumulate_vjp(const Vector& x, const Vector& out_weights, double scale,
                        Eigen::Ref<Vector> grad) const;

    struct ValueAndGradient {
        double value;
        Vector gradient;
    };
    /// Output `output` at x together with its parameter gradient.
    [[nodiscard]] ValueAndGradient forward_backward(const Vector& x, std::size_t output) const;

private:
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    [[nodiscard]] Eigen::Map<const RowMajor> w1() const;
    [[nodiscard]] Eigen::Map<const Vector> b1() const;
    [[nodiscard]] Eigen::Map<const RowMajor> w2() const;
    [[nodiscard]] Eigen::Map<const Vector> b2() const;

    std::size_t inputs_;
    std::size_t hidden_;
    std::size_t outputs_;
    Vector params_;
};

/// One-hot encoding of index i in a vector of length n.
[[nodiscard]] Vector one_hot(std::size_t i, std::size_t n);

} // namespace robust_mdp
