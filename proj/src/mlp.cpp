#include "robust_mdp/mlp.hpp"

#include "robust_mdp/errors.hpp"

#include <cmath>

namespace robust_mdp {

Mlp::Mlp(std::size_t inputs, std::size_t hidden, std::size_t outputs)
    : inputs_(inputs), hidden_(hidden), outputs_(outputs),
      params_(Vector::Zero(static_cast<Eigen::Index>(hidden * inputs + hidden +
                                                     outputs * hidden + outputs))) {
    if (inputs == 0 || hidden == 0 || outputs == 0)
        throw ParameterError("Mlp: layer sizes must be positive");
}

void Mlp::randomize(RngStream& rng, double output_scale) {
    Eigen::Index k = 0;
    const double s1 = 1.0 / std::sqrt(static_cast<double>(inputs_));
    const double s2 = output_scale / std::sqrt(static_cast<double>(hidden_));
    for (std::size_t i = 0; i < hidden_ * inputs_; ++i) params_[k++] = s1 * rng.normal();
    for (std::size_t i = 0; i < hidden_; ++i) params_[k++] = 0.0;
    for (std::size_t i = 0; i < outputs_ * hidden_; ++i) params_[k++] = s2 * rng.normal();
    for (std::size_t i = 0; i < outputs_; ++i) params_[k++] = 0.0;
}

void Mlp::set_params(const Vector& params) {
    if (params.size() != params_.size())
        throw ParameterError("Mlp::set_params: expected " + std::to_string(params_.size()) +
                             " parameters, got " + std::to_string(params.size()));
    params_ = params;
}

Eigen::Map<const Mlp::RowMajor> Mlp::w1() const {
    return {params_.data(), static_cast<Eigen::Index>(hidden_), static_cast<Eigen::Index>(inputs_)};
}

Eigen::Map<const Vector> Mlp::b1() const {
    return {params_.data() + hidden_ * inputs_, static_cast<Eigen::Index>(hidden_)};
}

Eigen::Map<const Mlp::RowMajor> Mlp::w2() const {
    return {params_.data() + hidden_ * inputs_ + hidden_, static_cast<Eigen::Index>(outputs_),
            static_cast<Eigen::Index>(hidden_)};
}

Eigen::Map<const Vector> Mlp::b2() const {
    return {params_.data() + hidden_ * inputs_ + hidden_ + outputs_ * hidden_,
            static_cast<Eigen::Index>(outputs_)};
}

Vector Mlp::forward(const Vector& x) const {
    const Vector h = (w1() * x + b1()).array().tanh().matrix();
    return w2() * h + b2();
}

void Mlp::accumulate_vjp(const Vector& x, const Vector& out_weights, double scale,
                         Eigen::Ref<Vector> grad) const {
    const auto nh = static_cast<Eigen::Index>(hidden_);
    const auto ni = static_cast<Eigen::Index>(inputs_);
    const auto no = static_cast<Eigen::Index>(outputs_);
    const Vector h = (w1() * x + b1()).array().tanh().matrix();
    const Vector u = scale * out_weights;
    // Back through the output layer, then through tanh' = 1 - h^2.
    const Vector delta = ((w2().transpose() * u).array() * (1.0 - h.array().square())).matrix();

    Eigen::Index k = 0;
    Eigen::Map<RowMajor>(grad.data() + k, nh, ni) += delta * x.transpose();
    k += nh * ni;
    grad.segment(k, nh) += delta;
    k += nh;
    Eigen::Map<RowMajor>(grad.data() + k, no, nh) += u * h.transpose();
    k += no * nh;
    grad.segment(k, no) += u;
}

Mlp::ValueAndGradient Mlp::forward_backward(const Vector& x, std::size_t output) const {
    if (output >= outputs_) throw ParameterError("Mlp::forward_backward: output out of range");
    ValueAndGradient result{forward(x)[static_cast<Eigen::Index>(output)],
                            Vector::Zero(params_.size())};
    accumulate_vjp(x, one_hot(output, outputs_), 1.0, result.gradient);
    return result;
}

Vector one_hot(std::size_t i, std::size_t n) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
    v[static_cast<Eigen::Index>(i)] = 1.0;
    return v;
}

} // namespace robust_mdp
