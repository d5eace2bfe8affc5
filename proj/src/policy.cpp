#include "robust_mdp/policy.hpp"

#include "robust_mdp/errors.hpp"

#include <string>

namespace robust_mdp {

namespace {

void check_direct_table(const Matrix& table) {
    if (table.rows() == 0 || table.cols() == 0)
        throw ParameterError("DirectPolicy: empty table");
    for (Eigen::Index s = 0; s < table.rows(); ++s)
        if (!is_distribution(table.row(s).transpose()))
            throw ParameterError("DirectPolicy: row " + std::to_string(s) +
                                 " is not on the simplex");
}

Vector softmax_of(const Vector& logits) {
    const Vector e = (logits.array() - logits.maxCoeff()).exp().matrix();
    return e / e.sum();
}

} // namespace

Vector flatten(const Matrix& table) {
    Vector out(table.size());
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < table.rows(); ++r)
        for (Eigen::Index c = 0; c < table.cols(); ++c) out[k++] = table(r, c);
    return out;
}

Matrix unflatten(const Vector& params, std::size_t rows, std::size_t cols) {
    if (static_cast<std::size_t>(params.size()) != rows * cols)
        throw ParameterError("unflatten: size mismatch");
    Matrix out(rows, cols);
    Eigen::Index k = 0;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out(r, c) = params[k++];
    return out;
}

DirectPolicy::DirectPolicy(Matrix table) : table_(std::move(table)) { check_direct_table(table_); }

DirectPolicy DirectPolicy::uniform(std::size_t num_states, std::size_t num_actions) {
    return DirectPolicy(Matrix::Constant(num_states, num_actions,
                                         1.0 / static_cast<double>(num_actions)));
}

DirectPolicy DirectPolicy::deterministic(std::span<const std::size_t> actions,
                                         std::size_t num_actions) {
    Matrix table = Matrix::Zero(static_cast<Eigen::Index>(actions.size()),
                                static_cast<Eigen::Index>(num_actions));
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] >= num_actions) throw ParameterError("deterministic: action out of range");
        table(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(actions[s])) = 1.0;
    }
    return DirectPolicy(std::move(table));
}

DirectPolicy DirectPolicy::random_interior(std::size_t num_states, std::size_t num_actions,
                                           RngStream& rng) {
    Matrix table(num_states, num_actions);
    for (std::size_t s = 0; s < num_states; ++s) {
        double total = 0.0;
        for (std::size_t a = 0; a < num_actions; ++a) total += table(s, a) = rng.exponential();
        table.row(s) /= total;
    }
    return DirectPolicy(std::move(table));
}

Vector DirectPolicy::parameters() const { return flatten(table_); }

void DirectPolicy::set_parameters(const Vector& params) {
    Matrix next = unflatten(params, num_states(), num_actions());
    check_direct_table(next);
    table_ = std::move(next);
}

MlpPolicy::MlpPolicy(std::size_t num_states, std::size_t num_actions, std::size_t hidden)
    : net_(num_states, hidden, num_actions) {}

void MlpPolicy::randomize(RngStream& rng, double output_scale) {
    net_.randomize(rng, output_scale);
}

Vector MlpPolicy::evaluate(std::size_t s) const {
    return softmax_of(net_.forward(one_hot(s, num_states())));
}

void MlpPolicy::accumulate_weighted_grad(std::size_t s, const Vector& weights, double scale,
                                         Eigen::Ref<Vector> out) const {
    const Vector x = one_hot(s, num_states());
    const Vector pi = softmax_of(net_.forward(x));
    // d/dz_k sum_a w_a pi_a = pi_k (w_k - <w, pi>).
    const Vector u = (pi.array() * (weights.array() - weights.dot(pi))).matrix();
    net_.accumulate_vjp(x, u, scale, out);
}

std::size_t PolicyHandle::num_states() const {
    return std::visit([](const auto& p) { return p.num_states(); }, impl_);
}

std::size_t PolicyHandle::num_actions() const {
    return std::visit([](const auto& p) { return p.num_actions(); }, impl_);
}

std::size_t PolicyHandle::num_params() const {
    return std::visit([](const auto& p) { return p.num_params(); }, impl_);
}

Vector PolicyHandle::evaluate(std::size_t s) const {
    if (const auto* d = std::get_if<DirectPolicy>(&impl_))
        return d->table().row(static_cast<Eigen::Index>(s)).transpose();
    return std::get<MlpPolicy>(impl_).evaluate(s);
}

Vector PolicyHandle::grad(std::size_t s, std::size_t a) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(num_params()));
    accumulate_weighted_grad(s, one_hot(a, num_actions()), 1.0, out);
    return out;
}

void PolicyHandle::accumulate_weighted_grad(std::size_t s, const Vector& weights, double scale,
                                            Eigen::Ref<Vector> out) const {
    if (const auto* d = std::get_if<DirectPolicy>(&impl_)) {
        const auto na = static_cast<Eigen::Index>(d->num_actions());
        out.segment(static_cast<Eigen::Index>(s) * na, na) += scale * weights;
        return;
    }
    std::get<MlpPolicy>(impl_).accumulate_weighted_grad(s, weights, scale, out);
}

Vector PolicyHandle::parameters() const {
    return std::visit([](const auto& p) { return p.parameters(); }, impl_);
}

void PolicyHandle::set_parameters(const Vector& params) {
    std::visit([&](auto& p) { p.set_parameters(params); }, impl_);
}

Vector PolicyHandle::project(const Vector& params) const {
    if (const auto* d = std::get_if<DirectPolicy>(&impl_))
        return flatten(project_rows_simplex(unflatten(params, d->num_states(), d->num_actions())));
    return params;
}

PolicyTable PolicyHandle::table() const {
    if (const auto* d = std::get_if<DirectPolicy>(&impl_)) return d->table();
    const auto& m = std::get<MlpPolicy>(impl_);
    PolicyTable t(m.num_states(), m.num_actions());
    for (std::size_t s = 0; s < m.num_states(); ++s)
        t.row(static_cast<Eigen::Index>(s)) = m.evaluate(s).transpose();
    return t;
}

const DirectPolicy& PolicyHandle::direct() const {
    if (const auto* d = std::get_if<DirectPolicy>(&impl_)) return *d;
    throw UnsupportedError("operation requires the direct policy class");
}

} // namespace robust_mdp
