#include "robust_mdp/mdp.hpp"

#include "robust_mdp/errors.hpp"
#include "robust_mdp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace robust_mdp {

TabularMdp::TabularMdp(std::size_t num_states, std::size_t num_actions, std::vector<double> kernel,
                       std::vector<double> cost, double gamma, double radius)
    : num_states_(num_states), num_actions_(num_actions), kernel_(std::move(kernel)),
      cost_(std::move(cost)), gamma_(gamma), radius_(radius) {
    validate();
}

void TabularMdp::validate() const {
    if (num_states_ == 0) throw ParameterError("num_states: must be positive");
    if (num_actions_ == 0) throw ParameterError("num_actions: must be positive");
    if (kernel_.size() != num_states_ * num_actions_ * num_states_)
        throw ParameterError("kernel: expected " +
                             std::to_string(num_states_ * num_actions_ * num_states_) +
                             " entries, got " + std::to_string(kernel_.size()));
    if (cost_.size() != num_states_ * num_actions_)
        throw ParameterError("cost: expected " + std::to_string(num_states_ * num_actions_) +
                             " entries, got " + std::to_string(cost_.size()));
    if (!(gamma_ >= 0.0 && gamma_ < 1.0))
        throw ParameterError("gamma: must lie in [0,1), got " + std::to_string(gamma_));
    if (!(radius_ >= 0.0 && radius_ <= 1.0))
        throw ParameterError("radius: must lie in [0,1], got " + std::to_string(radius_));

    for (std::size_t s = 0; s < num_states_; ++s) {
        for (std::size_t a = 0; a < num_actions_; ++a) {
            const std::string where = "[" + std::to_string(s) + "][" + std::to_string(a) + "]";
            const double c = cost(s, a);
            if (!(c >= 0.0 && c <= 1.0))
                throw ParameterError("cost" + where + ": must lie in [0,1], got " +
                                     std::to_string(c));
            double sum = 0.0;
            for (double x : row(s, a)) {
                if (!std::isfinite(x) || x < 0.0)
                    throw ParameterError("kernel" + where + ": negative or non-finite entry");
                sum += x;
            }
            if (std::abs(sum - 1.0) > kSimplexTolerance)
                throw ParameterError("kernel" + where + ": row sums to " + std::to_string(sum) +
                                     ", not 1");
        }
    }
}

TabularMdp TabularMdp::with_parameters(double gamma, double radius) const {
    return TabularMdp(num_states_, num_actions_, kernel_, cost_, gamma, radius);
}

double garnet_reward(std::size_t s, std::size_t a) noexcept {
    if (s == 0) return a == 0 ? 1.0 : 0.0;
    return a == 1 ? 1.0 : 0.0;
}

TabularMdp garnet_generate(std::size_t num_states, std::size_t num_actions, std::size_t branching,
                           std::uint64_t seed, double gamma, double radius) {
    if (num_states < 2) throw ParameterError("garnet: num_states must be >= 2");
    if (num_actions < 2) throw ParameterError("garnet: num_actions must be >= 2");
    if (branching < 1 || branching > num_states)
        throw ParameterError("garnet: branching must lie in [1, num_states]");

    RngStream rng(seed);
    std::vector<double> kernel(num_states * num_actions * num_states, 0.0);
    std::vector<double> cost(num_states * num_actions);
    std::vector<std::size_t> perm(num_states);
    std::vector<double> mass(branching);

    for (std::size_t s = 0; s < num_states; ++s) {
        for (std::size_t a = 0; a < num_actions; ++a) {
            RngStream row_rng = rng.split(s * num_actions + a);
            // Partial Fisher-Yates: the first `branching` entries are the support.
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            for (std::size_t i = 0; i < branching; ++i) {
                const std::size_t j = i + row_rng.index(num_states - i);
                std::swap(perm[i], perm[j]);
            }
            // Normalized unit exponentials are Dirichlet(1,...,1).
            double total = 0.0;
            for (double& m : mass) {
                m = row_rng.exponential();
                total += m;
            }
            double* out = kernel.data() + (s * num_actions + a) * num_states;
            for (std::size_t i = 0; i < branching; ++i) out[perm[i]] = mass[i] / total;
            cost[s * num_actions + a] = 1.0 - garnet_reward(s, a);
        }
    }
    return TabularMdp(num_states, num_actions, std::move(kernel), std::move(cost), gamma, radius);
}

Vector project_row_simplex(const Vector& v) {
    if (!v.allFinite()) throw NumericError("project_row_simplex: non-finite input");
    const auto n = v.size();
    if (n == 0) throw ParameterError("project_row_simplex: empty input");

    std::vector<double> sorted(v.data(), v.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double threshold = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        cumulative += sorted[j];
        const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (sorted[j] - candidate > 0.0) threshold = candidate;
    }
    return (v.array() - threshold).max(0.0).matrix();
}

Matrix project_rows_simplex(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        out.row(r) = project_row_simplex(m.row(r).transpose()).transpose();
    return out;
}

bool is_distribution(const Vector& v, double tol) {
    if (v.size() == 0 || !v.allFinite()) return false;
    return v.minCoeff() >= -tol && std::abs(v.sum() - 1.0) <= tol;
}

} // namespace robust_mdp
