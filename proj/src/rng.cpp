#include "robust_mdp/rng.hpp"

#include <cmath>
#include <numbers>

namespace robust_mdp {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
} // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed) noexcept : key_(mix64(seed + kGolden)) {}

RngStream RngStream::split(std::uint64_t index) const noexcept {
    return RngStream(mix64(key_ ^ mix64(index + 0x632be59bd9b4e019ULL)), 0, 0);
}

RngStream::result_type RngStream::operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

std::size_t RngStream::index(std::size_t n) noexcept {
    const auto range = static_cast<std::uint64_t>(n);
    // Rejection keeps the draw exactly uniform.
    const std::uint64_t limit = max() - max() % range;
    std::uint64_t x = (*this)();
    while (x >= limit) x = (*this)();
    return static_cast<std::size_t>(x % range);
}

double RngStream::normal() noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::exponential() noexcept { return -std::log(uniform_open()); }

std::size_t RngStream::categorical(std::span<const double> probs) noexcept {
    const double u = uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        acc += probs[i];
        last_positive = i;
        if (u < acc) return i;
    }
    // Round-off left u above the final partial sum.
    return last_positive;
}

} // namespace robust_mdp
