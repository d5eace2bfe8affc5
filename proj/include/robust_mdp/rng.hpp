#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>

namespace robust_mdp {

/**
 * Counter-based random stream.
 *
 * The i-th output is a SplitMix64 finalizer applied to `key + (i+1)*golden`,
 * so a stream is fully described by its key and counter. Child streams are
 * derived from the key alone (`split`), which makes results independent of
 * the order in which streams are consumed.
 *
 * Satisfies UniformRandomBitGenerator.
 */
class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed = 0) noexcept;

    /// Independent child stream; does not advance this stream.
    [[nodiscard]] RngStream split(std::uint64_t index) const noexcept;

    result_type operator()() noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Uniform in the open interval (0, 1).
    double uniform_open() noexcept;
    /// Uniform integer in [0, n). n must be positive.
    std::size_t index(std::size_t n) noexcept;
    /// Standard normal (Box-Muller, one draw per call).
    double normal() noexcept;
    /// Unit-rate exponential.
    double exponential() noexcept;
    /// Draws an index with the given (nonnegative, normalized) probabilities.
    std::size_t categorical(std::span<const double> probs) noexcept;

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
    [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

private:
    RngStream(std::uint64_t key, std::uint64_t counter, int) noexcept
        : key_(key), counter_(counter) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

} // namespace robust_mdp
