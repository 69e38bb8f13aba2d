#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace censoring::nn {

/// Counter-based random stream. Output n is a keyed bijective hash of the counter n,
/// so a stream is fully described by (seed, stream id, counter) and can be checkpointed
/// and resumed exactly. Distinct stream ids give unrelated sequences.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream() : RngStream(0, 0) {}
    RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter = 0);

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
    result_type operator()() noexcept { return next_u64(); }

    std::uint64_t next_u64() noexcept;
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller; consumes two draws, no cached spare.
    double normal() noexcept;
    /// Uniform integer in [0, n); n must be > 0. Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n) noexcept;

    /// Fisher-Yates in place.
    template <typename T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }
    std::vector<std::size_t> permutation(std::size_t n) noexcept;

    /// Independent child stream, keyed by this stream's identity and `tag`; does not advance this stream.
    RngStream derive(std::uint64_t tag) const noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }
    std::uint64_t counter() const noexcept { return counter_; }

    bool operator==(const RngStream&) const = default;

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t counter_;
    std::uint64_t key_lo_;
    std::uint64_t key_hi_;
};

}  // namespace censoring::nn
