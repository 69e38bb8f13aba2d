#include "censoring/nn/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace censoring::nn {

namespace {

// splitmix64 finalizer: a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter)
    : seed_(seed), stream_id_(stream_id), counter_(counter) {
    key_lo_ = mix64(seed ^ mix64(stream_id + kGolden));
    key_hi_ = mix64(key_lo_ + mix64(stream_id ^ 0x5851f42d4c957f2dULL));
}

std::uint64_t RngStream::next_u64() noexcept {
    const std::uint64_t c = counter_++;
    return mix64(key_hi_ ^ mix64(c * kGolden + key_lo_));
}

double RngStream::uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() noexcept {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::below(std::uint64_t n) noexcept {
    // Lemire's nearly-divisionless method.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = next_u64();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

std::vector<std::size_t> RngStream::permutation(std::size_t n) noexcept {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(idx));
    return idx;
}

RngStream RngStream::derive(std::uint64_t tag) const noexcept {
    return RngStream(seed_, mix64(stream_id_ * kGolden ^ mix64(tag + 0x2545f4914f6cdd1dULL)));
}

}  // namespace censoring::nn
