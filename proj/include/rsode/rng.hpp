#pragma once

#include <cstdint>
#include <limits>

namespace rsode {

namespace detail {

[[nodiscard]] constexpr std::uint64_t splitmix_finalize(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace detail

/// Counter-based random stream keyed by (seed, stream_id).
///
/// The output sequence is SplitMix64 started from a key derived from the
/// pair, so equal pairs give bitwise-identical sequences on every platform.
/// Substreams are derived from the key only (not from the position), which
/// lets a Monte Carlo loop hand sample i its own stream `substream(i)`: the
/// draws of a sample never depend on how many draws earlier samples used, on
/// chunking, or on the thread count.
///
/// Satisfies UniformRandomBitGenerator.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
        : seed_(seed),
          stream_id_(stream_id),
          key_(detail::splitmix_finalize(detail::splitmix_finalize(seed + detail::kGolden) ^
                                         (stream_id * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL))) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

    [[nodiscard]] RngStream substream(std::uint64_t index) const noexcept {
        RngStream child = *this;
        child.key_ = detail::splitmix_finalize(key_ ^ detail::splitmix_finalize(index + 0x632BE59BD9B4E019ULL));
        child.counter_ = 0;
        return child;
    }

    std::uint64_t operator()() noexcept {
        ++counter_;
        return detail::splitmix_finalize(key_ + counter_ * detail::kGolden);
    }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace rsode
