#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace trailsim {

// Stream tags keep independent uses of the generator on disjoint counter
// spaces: pixel noise draws and payload bit draws never collide.
inline constexpr std::uint32_t kNoiseStream = 1;
inline constexpr std::uint32_t kPayloadStream = 2;

// Philox 4x32-10 counter-based generator. Each (key, counter) pair maps to
// four independent 32-bit words, so noise draws can be indexed directly by
// (seed, frame, pixel) without any sequential state. This is what makes the
// parallel kernels schedule-independent: thread count never changes which
// random value a pixel sees.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    static constexpr std::uint32_t kMult0 = 0xD2511F53u;
    static constexpr std::uint32_t kMult1 = 0xCD9E8D57u;

    static Counter block(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            ctr = one_round(ctr, key);
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

private:
    static void mul_hilo(std::uint32_t a, std::uint32_t b,
                         std::uint32_t& hi, std::uint32_t& lo) {
        const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        hi = static_cast<std::uint32_t>(p >> 32);
        lo = static_cast<std::uint32_t>(p);
    }

    static Counter one_round(const Counter& ctr, const Key& key) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mul_hilo(kMult0, ctr[0], hi0, lo0);
        mul_hilo(kMult1, ctr[2], hi1, lo1);
        return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
};

// Uniform double in (0,1]: never returns 0 so log() below is safe.
inline double u32_to_unit_double(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t v = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
    return (static_cast<double>(v & ((1ull << 53) - 1)) + 1.0) * 0x1p-53;
}

// One standard-normal draw addressed by (seed, stream, frame, cell).
// stream separates independent uses (e.g. pixel noise vs bit generation).
inline double normal_at(std::uint64_t seed, std::uint32_t stream,
                        std::uint64_t frame, std::uint64_t cell) {
    const Philox4x32::Key key = {static_cast<std::uint32_t>(seed),
                                 static_cast<std::uint32_t>(seed >> 32)};
    const Philox4x32::Counter ctr = {
        static_cast<std::uint32_t>(frame),
        static_cast<std::uint32_t>(frame >> 32) ^ stream,
        static_cast<std::uint32_t>(cell),
        static_cast<std::uint32_t>(cell >> 32)};
    const auto r = Philox4x32::block(ctr, key);
    const double u1 = u32_to_unit_double(r[0], r[1]);
    const double u2 = u32_to_unit_double(r[2], r[3]);
    // Box-Muller; u1 in (0,1] keeps the log finite.
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Uniform bit addressed the same way (for i.i.d. payload generation).
inline int bit_at(std::uint64_t seed, std::uint32_t stream,
                  std::uint64_t frame, std::uint64_t cell) {
    const Philox4x32::Key key = {static_cast<std::uint32_t>(seed),
                                 static_cast<std::uint32_t>(seed >> 32)};
    const Philox4x32::Counter ctr = {
        static_cast<std::uint32_t>(frame),
        static_cast<std::uint32_t>(frame >> 32) ^ stream,
        static_cast<std::uint32_t>(cell),
        static_cast<std::uint32_t>(cell >> 32)};
    const auto r = Philox4x32::block(ctr, key);
    return static_cast<int>(r[0] & 1u);
}

} // namespace trailsim
