#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace glab {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A block of
// four 32-bit words is a pure function of (counter, key), so any draw can be
// addressed directly by its coordinates instead of by stream position.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            ctr = single_round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static constexpr Counter single_round(const Counter& c, const Key& k) noexcept {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

// Maps two 32-bit words to a double in the open interval (0, 1) on the
// 52-bit midpoint lattice; 53 bits would let the top value round to 1.
constexpr double open_unit_interval(std::uint32_t a, std::uint32_t b) noexcept {
    const std::uint64_t hi = a >> 6;  // 26 bits
    const std::uint64_t lo = b >> 6;  // 26 bits
    return (static_cast<double>((hi << 26) | lo) + 0.5) * 0x1.0p-52;
}

// Address of a single Gaussian draw. `lane` separates independent families of
// draws that share (path, step), e.g. bridge refinements of one increment.
struct DrawAddress {
    std::uint64_t path = 0;
    std::uint32_t step = 0;
    std::uint32_t lane = 0;
};

class NormalSource {
public:
    explicit constexpr NormalSource(std::uint64_t seed) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    // Box-Muller pair for the given address.
    std::pair<double, double> pair(const DrawAddress& at) const noexcept {
        const Philox4x32::Counter ctr{at.step, at.lane, static_cast<std::uint32_t>(at.path),
                                      static_cast<std::uint32_t>(at.path >> 32)};
        const auto w = Philox4x32::block(ctr, key_);
        const double u1 = open_unit_interval(w[0], w[1]);
        const double u2 = open_unit_interval(w[2], w[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(theta), r * std::sin(theta)};
    }

    double operator()(const DrawAddress& at) const noexcept { return pair(at).first; }

    double uniform(const DrawAddress& at) const noexcept {
        const Philox4x32::Counter ctr{at.step, at.lane, static_cast<std::uint32_t>(at.path),
                                      static_cast<std::uint32_t>(at.path >> 32)};
        const auto w = Philox4x32::block(ctr, key_);
        return open_unit_interval(w[0], w[1]);
    }

private:
    Philox4x32::Key key_;
};

}  // namespace glab
