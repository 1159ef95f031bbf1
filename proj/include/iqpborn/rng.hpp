// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file rng.hpp
 * @brief Seed-keyed random streams.
 *
 * Every stochastic quantity in the library is drawn from a Stream keyed by a
 * tuple of integers (run seed, purpose tag, epoch, chunk, ...). The engine is
 * std::mt19937_64, whose output sequence is fixed by the standard; the
 * real-valued conversions below are spelled out so results do not depend on
 * the standard library's distribution implementations.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace iqpborn {

/// Purpose tags mixed into stream keys so unrelated draws never collide.
enum class StreamTag : std::uint64_t {
    Graph = 0x67726170,
    Init = 0x696e6974,
    Latent = 0x6c61746e,
    Split = 0x73706c74,
    Scan = 0x7363616e,
    Synthetic = 0x73796e74,
    Verify = 0x76657266,
};

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t mix_keys(std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = 0x243F6A8885A308D3ULL;
    for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
    return h;
}

class Stream {
  public:
    explicit Stream(std::uint64_t key) : engine_(splitmix64(key)) {}
    Stream(StreamTag tag, std::initializer_list<std::uint64_t> keys)
        : Stream(mix_with_tag(tag, keys)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal by Box–Muller; the spare deviate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    /// Uniform integer in [0, bound) by rejection, bound > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        std::uint64_t x = 0;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

  private:
    static std::uint64_t mix_with_tag(StreamTag tag, std::initializer_list<std::uint64_t> keys) {
        std::uint64_t h = mix_keys({static_cast<std::uint64_t>(tag)});
        for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
        return h;
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace iqpborn
