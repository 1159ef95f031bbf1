// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file bitops.hpp
 * @brief Fixed-width bitstrings, Walsh characters and the fast Walsh–Hadamard
 * transform.
 *
 * Bit i of a BitString addresses qubit i. Widths up to 128 are held in two
 * native words so the AND+popcount inner loop of the correlator estimator
 * never touches the heap.
 */

#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iqpborn {

/// Raised when a caller violates a documented precondition.
class ContractError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr int kMaxQubits = 128;

class BitString {
  public:
    constexpr BitString() noexcept = default;
    explicit BitString(int width) : width_(width) {
        if (width < 0 || width > kMaxQubits) {
            throw ContractError("BitString width " + std::to_string(width) +
                                " outside [0, 128]");
        }
    }

    BitString(int width, std::initializer_list<int> qubits) : BitString(width) {
        for (int q : qubits) set(q);
    }

    static BitString from_qubits(int width, std::span<const int> qubits) {
        BitString b(width);
        for (int q : qubits) b.set(q);
        return b;
    }

    /// Low `width` bits of `value` (width ≤ 64).
    static BitString from_word(int width, std::uint64_t value) {
        BitString b(width);
        if (width < 64) value &= (std::uint64_t{1} << width) - 1;
        b.words_[0] = value;
        return b;
    }

    [[nodiscard]] constexpr int width() const noexcept { return width_; }

    [[nodiscard]] bool test(int q) const {
        check_index(q);
        return (words_[q >> 6] >> (q & 63)) & 1U;
    }

    void set(int q, bool v = true) {
        check_index(q);
        const std::uint64_t m = std::uint64_t{1} << (q & 63);
        if (v) {
            words_[q >> 6] |= m;
        } else {
            words_[q >> 6] &= ~m;
        }
    }

    [[nodiscard]] constexpr int popcount() const noexcept {
        return std::popcount(words_[0]) + std::popcount(words_[1]);
    }

    [[nodiscard]] constexpr bool empty() const noexcept {
        return (words_[0] | words_[1]) == 0;
    }

    [[nodiscard]] std::vector<int> qubits() const {
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(popcount()));
        for (int w = 0; w < 2; ++w) {
            std::uint64_t x = words_[w];
            while (x != 0) {
                out.push_back(w * 64 + std::countr_zero(x));
                x &= x - 1;
            }
        }
        return out;
    }

    /// Same bits reinterpreted at a larger width.
    [[nodiscard]] BitString widened(int new_width) const {
        if (new_width < width_) throw ContractError("widened: cannot shrink a BitString");
        BitString b(new_width);
        b.words_ = words_;
        return b;
    }

    [[nodiscard]] constexpr std::uint64_t word(int i) const noexcept { return words_[i]; }

    /// Low 64 bits; meaningful for indexing small state vectors.
    [[nodiscard]] constexpr std::uint64_t low_word() const noexcept { return words_[0]; }

    friend constexpr BitString operator&(BitString a, const BitString& b) noexcept {
        a.words_[0] &= b.words_[0];
        a.words_[1] &= b.words_[1];
        return a;
    }
    friend constexpr BitString operator|(BitString a, const BitString& b) noexcept {
        a.words_[0] |= b.words_[0];
        a.words_[1] |= b.words_[1];
        return a;
    }
    friend constexpr BitString operator^(BitString a, const BitString& b) noexcept {
        a.words_[0] ^= b.words_[0];
        a.words_[1] ^= b.words_[1];
        return a;
    }

    friend constexpr bool operator==(const BitString&, const BitString&) noexcept = default;

    /// Lexicographic on ascending qubit lists, which is the basis ordering.
    friend bool lex_less(const BitString& a, const BitString& b) { return a.qubits() < b.qubits(); }

    /// Word pair accessor for the hot loop, no width bookkeeping.
    [[nodiscard]] constexpr const std::array<std::uint64_t, 2>& raw() const noexcept {
        return words_;
    }
    void set_raw(std::uint64_t lo, std::uint64_t hi) {
        words_ = {lo, hi};
        if (width_ < 128) {
            if (width_ <= 64) {
                words_[1] = 0;
                if (width_ < 64) words_[0] &= (std::uint64_t{1} << width_) - 1;
            } else {
                words_[1] &= (std::uint64_t{1} << (width_ - 64)) - 1;
            }
        }
    }

  private:
    void check_index(int q) const {
        if (q < 0 || q >= width_) {
            throw ContractError("qubit index " + std::to_string(q) + " outside width " +
                                std::to_string(width_));
        }
    }

    std::array<std::uint64_t, 2> words_{0, 0};
    int width_ = 0;
};

/// |a ∩ b| mod 2 on raw words; no width check.
[[nodiscard]] constexpr int parity_unchecked(const BitString& a, const BitString& b) noexcept {
    const auto& x = a.raw();
    const auto& y = b.raw();
    return (std::popcount(x[0] & y[0]) + std::popcount(x[1] & y[1])) & 1;
}

[[nodiscard]] inline int popcount_parity(const BitString& a, const BitString& b) {
    if (a.width() != b.width()) {
        throw ContractError("popcount_parity: width mismatch " + std::to_string(a.width()) +
                            " vs " + std::to_string(b.width()));
    }
    return parity_unchecked(a, b);
}

/// χ_β(x) = (−1)^{β·x}.
[[nodiscard]] inline int walsh_character(const BitString& beta, const BitString& x) {
    if (beta.width() != x.width()) {
        throw ContractError("walsh_character: width mismatch " + std::to_string(beta.width()) +
                            " vs " + std::to_string(x.width()));
    }
    return parity_unchecked(beta, x) != 0 ? -1 : 1;
}

[[nodiscard]] constexpr bool is_power_of_two(std::size_t n) noexcept {
    return n != 0 && (n & (n - 1)) == 0;
}

/**
 * Unnormalized fast Walsh–Hadamard transform in place:
 * out[z] = Σ_x (−1)^{z·x} v[x]. Applying it twice multiplies by the length,
 * so callers divide by 2^m where they need the inverse.
 */
inline void fwht_inplace(std::span<double> v) {
    if (!is_power_of_two(v.size())) {
        throw ContractError("fwht: length " + std::to_string(v.size()) +
                            " is not a power of two");
    }
    const std::size_t n = v.size();
    for (std::size_t h = 1; h < n; h <<= 1) {
        for (std::size_t i = 0; i < n; i += h << 1) {
            for (std::size_t j = i; j < i + h; ++j) {
                const double a = v[j];
                const double b = v[j + h];
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
    }
}

[[nodiscard]] inline std::vector<double> fwht(std::vector<double> v) {
    fwht_inplace(v);
    return v;
}

}  // namespace iqpborn

template <>
struct std::hash<iqpborn::BitString> {
    std::size_t operator()(const iqpborn::BitString& b) const noexcept {
        const auto& w = b.raw();
        std::uint64_t h = w[0] * 0x9E3779B97F4A7C15ULL;
        h ^= (w[1] + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2));
        h ^= static_cast<std::uint64_t>(b.width()) << 56;
        return static_cast<std::size_t>(h);
    }
};
