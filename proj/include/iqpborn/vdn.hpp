// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file vdn.hpp
 * @brief Van den Nest Monte Carlo estimation of IQP Pauli-Z correlators.
 *
 * For U(θ) = Π_G exp(iθ_G X_G) and a Z-word β,
 *
 *     ⟨Z_β⟩_θ = E_{y ~ Unif{0,1}^n} cos( Σ_{G ∈ act(β)} 2 θ_G ξ_G(y) ),
 *
 * with ξ_G(y) = (−1)^{|G ∩ y|}. Gradients are the closed-form derivative of
 * the same sample average, so a value and gradient evaluated on one
 * LatentBatch share their random numbers.
 *
 * Latents are generated and consumed in fixed chunks of kLatentChunk; chunk c
 * draws from the substream (seed, c) and chunk partial sums are reduced in a
 * fixed pairwise order, making every estimate a pure function of
 * (angles, basis, M, seed) regardless of the worker count.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "iqpborn/bitops.hpp"
#include "iqpborn/gate_graph.hpp"
#include "iqpborn/parallel.hpp"
#include "iqpborn/rng.hpp"

namespace iqpborn {

inline constexpr std::size_t kLatentChunk = 512;

/// L × |𝒢| angles; row ℓ is component ℓ's angle vector.
class AngleTensor {
  public:
    AngleTensor() = default;
    AngleTensor(std::size_t components, std::size_t gates, double fill = 0.0)
        : components_(components), gates_(gates), data_(components * gates, fill) {}

    [[nodiscard]] std::size_t components() const noexcept { return components_; }
    [[nodiscard]] std::size_t gates() const noexcept { return gates_; }
    [[nodiscard]] std::span<double> row(std::size_t l) { return {data_.data() + l * gates_, gates_}; }
    [[nodiscard]] std::span<const double> row(std::size_t l) const {
        return {data_.data() + l * gates_, gates_};
    }
    [[nodiscard]] double& operator()(std::size_t l, std::size_t g) { return data_[l * gates_ + g]; }
    [[nodiscard]] double operator()(std::size_t l, std::size_t g) const {
        return data_[l * gates_ + g];
    }
    [[nodiscard]] std::vector<double>& flat() noexcept { return data_; }
    [[nodiscard]] const std::vector<double>& flat() const noexcept { return data_; }

    friend bool operator==(const AngleTensor&, const AngleTensor&) = default;

  private:
    std::size_t components_ = 0;
    std::size_t gates_ = 0;
    std::vector<double> data_;
};

/// ⟨Z_β⟩ values aligned to one ObservableBasis; M = 0 marks exact values.
struct CorrelatorVector {
    std::uint64_t basis_fingerprint = 0;
    std::vector<double> values;
    std::size_t M = 0;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return values[i]; }
};

inline void check_aligned(const CorrelatorVector& a, const CorrelatorVector& b) {
    if (a.basis_fingerprint != b.basis_fingerprint || a.size() != b.size()) {
        throw ContractError("correlator vectors are not aligned to the same basis");
    }
}

inline void check_aligned(const CorrelatorVector& c, const ObservableBasis& basis) {
    if (c.basis_fingerprint != basis.fingerprint() || c.size() != basis.size()) {
        throw ContractError("correlator vector is not aligned to the basis");
    }
}

class LatentBatch {
  public:
    LatentBatch() = default;

    static LatentBatch generate(int n, std::size_t M, std::uint64_t seed) {
        if (n < 1 || n > kMaxQubits) throw ContractError("LatentBatch: bad width");
        LatentBatch b;
        b.n_ = n;
        b.seed_ = seed;
        b.latents_.resize(M, BitString(n));
        const std::size_t chunks = (M + kLatentChunk - 1) / kLatentChunk;
        for (std::size_t c = 0; c < chunks; ++c) {
            Stream rng(StreamTag::Latent, {seed, c});
            const std::size_t end = std::min(M, (c + 1) * kLatentChunk);
            for (std::size_t i = c * kLatentChunk; i < end; ++i) {
                const std::uint64_t lo = rng.next_u64();
                const std::uint64_t hi = n > 64 ? rng.next_u64() : 0;
                b.latents_[i].set_raw(lo, hi);
            }
        }
        return b;
    }

    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] std::size_t size() const noexcept { return latents_.size(); }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] const std::vector<BitString>& latents() const noexcept { return latents_; }
    [[nodiscard]] std::size_t chunks() const noexcept {
        return (latents_.size() + kLatentChunk - 1) / kLatentChunk;
    }

  private:
    int n_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<BitString> latents_;
};

struct EngineOptions {
    unsigned threads = 1;
    /// Called after each latent chunk with (chunks done, total chunks).
    std::function<void(std::size_t, std::size_t)> progress;
};

/// Dense |basis| × |𝒢| matrix of ∂⟨Z_β⟩/∂θ_G, row-major.
struct GradientMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

namespace detail {

inline void check_shapes(std::size_t gates, const GateGraph& graph, const ObservableBasis& basis,
                         const LatentBatch& batch) {
    if (gates != graph.size()) {
        throw ContractError("angle vector length " + std::to_string(gates) +
                            " does not match |G|=" + std::to_string(graph.size()));
    }
    if (basis.graph_width() != graph.n || basis.graph_size() != graph.size()) {
        throw ContractError("observable basis was built against a different gate graph");
    }
    if (batch.n() != graph.n) {
        throw ContractError("latent batch width " + std::to_string(batch.n()) +
                            " does not match graph width " + std::to_string(graph.n));
    }
    if (batch.size() == 0) throw ContractError("latent batch is empty");
}

/// ξ_G(y) for every gate, as ±1.
inline void gate_signs(const GateGraph& graph, const BitString& y, std::vector<double>& xi) {
    for (std::size_t j = 0; j < graph.gates.size(); ++j) {
        xi[j] = parity_unchecked(graph.gates[j], y) != 0 ? -1.0 : 1.0;
    }
}

/// Runs `body(chunk, begin, end)` over latent chunks and reports progress.
template <class Body>
void for_each_chunk(const LatentBatch& batch, const EngineOptions& opts, Body&& body) {
    const std::size_t chunks = batch.chunks();
    std::atomic<std::size_t> done{0};
    std::mutex progress_mu;
    parallel_for(chunks, opts.threads, [&](std::size_t c) {
        const std::size_t begin = c * kLatentChunk;
        const std::size_t end = std::min(batch.size(), begin + kLatentChunk);
        body(c, begin, end);
        const std::size_t d = done.fetch_add(1) + 1;
        if (opts.progress) {
            std::lock_guard lock(progress_mu);
            opts.progress(d, chunks);
        }
    });
}

}  // namespace detail

/**
 * Mixture correlators (1/L) Σ_ℓ ⟨Z_β⟩_{θ^(ℓ)} on one latent batch shared by
 * all components.
 */
[[nodiscard]] inline CorrelatorVector mixture_correlators(const AngleTensor& theta,
                                                          const GateGraph& graph,
                                                          const ObservableBasis& basis,
                                                          const LatentBatch& batch,
                                                          const EngineOptions& opts = {}) {
    detail::check_shapes(theta.gates(), graph, basis, batch);
    if (theta.components() == 0) throw ContractError("mixture_correlators: no components");
    const std::size_t K = basis.size();
    const std::size_t G = graph.size();
    const std::size_t L = theta.components();
    std::vector<std::vector<double>> partial(batch.chunks());
    detail::for_each_chunk(batch, opts, [&](std::size_t c, std::size_t begin, std::size_t end) {
        std::vector<double> acc(K, 0.0);
        std::vector<double> xi(G);
        std::vector<double> s(G);
        for (std::size_t i = begin; i < end; ++i) {
            detail::gate_signs(graph, batch.latents()[i], xi);
            for (std::size_t l = 0; l < L; ++l) {
                const auto th = theta.row(l);
                for (std::size_t j = 0; j < G; ++j) s[j] = 2.0 * th[j] * xi[j];
                for (std::size_t b = 0; b < K; ++b) {
                    double arg = 0.0;
                    for (auto j : basis.act(b)) arg += s[j];
                    acc[b] += std::cos(arg);
                }
            }
        }
        partial[c] = std::move(acc);
    });
    auto sum = pairwise_reduce(std::move(partial));
    const double scale = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(L));
    for (auto& v : sum) v *= scale;
    return {basis.fingerprint(), std::move(sum), batch.size()};
}

/// (1/M) Σ_y cos(Σ_{G∈act(β)} 2θ_G ξ_G(y)) for every β in the basis.
[[nodiscard]] inline CorrelatorVector estimate_correlators(std::span<const double> theta,
                                                           const GateGraph& graph,
                                                           const ObservableBasis& basis,
                                                           const LatentBatch& batch,
                                                           const EngineOptions& opts = {}) {
    AngleTensor t(1, theta.size());
    std::copy(theta.begin(), theta.end(), t.row(0).begin());
    return mixture_correlators(t, graph, basis, batch, opts);
}

/**
 * ∂⟨Z_β⟩/∂θ_G = (1/M) Σ_y −2 ξ_G(y) sin(arg_β(y)) for G ∈ act(β), exactly 0
 * otherwise.
 */
[[nodiscard]] inline GradientMatrix correlator_gradient(std::span<const double> theta,
                                                        const GateGraph& graph,
                                                        const ObservableBasis& basis,
                                                        const LatentBatch& batch,
                                                        const EngineOptions& opts = {}) {
    detail::check_shapes(theta.size(), graph, basis, batch);
    const std::size_t K = basis.size();
    const std::size_t G = graph.size();
    std::vector<std::vector<double>> partial(batch.chunks());
    detail::for_each_chunk(batch, opts, [&](std::size_t c, std::size_t begin, std::size_t end) {
        std::vector<double> acc(K * G, 0.0);
        std::vector<double> xi(G);
        std::vector<double> s(G);
        for (std::size_t i = begin; i < end; ++i) {
            detail::gate_signs(graph, batch.latents()[i], xi);
            for (std::size_t j = 0; j < G; ++j) s[j] = 2.0 * theta[j] * xi[j];
            for (std::size_t b = 0; b < K; ++b) {
                const auto act = basis.act(b);
                double arg = 0.0;
                for (auto j : act) arg += s[j];
                const double sn = std::sin(arg);
                double* row = acc.data() + b * G;
                for (auto j : act) row[j] -= 2.0 * xi[j] * sn;
            }
        }
        partial[c] = std::move(acc);
    });
    GradientMatrix out{K, G, pairwise_reduce(std::move(partial))};
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (auto& v : out.data) v *= scale;
    return out;
}

/**
 * Vector–Jacobian product of the mixture correlators:
 * out(ℓ, G) = Σ_β w_β ∂⟨Z_β⟩^MoIQP/∂θ^(ℓ)_G, including the 1/L mixture weight.
 * Costs one pass over the batch, the same as the forward estimate.
 */
[[nodiscard]] inline AngleTensor mixture_vjp(const AngleTensor& theta, const GateGraph& graph,
                                             const ObservableBasis& basis,
                                             const LatentBatch& batch,
                                             std::span<const double> weights,
                                             const EngineOptions& opts = {}) {
    detail::check_shapes(theta.gates(), graph, basis, batch);
    if (weights.size() != basis.size()) throw ContractError("mixture_vjp: weight length mismatch");
    const std::size_t K = basis.size();
    const std::size_t G = graph.size();
    const std::size_t L = theta.components();
    std::vector<std::vector<double>> partial(batch.chunks());
    detail::for_each_chunk(batch, opts, [&](std::size_t c, std::size_t begin, std::size_t end) {
        std::vector<double> acc(L * G, 0.0);
        std::vector<double> xi(G);
        std::vector<double> s(G);
        std::vector<double> t(G);
        for (std::size_t i = begin; i < end; ++i) {
            detail::gate_signs(graph, batch.latents()[i], xi);
            for (std::size_t l = 0; l < L; ++l) {
                const auto th = theta.row(l);
                for (std::size_t j = 0; j < G; ++j) {
                    s[j] = 2.0 * th[j] * xi[j];
                    t[j] = 0.0;
                }
                for (std::size_t b = 0; b < K; ++b) {
                    if (weights[b] == 0.0) continue;
                    const auto act = basis.act(b);
                    double arg = 0.0;
                    for (auto j : act) arg += s[j];
                    const double cb = weights[b] * std::sin(arg);
                    for (auto j : act) t[j] += cb;
                }
                double* row = acc.data() + l * G;
                for (std::size_t j = 0; j < G; ++j) row[j] -= 2.0 * xi[j] * t[j];
            }
        }
        partial[c] = std::move(acc);
    });
    auto sum = pairwise_reduce(std::move(partial));
    const double scale = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(L));
    AngleTensor out(L, G);
    for (std::size_t k = 0; k < sum.size(); ++k) out.flat()[k] = sum[k] * scale;
    return out;
}

}  // namespace iqpborn
