// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file ciqp.hpp
 * @brief Exact IQP state simulation and the compilation of an L-component
 * mixture into a single IQP circuit on n + ⌈log₂ L⌉ qubits.
 *
 * Compiled angles are the inverse Walsh–Hadamard transform of each gate's
 * angle sequence across components,
 *
 *     φ̃_{j,S} = (1/L_pad) Σ_ℓ (−1)^{ℓ·S} θ_j^(ℓ),
 *
 * attached to the gate G_j ∪ S (S on the ancilla register). Components are
 * zero-padded to L_pad = 2^a, so the data-register marginal of the compiled
 * circuit is the uniform mixture over the L_pad padded components. For
 * power-of-two L that is the model's own mixture.
 */

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iqpborn/bitops.hpp"
#include "iqpborn/gate_graph.hpp"
#include "iqpborn/vdn.hpp"

namespace iqpborn {

inline constexpr int kMaxExactQubits = 22;
inline constexpr double kPruneThreshold = 1e-15;

/// Amplitudes ⟨x|U|0⟩ over 2^n basis states, x indexed by its bitmask.
struct ExactState {
    int n = 0;
    std::vector<std::complex<double>> amplitudes;

    [[nodiscard]] std::vector<double> probabilities() const {
        std::vector<double> p(amplitudes.size());
        for (std::size_t x = 0; x < p.size(); ++x) p[x] = std::norm(amplitudes[x]);
        return p;
    }
    [[nodiscard]] double norm_squared() const {
        double s = 0.0;
        for (const auto& a : amplitudes) s += std::norm(a);
        return s;
    }
};

/**
 * U(θ)|0⟩ = H^n D(θ) H^n |0⟩ computed as WHT(phase)/2^n with
 * phase[y] = Π_G exp(iθ_G (−1)^{|G∩y|}).
 */
[[nodiscard]] inline ExactState exact_iqp_state(const GateGraph& graph, std::span<const double> angles) {
    if (graph.n > kMaxExactQubits) {
        throw ContractError("exact_iqp_state: " + std::to_string(graph.n) + " qubits exceeds the limit of " +
                            std::to_string(kMaxExactQubits));
    }
    if (angles.size() != graph.size()) throw ContractError("exact_iqp_state: angle count != |G|");
    const std::size_t dim = std::size_t{1} << graph.n;
    std::vector<std::uint64_t> masks(graph.size());
    for (std::size_t j = 0; j < graph.size(); ++j) masks[j] = graph.gates[j].low_word();
    std::vector<double> re(dim);
    std::vector<double> im(dim);
    for (std::size_t y = 0; y < dim; ++y) {
        double phase = 0.0;
        for (std::size_t j = 0; j < masks.size(); ++j) {
            phase += (std::popcount(masks[j] & y) & 1) ? -angles[j] : angles[j];
        }
        re[y] = std::cos(phase);
        im[y] = std::sin(phase);
    }
    fwht_inplace(re);
    fwht_inplace(im);
    ExactState s{graph.n, std::vector<std::complex<double>>(dim)};
    const double scale = 1.0 / static_cast<double>(dim);
    for (std::size_t x = 0; x < dim; ++x) s.amplitudes[x] = {re[x] * scale, im[x] * scale};
    return s;
}

/// Exact ⟨Z_β⟩ of a distribution over 2^n outcomes for every basis word
/// (words may be narrower than the distribution, e.g. data qubits only).
[[nodiscard]] inline CorrelatorVector exact_correlators(std::span<const double> probs,
                                                        const ObservableBasis& basis) {
    std::vector<double> spectrum(probs.begin(), probs.end());
    fwht_inplace(spectrum);
    std::vector<double> out(basis.size());
    for (std::size_t b = 0; b < basis.size(); ++b) {
        const auto idx = basis[b].low_word();
        if (idx >= spectrum.size()) throw ContractError("exact_correlators: observable outside register");
        out[b] = spectrum[idx];
    }
    return {basis.fingerprint(), std::move(out), 0};
}

/// (1/L) Σ_ℓ |A_ℓ(x)|² over the rows of theta.
[[nodiscard]] inline std::vector<double> mixture_distribution(const GateGraph& graph, const AngleTensor& theta) {
    std::vector<double> p;
    for (std::size_t l = 0; l < theta.components(); ++l) {
        const auto probs = exact_iqp_state(graph, theta.row(l)).probabilities();
        if (p.empty()) p.assign(probs.size(), 0.0);
        for (std::size_t x = 0; x < p.size(); ++x) p[x] += probs[x];
    }
    for (auto& v : p) v /= static_cast<double>(theta.components());
    return p;
}

/// Exact mixture correlators from per-component statevectors.
[[nodiscard]] inline CorrelatorVector exact_mixture_correlators(const GateGraph& graph, const AngleTensor& theta,
                                                                const ObservableBasis& basis) {
    return exact_correlators(mixture_distribution(graph, theta), basis);
}

/// Σ over the top `ancillas` bits of a joint distribution on n_data + ancillas qubits.
[[nodiscard]] inline std::vector<double> data_marginal(std::span<const double> joint, int n_data) {
    const std::size_t dim = std::size_t{1} << n_data;
    std::vector<double> p(dim, 0.0);
    for (std::size_t z = 0; z < joint.size(); ++z) p[z & (dim - 1)] += joint[z];
    return p;
}

[[nodiscard]] constexpr int ancilla_count(std::size_t L) noexcept {
    int a = 0;
    while ((std::size_t{1} << a) < L) ++a;
    return a;
}

struct CompiledGate {
    std::size_t base_index = 0;
    std::uint32_t ancilla_subset = 0;  ///< bit k ↔ ancilla qubit n_data + k
    double angle = 0.0;
};

struct CompiledCircuit {
    int n_data = 0;
    int a = 0;
    std::size_t L = 0;
    std::size_t L_pad = 0;
    GateGraph graph;                  ///< on n_data + a qubits
    std::vector<CompiledGate> gates;  ///< parallel to graph.gates
    std::size_t pruned = 0;
    std::string provenance;

    [[nodiscard]] std::vector<double> angles() const {
        std::vector<double> out;
        out.reserve(gates.size());
        for (const auto& g : gates) out.push_back(g.angle);
        return out;
    }
};

/// Zero-padded copy of theta with L_pad = 2^⌈log₂ L⌉ rows.
[[nodiscard]] inline AngleTensor pad_components(const AngleTensor& theta) {
    const std::size_t L_pad = std::size_t{1} << ancilla_count(theta.components());
    AngleTensor out(L_pad, theta.gates());
    std::copy(theta.flat().begin(), theta.flat().end(), out.flat().begin());
    return out;
}

/**
 * Per base gate j, L_pad compiled gates G_j ∪ S with angles
 * WHT(θ_j padded)[S] / L_pad, ordered by (j, S). With `prune`, gates with
 * |φ̃| < 1e-15 are dropped and counted.
 */
[[nodiscard]] inline CompiledCircuit compile(const GateGraph& base, const AngleTensor& theta, bool prune = true,
                                             std::string provenance = {}) {
    if (theta.components() == 0) throw ContractError("compile: L must be >= 1");
    if (theta.gates() != base.size()) throw ContractError("compile: angle tensor does not match graph");
    CompiledCircuit c;
    c.n_data = base.n;
    c.L = theta.components();
    c.a = ancilla_count(c.L);
    c.L_pad = std::size_t{1} << c.a;
    c.provenance = std::move(provenance);
    if (c.n_data + c.a > kMaxQubits) throw ContractError("compile: n + a exceeds 128 qubits");
    c.graph.n = c.n_data + c.a;
    c.graph.seed = base.seed;
    std::vector<double> seq(c.L_pad);
    for (std::size_t j = 0; j < base.size(); ++j) {
        std::fill(seq.begin(), seq.end(), 0.0);
        for (std::size_t l = 0; l < c.L; ++l) seq[l] = theta(l, j);
        fwht_inplace(seq);
        const BitString wide = base.gates[j].widened(c.graph.n);
        for (std::size_t S = 0; S < c.L_pad; ++S) {
            const double phi = seq[S] / static_cast<double>(c.L_pad);
            if (prune && std::abs(phi) < kPruneThreshold) {
                ++c.pruned;
                continue;
            }
            BitString mask = wide;
            for (int k = 0; k < c.a; ++k)
                if ((S >> k) & 1U) mask.set(c.n_data + k);
            c.graph.gates.push_back(mask);
            c.gates.push_back({j, static_cast<std::uint32_t>(S), phi});
        }
    }
    return c;
}

/// Φ_j(ℓ) = Σ_S (−1)^{ℓ·S} φ̃_{j,S}: the per-component angles the compiled
/// circuit applies, L_pad × |G| (unpruned circuits only).
[[nodiscard]] inline AngleTensor effective_component_angles(const CompiledCircuit& c, std::size_t base_gates) {
    AngleTensor out(c.L_pad, base_gates);
    std::vector<std::vector<double>> seq(base_gates, std::vector<double>(c.L_pad, 0.0));
    for (const auto& g : c.gates) seq[g.base_index][g.ancilla_subset] = g.angle;
    for (std::size_t j = 0; j < base_gates; ++j) {
        fwht_inplace(seq[j]);
        for (std::size_t l = 0; l < c.L_pad; ++l) out(l, j) = seq[j][l];
    }
    return out;
}

inline nlohmann::json to_json(const CompiledCircuit& c) {
    nlohmann::json gates = nlohmann::json::array();
    for (std::size_t i = 0; i < c.gates.size(); ++i) {
        std::vector<int> data;
        std::vector<int> anc;
        for (int q : c.graph.gates[i].qubits()) {
            if (q < c.n_data) {
                data.push_back(q);
            } else {
                anc.push_back(q - c.n_data);
            }
        }
        gates.push_back({{"qubits", data}, {"ancillas", anc}, {"angle", c.gates[i].angle}});
    }
    return {{"n_data", c.n_data}, {"a", c.a}, {"gates", std::move(gates)}, {"provenance", c.provenance}};
}

inline void write_flat_text(std::ostream& out, const CompiledCircuit& c) {
    out.precision(17);
    for (std::size_t i = 0; i < c.gates.size(); ++i) {
        std::vector<int> data;
        std::vector<int> anc;
        for (int q : c.graph.gates[i].qubits()) (q < c.n_data ? data : anc).push_back(q < c.n_data ? q : q - c.n_data);
        for (std::size_t k = 0; k < data.size(); ++k) out << (k ? " " : "") << data[k];
        out << " |";
        for (int q : anc) out << ' ' << q;
        out << " | " << c.gates[i].angle << '\n';
    }
}

struct ExactReport {
    std::size_t L = 0;
    std::size_t L_pad = 0;
    int total_qubits = 0;
    double max_discrepancy = 0.0;           ///< vs the padded mixture the circuit realizes
    double max_discrepancy_unpadded = 0.0;  ///< vs the L-component mixture (nonzero unless L = L_pad)
    double compiled_norm_error = 0.0;
};

/**
 * Exact check at small n: data-register marginal of the compiled state
 * against (1/L_pad) Σ_ℓ |A_ℓ(x)|² from per-component statevectors.
 */
[[nodiscard]] inline ExactReport verify_exact(const GateGraph& base, const AngleTensor& theta) {
    const auto compiled = compile(base, theta, /*prune=*/false);
    return [&] {
        ExactReport r;
        r.L = compiled.L;
        r.L_pad = compiled.L_pad;
        r.total_qubits = compiled.graph.n;
        if (compiled.graph.n > kMaxExactQubits) {
            throw ContractError("verify_exact: n + a = " + std::to_string(compiled.graph.n) + " exceeds " +
                                std::to_string(kMaxExactQubits));
        }
        const auto state = exact_iqp_state(compiled.graph, compiled.angles());
        r.compiled_norm_error = std::abs(state.norm_squared() - 1.0);
        const auto marginal = data_marginal(state.probabilities(), base.n);
        const auto padded = mixture_distribution(base, pad_components(theta));
        const auto plain = mixture_distribution(base, theta);
        for (std::size_t x = 0; x < marginal.size(); ++x) {
            r.max_discrepancy = std::max(r.max_discrepancy, std::abs(marginal[x] - padded[x]));
            r.max_discrepancy_unpadded = std::max(r.max_discrepancy_unpadded, std::abs(marginal[x] - plain[x]));
        }
        return r;
    }();
}

struct VdnReport {
    std::size_t M = 0;
    std::size_t observables = 0;
    double mae = 0.0;
    double ratio = 0.0;  ///< MAE / M^{−1/2}
};

/// 𝒪₂ on the data register.
[[nodiscard]] inline std::vector<BitString> weight_le2_words(int n) {
    std::vector<BitString> obs;
    for (int i = 0; i < n; ++i) obs.push_back(BitString(n, {i}));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) obs.push_back(BitString(n, {i, j}));
    return obs;
}

/**
 * Compares 𝒪₂ correlators of the padded mixture and of the compiled circuit
 * on independent latent streams; returns MAE in units of M^{−1/2}.
 */
[[nodiscard]] inline VdnReport compare_vdn(const GateGraph& base, const AngleTensor& theta,
                                           const CompiledCircuit& compiled, std::size_t M, std::uint64_t seed,
                                           const EngineOptions& opts = {}) {
    const auto words = weight_le2_words(base.n);
    const ObservableBasis mix_basis(base.n, words, base);
    const ObservableBasis comp_basis(base.n, words, compiled.graph);
    const auto mix_batch = LatentBatch::generate(base.n, M, mix_keys({static_cast<std::uint64_t>(StreamTag::Verify), seed, 0}));
    const auto comp_batch =
        LatentBatch::generate(compiled.graph.n, M, mix_keys({static_cast<std::uint64_t>(StreamTag::Verify), seed, 1}));
    const auto zm = mixture_correlators(pad_components(theta), base, mix_basis, mix_batch, opts);
    AngleTensor ct(1, compiled.gates.size());
    const auto ang = compiled.angles();
    std::copy(ang.begin(), ang.end(), ct.row(0).begin());
    const auto zc = mixture_correlators(ct, compiled.graph, comp_basis, comp_batch, opts);
    VdnReport r;
    r.M = M;
    r.observables = words.size();
    for (std::size_t b = 0; b < words.size(); ++b) r.mae += std::abs(zm[b] - zc[b]);
    r.mae /= static_cast<double>(words.size());
    r.ratio = r.mae * std::sqrt(static_cast<double>(M));
    return r;
}

[[nodiscard]] inline VdnReport verify_vdn(const GateGraph& base, const AngleTensor& theta, std::size_t M,
                                          std::uint64_t seed, const EngineOptions& opts = {}) {
    return compare_vdn(base, theta, compile(base, theta, /*prune=*/false), M, seed, opts);
}

}  // namespace iqpborn
