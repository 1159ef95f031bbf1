// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file gate_graph.hpp
 * @brief Erdős–Rényi gate graphs, Pauli-Z observable bases and activation sets.
 */

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "iqpborn/bitops.hpp"
#include "iqpborn/rng.hpp"

namespace iqpborn {

/// Ordered multiset of qubit-subset masks defining the diagonal block.
struct GateGraph {
    int n = 0;
    std::uint64_t seed = 0;
    std::vector<BitString> gates;

    [[nodiscard]] std::size_t size() const noexcept { return gates.size(); }

    friend bool operator==(const GateGraph&, const GateGraph&) = default;
};

inline void validate(const GateGraph& g) {
    for (std::size_t j = 0; j < g.gates.size(); ++j) {
        if (g.gates[j].width() != g.n) {
            throw ContractError("gate " + std::to_string(j) + " has width " +
                                std::to_string(g.gates[j].width()) + ", graph has n=" +
                                std::to_string(g.n));
        }
        if (g.gates[j].empty()) throw ContractError("gate " + std::to_string(j) + " is empty");
    }
}

/**
 * All n weight-1 gates followed by weight-2 gates {i,j}, one Bernoulli draw
 * per unordered pair in lexicographic order with p = avg_degree/(n−1).
 */
[[nodiscard]] inline GateGraph generate_er_graph(int n, double avg_degree, std::uint64_t seed) {
    if (n < 2) throw ContractError("generate_er_graph: n must be >= 2");
    if (n > kMaxQubits) throw ContractError("generate_er_graph: n exceeds 128");
    if (!(avg_degree > 0.0)) throw ContractError("generate_er_graph: avg_degree must be > 0");
    if (avg_degree >= n - 1) {
        throw ContractError("generate_er_graph: avg_degree " + std::to_string(avg_degree) +
                            " >= n-1 gives edge probability >= 1");
    }
    const double p = avg_degree / static_cast<double>(n - 1);
    GateGraph g{n, seed, {}};
    g.gates.reserve(static_cast<std::size_t>(n) + static_cast<std::size_t>(avg_degree * n));
    for (int i = 0; i < n; ++i) g.gates.push_back(BitString(n, {i}));
    Stream rng(StreamTag::Graph, {seed, static_cast<std::uint64_t>(n)});
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng.uniform() < p) g.gates.push_back(BitString(n, {i, j}));
        }
    }
    return g;
}

inline nlohmann::json to_json(const GateGraph& g) {
    nlohmann::json gates = nlohmann::json::array();
    for (const auto& gate : g.gates) gates.push_back(gate.qubits());
    return {{"n", g.n}, {"seed", g.seed}, {"gates", std::move(gates)}};
}

inline GateGraph graph_from_json(const nlohmann::json& j) {
    GateGraph g;
    g.n = j.at("n").get<int>();
    g.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& gate : j.at("gates")) {
        const auto qs = gate.get<std::vector<int>>();
        g.gates.push_back(BitString::from_qubits(g.n, qs));
    }
    validate(g);
    return g;
}

/// act(β) = { j : |G_j ∩ β| odd }.
[[nodiscard]] inline std::vector<std::uint32_t> compute_act_set(const BitString& beta,
                                                                const GateGraph& g) {
    std::vector<std::uint32_t> act;
    for (std::size_t j = 0; j < g.gates.size(); ++j) {
        if (popcount_parity(g.gates[j], beta) != 0) act.push_back(static_cast<std::uint32_t>(j));
    }
    return act;
}

/**
 * Ordered list of Z-word observables with cached activation sets in CSR
 * layout. The canonical basis orders weight-1 by qubit, then weight-2
 * lexicographically, then weight-3.
 */
class ObservableBasis {
  public:
    ObservableBasis() = default;

    /// Arbitrary observable list against a graph of the same or smaller
    /// observable width (observables are widened to the graph width).
    ObservableBasis(int n, std::vector<BitString> observables, const GateGraph& graph)
        : n_(n), observables_(std::move(observables)) {
        if (graph.n < n) throw ContractError("ObservableBasis: graph narrower than observables");
        offsets_.reserve(observables_.size() + 1);
        for (std::size_t i = 0; i < observables_.size(); ++i) {
            const auto& beta = observables_[i];
            if (beta.width() != n) throw ContractError("ObservableBasis: observable width mismatch");
            if (beta.empty()) throw ContractError("ObservableBasis: empty observable");
            max_weight_ = std::max(max_weight_, beta.popcount());
            auto act = compute_act_set(beta.widened(graph.n), graph);
            act_.insert(act_.end(), act.begin(), act.end());
            offsets_.push_back(act_.size());
            index_.emplace(beta, i);
        }
        graph_width_ = graph.n;
        graph_size_ = graph.size();
    }

    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] int max_weight() const noexcept { return max_weight_; }
    [[nodiscard]] int graph_width() const noexcept { return graph_width_; }
    [[nodiscard]] std::size_t graph_size() const noexcept { return graph_size_; }
    [[nodiscard]] std::size_t size() const noexcept { return observables_.size(); }
    [[nodiscard]] const std::vector<BitString>& observables() const noexcept { return observables_; }
    [[nodiscard]] const BitString& operator[](std::size_t i) const { return observables_.at(i); }

    [[nodiscard]] std::span<const std::uint32_t> act(std::size_t i) const {
        return {act_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    [[nodiscard]] std::size_t total_act() const noexcept { return act_.size(); }

    /// Position of β in the basis, or npos.
    [[nodiscard]] std::size_t find(const BitString& beta) const {
        auto it = index_.find(beta);
        return it == index_.end() ? npos : it->second;
    }
    [[nodiscard]] std::size_t index_of(const BitString& beta) const {
        const auto i = find(beta);
        if (i == npos) throw ContractError("observable not in basis");
        return i;
    }

    /// Order-sensitive fingerprint used to check CorrelatorVector alignment.
    [[nodiscard]] std::uint64_t fingerprint() const {
        std::uint64_t h = mix_keys({static_cast<std::uint64_t>(n_), observables_.size()});
        for (const auto& b : observables_) h = splitmix64(h ^ std::hash<BitString>{}(b));
        return h;
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  private:
    int n_ = 0;
    int max_weight_ = 0;
    int graph_width_ = 0;
    std::size_t graph_size_ = 0;
    std::vector<BitString> observables_;
    std::vector<std::size_t> offsets_{0};  // CSR row starts; a default basis is empty
    std::vector<std::uint32_t> act_;
    std::unordered_map<BitString, std::size_t> index_;
};

/**
 * 𝒪_K = {β : 1 ≤ |β| ≤ K}. For K = 3, a positive `block_size` restricts the
 * weight-3 words to triples inside one block of consecutive qubits (one
 * feature's bits); block_size 0 takes every triple.
 */
[[nodiscard]] inline ObservableBasis build_observable_basis(int n, int max_weight,
                                                            const GateGraph& graph,
                                                            int block_size = 0) {
    if (max_weight < 1 || max_weight > 3) {
        throw ContractError("build_observable_basis: K=" + std::to_string(max_weight) +
                            " outside supported range {1,2,3}");
    }
    std::vector<BitString> obs;
    for (int i = 0; i < n; ++i) obs.push_back(BitString(n, {i}));
    if (max_weight >= 2) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) obs.push_back(BitString(n, {i, j}));
    }
    if (max_weight >= 3) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                for (int k = j + 1; k < n; ++k) {
                    if (block_size > 0 && (i / block_size != k / block_size)) continue;
                    obs.push_back(BitString(n, {i, j, k}));
                }
    }
    return ObservableBasis(n, std::move(obs), graph);
}

/// Index of {i,j}, i<j, inside the canonical K ≥ 2 basis.
[[nodiscard]] constexpr std::size_t pair_index(int n, int i, int j) noexcept {
    const auto ui = static_cast<std::size_t>(i);
    const auto un = static_cast<std::size_t>(n);
    return un + ui * un - ui * (ui + 1) / 2 + static_cast<std::size_t>(j - i - 1);
}

}  // namespace iqpborn
