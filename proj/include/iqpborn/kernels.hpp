// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file kernels.hpp
 * @brief Walsh-diagonal kernel spectra, the data-evaluated Pearson Jacobian,
 * and the MMD² loss with its residual gradient.
 *
 * The Pearson-stabilized kernel is diag(ω_heat) + η JᵀJ with J the P×K
 * Jacobian ∂ρ_{fg}/∂⟨Z_β⟩ at the data. It is kept as diagonal plus low-rank
 * factor; the loss and gradient cost two P×K mat-vecs.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "iqpborn/gate_graph.hpp"
#include "iqpborn/pearson.hpp"
#include "iqpborn/vdn.hpp"

namespace iqpborn {

/// Rows indexed by pairs f<g in row-major order, columns by basis position.
struct PearsonJacobian {
    int D = 0;
    int B = 0;
    std::size_t P = 0;
    std::size_t K = 0;
    std::uint64_t basis_fingerprint = 0;
    std::vector<double> entries;  ///< P×K row-major
    std::vector<std::pair<int, int>> pairs;
    FeatureMoments moments;       ///< data moments the Jacobian was evaluated at
    PearsonMatrix rho;

    [[nodiscard]] double operator()(std::size_t p, std::size_t k) const { return entries[p * K + k]; }
    [[nodiscard]] std::span<const double> row(std::size_t p) const { return {entries.data() + p * K, K}; }

    /// J v.
    [[nodiscard]] std::vector<double> apply(std::span<const double> v) const {
        std::vector<double> out(P, 0.0);
        for (std::size_t p = 0; p < P; ++p) {
            const double* r = entries.data() + p * K;
            double acc = 0.0;
            for (std::size_t k = 0; k < K; ++k) acc += r[k] * v[k];
            out[p] = acc;
        }
        return out;
    }

    /// Jᵀ u.
    [[nodiscard]] std::vector<double> apply_transpose(std::span<const double> u) const {
        std::vector<double> out(K, 0.0);
        for (std::size_t p = 0; p < P; ++p) {
            const double* r = entries.data() + p * K;
            for (std::size_t k = 0; k < K; ++k) out[k] += r[k] * u[p];
        }
        return out;
    }
};

[[nodiscard]] inline std::vector<std::pair<int, int>> feature_pairs(int D) {
    std::vector<std::pair<int, int>> out;
    for (int f = 0; f < D; ++f)
        for (int g = f + 1; g < D; ++g) out.emplace_back(f, g);
    return out;
}

namespace detail {

/// Basis positions of single-qubit and qubit-pair words (npos when absent).
struct LowOrderIndex {
    int n = 0;
    std::vector<std::size_t> single;
    std::vector<std::size_t> pair;

    LowOrderIndex(const ObservableBasis& basis) : n(basis.n()) {
        const auto un = static_cast<std::size_t>(n);
        single.assign(un, ObservableBasis::npos);
        pair.assign(un * un, ObservableBasis::npos);
        for (std::size_t b = 0; b < basis.size(); ++b) {
            const auto qs = basis[b].qubits();
            if (qs.size() == 1) {
                single[static_cast<std::size_t>(qs[0])] = b;
            } else if (qs.size() == 2) {
                pair[static_cast<std::size_t>(qs[0]) * un + static_cast<std::size_t>(qs[1])] = b;
                pair[static_cast<std::size_t>(qs[1]) * un + static_cast<std::size_t>(qs[0])] = b;
            }
        }
    }
    [[nodiscard]] std::size_t at(int q) const { return single[static_cast<std::size_t>(q)]; }
    [[nodiscard]] std::size_t at(int q, int r) const {
        return pair[static_cast<std::size_t>(q) * static_cast<std::size_t>(n) + static_cast<std::size_t>(r)];
    }
};

inline void require_low_order(const ObservableBasis& basis, int D, int B) {
    if (basis.n() != D * B) {
        throw ContractError("basis width " + std::to_string(basis.n()) + " != D*B=" + std::to_string(D * B));
    }
    const LowOrderIndex idx(basis);
    for (int q = 0; q < basis.n(); ++q) {
        if (idx.at(q) == ObservableBasis::npos) throw ContractError("basis lacks weight-1 observables");
        for (int r = q + 1; r < basis.n(); ++r)
            if (idx.at(q, r) == ObservableBasis::npos) throw ContractError("basis lacks weight-2 observables");
    }
}

}  // namespace detail

/**
 * Closed-form ∂ρ_{fg}/∂⟨Z_β⟩ at the data correlators. Only single bits of f
 * or g, cross pairs (f,k)(g,l), and intra-feature pairs of f or g are
 * nonzero; the build visits just those columns.
 */
[[nodiscard]] inline PearsonJacobian pearson_jacobian(const CorrelatorVector& data_corr,
                                                      const ObservableBasis& basis, int D, int B) {
    if (data_corr.M != 0) throw ContractError("pearson_jacobian: data correlators must be exact (M=0)");
    detail::require_low_order(basis, D, B);
    const auto moments = feature_moments(low_order_view(data_corr, basis), D, B);
    if (auto f = degenerate_feature(moments)) {
        throw ContractError("pearson_jacobian: feature " + std::to_string(*f) +
                            " has zero variance; sigma_f division undefined");
    }
    const auto w = level_weights(B);
    const double W = std::ldexp(1.0, B) - 1.0;
    const detail::LowOrderIndex idx(basis);

    PearsonJacobian J;
    J.D = D;
    J.B = B;
    J.pairs = feature_pairs(D);
    J.P = J.pairs.size();
    J.K = basis.size();
    J.basis_fingerprint = basis.fingerprint();
    J.entries.assign(J.P * J.K, 0.0);
    J.moments = moments;
    J.rho = pearson_from_moments(moments);

    auto wk = [&](int k) { return w[static_cast<std::size_t>(k)]; };
    auto var = [&](int f) { return moments.var[static_cast<std::size_t>(f)]; };
    auto TE = [&](int g) {
        double t = 0.0;
        for (int l = 0; l < B; ++l) t += wk(l) * moments.bit_mean(g, l);
        return t;
    };
    // ∂Var[S_f]/∂z₁ at bit k*.
    auto dvar_dz1 = [&](int f, int ks) {
        double s = -0.5 * wk(ks) * wk(ks) * (1.0 - 2.0 * moments.bit_mean(f, ks));
        for (int l = 0; l < B; ++l) {
            if (l == ks) continue;
            s += 2.0 * wk(ks) * wk(l) * (-0.25 + 0.5 * moments.bit_mean(f, l));
        }
        return s;
    };

    for (std::size_t p = 0; p < J.P; ++p) {
        const auto [f, g] = J.pairs[p];
        const double sf = std::sqrt(var(f));
        const double sg = std::sqrt(var(g));
        const double rho = J.rho(f, g);
        double* row = J.entries.data() + p * J.K;
        const double TEf = TE(f);
        const double TEg = TE(g);

        for (int k = 0; k < B; ++k) {
            row[idx.at(f * B + k)] = wk(k) / (sf * sg) * (-W / 4.0 + 0.5 * TEg) -
                                     rho / (2.0 * var(f)) * dvar_dz1(f, k);
            row[idx.at(g * B + k)] = wk(k) / (sf * sg) * (-W / 4.0 + 0.5 * TEf) -
                                     rho / (2.0 * var(g)) * dvar_dz1(g, k);
        }
        for (int k = 0; k < B; ++k)
            for (int l = 0; l < B; ++l) row[idx.at(f * B + k, g * B + l)] = wk(k) * wk(l) / (4.0 * sf * sg);
        for (int k = 0; k < B; ++k) {
            for (int l = k + 1; l < B; ++l) {
                row[idx.at(f * B + k, f * B + l)] = -rho / (2.0 * var(f)) * 0.5 * wk(k) * wk(l);
                row[idx.at(g * B + k, g * B + l)] = -rho / (2.0 * var(g)) * 0.5 * wk(k) * wk(l);
            }
        }
    }
    return J;
}

/**
 * Central-difference Jacobian of the explicit ρ(⟨Z⟩) map around the data
 * correlators. Verification oracle for pearson_jacobian; P×K row-major.
 */
[[nodiscard]] inline std::vector<double> finite_difference_jacobian(const CorrelatorVector& data_corr,
                                                                    const ObservableBasis& basis, int D,
                                                                    int B, double step) {
    if (!(step > 0.0)) throw ContractError("finite_difference_jacobian: step must be > 0");
    detail::require_low_order(basis, D, B);
    const std::size_t K = basis.size();
    const std::size_t P = static_cast<std::size_t>(D) * static_cast<std::size_t>(D - 1) / 2;
    std::vector<double> out(P * K, 0.0);
    auto rho_at = [&](const CorrelatorVector& c) {
        const auto m = feature_moments(low_order_view(c, basis), D, B);
        if (auto f = degenerate_feature(m)) {
            throw ContractError("finite_difference_jacobian: step drives Var[S_" + std::to_string(*f) +
                                "] non-positive");
        }
        return pearson_from_moments(m).upper();
    };
    CorrelatorVector probe = data_corr;
    for (std::size_t k = 0; k < K; ++k) {
        if (basis[k].popcount() > 2) continue;
        const double base = probe.values[k];
        probe.values[k] = base + step;
        const auto up = rho_at(probe);
        probe.values[k] = base - step;
        const auto down = rho_at(probe);
        probe.values[k] = base;
        for (std::size_t p = 0; p < P; ++p) out[p * K + k] = (up[p] - down[p]) / (2.0 * step);
    }
    return out;
}

/// ‖a − b‖_F / ‖b‖_F.
[[nodiscard]] inline double relative_frobenius_error(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractError("relative_frobenius_error: size mismatch");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num) / std::sqrt(den);
}

struct KernelSpectrum {
    std::uint64_t basis_fingerprint = 0;
    std::vector<double> diag_weights;
    double eta = 0.0;
    std::shared_ptr<const PearsonJacobian> jacobian;  ///< null for a pure heat kernel

    [[nodiscard]] std::size_t size() const noexcept { return diag_weights.size(); }
    [[nodiscard]] bool has_correction() const noexcept { return jacobian != nullptr && eta > 0.0; }
};

/// k̂_β = (1/|σ|) Σ_b exp(−2 σ_b² |β|).
[[nodiscard]] inline double heat_weight(int weight, std::span<const double> bandwidths) {
    double s = 0.0;
    for (double sigma : bandwidths) s += std::exp(-2.0 * sigma * sigma * weight);
    return s / static_cast<double>(bandwidths.size());
}

[[nodiscard]] inline KernelSpectrum heat_spectrum(const ObservableBasis& basis,
                                                  std::span<const double> bandwidths) {
    if (bandwidths.empty()) throw ContractError("heat_spectrum: empty bandwidth list");
    for (double s : bandwidths)
        if (!(s > 0.0)) throw ContractError("heat_spectrum: bandwidths must be > 0");
    KernelSpectrum k;
    k.basis_fingerprint = basis.fingerprint();
    k.diag_weights.reserve(basis.size());
    for (const auto& beta : basis.observables()) k.diag_weights.push_back(heat_weight(beta.popcount(), bandwidths));
    for (double v : k.diag_weights)
        if (!(v > 0.0)) throw ContractError("heat_spectrum: weight underflowed to zero; bandwidth too large");
    return k;
}

[[nodiscard]] inline KernelSpectrum assemble_psck(const KernelSpectrum& heat, PearsonJacobian jac, double eta) {
    if (!(eta >= 0.0)) throw ContractError("assemble_psck: eta must be >= 0");
    if (jac.basis_fingerprint != heat.basis_fingerprint || jac.K != heat.size()) {
        throw ContractError("assemble_psck: Jacobian and heat spectrum use different bases");
    }
    KernelSpectrum k = heat;
    k.eta = eta;
    k.jacobian = std::make_shared<const PearsonJacobian>(std::move(jac));
    return k;
}

struct LossAndGradient {
    double loss = 0.0;
    double heat_part = 0.0;     ///< δzᵀ diag δz
    double pearson_part = 0.0;  ///< ‖J δz‖² (before η)
    std::vector<double> grad;   ///< ∂loss/∂δz
};

/// loss = δzᵀ diag(k̂) δz + η ‖J δz‖², δz = model − data.
[[nodiscard]] inline LossAndGradient mmd_loss_and_residual_grad(const CorrelatorVector& model,
                                                                const CorrelatorVector& data,
                                                                const KernelSpectrum& kernel) {
    check_aligned(model, data);
    if (model.basis_fingerprint != kernel.basis_fingerprint || model.size() != kernel.size()) {
        throw ContractError("mmd_loss: kernel basis differs from correlator basis");
    }
    const std::size_t K = model.size();
    LossAndGradient out;
    out.grad.resize(K);
    std::vector<double> dz(K);
    for (std::size_t k = 0; k < K; ++k) {
        dz[k] = model[k] - data[k];
        out.heat_part += kernel.diag_weights[k] * dz[k] * dz[k];
        out.grad[k] = 2.0 * kernel.diag_weights[k] * dz[k];
    }
    out.loss = out.heat_part;
    if (kernel.jacobian) {
        const auto jd = kernel.jacobian->apply(dz);
        for (double v : jd) out.pearson_part += v * v;
        if (kernel.eta > 0.0) {
            out.loss += kernel.eta * out.pearson_part;
            const auto back = kernel.jacobian->apply_transpose(jd);
            for (std::size_t k = 0; k < K; ++k) out.grad[k] += 2.0 * kernel.eta * back[k];
        }
    }
    return out;
}

/// Dense K×K kernel matrix; for inspection and tests only.
[[nodiscard]] inline Eigen::MatrixXd materialize_kernel(const KernelSpectrum& kernel) {
    const auto K = static_cast<Eigen::Index>(kernel.size());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(K, K);
    for (Eigen::Index i = 0; i < K; ++i) M(i, i) = kernel.diag_weights[static_cast<std::size_t>(i)];
    if (kernel.jacobian && kernel.eta > 0.0) {
        const auto& J = *kernel.jacobian;
        const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Jm(
            J.entries.data(), static_cast<Eigen::Index>(J.P), K);
        M.noalias() += kernel.eta * Jm.transpose() * Jm;
    }
    return M;
}

/// λ_max / λ_min of the materialized kernel.
[[nodiscard]] inline double condition_number(const KernelSpectrum& kernel) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(materialize_kernel(kernel), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return ev.maxCoeff() / ev.minCoeff();
}

inline nlohmann::json jacobian_triplets_json(const PearsonJacobian& J, const ObservableBasis& basis) {
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t p = 0; p < J.P; ++p) {
        for (std::size_t k = 0; k < J.K; ++k) {
            const double v = J(p, k);
            if (v != 0.0) {
                entries.push_back({{"f", J.pairs[p].first}, {"g", J.pairs[p].second},
                                   {"observable", basis[k].qubits()}, {"value", v}});
            }
        }
    }
    return {{"D", J.D}, {"B", J.B}, {"P", J.P}, {"K", J.K}, {"entries", std::move(entries)}};
}

inline void write_jacobian_csv(const std::string& path, const PearsonJacobian& J, const ObservableBasis& basis) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "f,g,column,observable,value\n";
    out.precision(17);
    for (std::size_t p = 0; p < J.P; ++p) {
        for (std::size_t k = 0; k < J.K; ++k) {
            const double v = J(p, k);
            if (v == 0.0) continue;
            out << J.pairs[p].first << ',' << J.pairs[p].second << ',' << k << ',';
            const auto qs = basis[k].qubits();
            for (std::size_t i = 0; i < qs.size(); ++i) out << (i ? " " : "") << qs[i];
            out << ',' << v << '\n';
        }
    }
}

}  // namespace iqpborn
