// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file pearson.hpp
 * @brief Pearson matrices of binary-encoded features as algebraic functions
 * of weight ≤ 2 Z-correlators.
 *
 * Feature f occupies qubits fB..fB+B−1 with S_f = Σ_k w_k b_{f,k},
 * w_k = 2^{B−1−k} and b = (1 − Z)/2. Means and (co)variances of S are
 * quadratic forms in the bit moments E[b] = (1 − z₁)/2 and
 * E[b b'] = (1 − z₁ − z₁' + z₂)/4.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iqpborn/gate_graph.hpp"
#include "iqpborn/vdn.hpp"

namespace iqpborn {

/// D×D symmetric matrix with unit diagonal; NaN marks undefined entries.
struct PearsonMatrix {
    int D = 0;
    std::vector<double> values;

    PearsonMatrix() = default;
    explicit PearsonMatrix(int d)
        : D(d), values(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), 0.0) {
        for (int f = 0; f < d; ++f) (*this)(f, f) = 1.0;
    }
    [[nodiscard]] double& operator()(int f, int g) {
        return values[static_cast<std::size_t>(f) * static_cast<std::size_t>(D) +
                      static_cast<std::size_t>(g)];
    }
    [[nodiscard]] double operator()(int f, int g) const {
        return values[static_cast<std::size_t>(f) * static_cast<std::size_t>(D) +
                      static_cast<std::size_t>(g)];
    }

    /// Off-diagonal entries f<g in row-major pair order.
    [[nodiscard]] std::vector<double> upper() const {
        std::vector<double> out;
        for (int f = 0; f < D; ++f)
            for (int g = f + 1; g < D; ++g) out.push_back((*this)(f, g));
        return out;
    }
};

/// Sample Pearson matrix of the columns of an N×D row-major table. Pairs
/// involving a zero-variance column are NaN.
[[nodiscard]] inline PearsonMatrix pearson_of_columns(std::span<const double> rows, std::size_t N,
                                                      int D) {
    const auto d = static_cast<std::size_t>(D);
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t f = 0; f < d; ++f) mean[f] += rows[i * d + f];
    for (auto& m : mean) m /= static_cast<double>(N);
    std::vector<double> cov(d * d, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t f = 0; f < d; ++f) {
            const double a = rows[i * d + f] - mean[f];
            for (std::size_t g = f; g < d; ++g) cov[f * d + g] += a * (rows[i * d + g] - mean[g]);
        }
    }
    PearsonMatrix p(D);
    for (std::size_t f = 0; f < d; ++f) {
        for (std::size_t g = f + 1; g < d; ++g) {
            const double vf = cov[f * d + f];
            const double vg = cov[g * d + g];
            const double r = (vf > 0.0 && vg > 0.0) ? cov[f * d + g] / std::sqrt(vf * vg)
                                                    : std::numeric_limits<double>::quiet_NaN();
            p(static_cast<int>(f), static_cast<int>(g)) = r;
            p(static_cast<int>(g), static_cast<int>(f)) = r;
        }
    }
    return p;
}

/// Dense single- and two-qubit correlator tables over n = D·B qubits.
struct LowOrderCorrelators {
    int n = 0;
    std::vector<double> z1;  ///< ⟨Z_q⟩
    std::vector<double> z2;  ///< ⟨Z_q Z_r⟩, symmetric n×n, diagonal 1

    [[nodiscard]] double pair(int q, int r) const {
        return z2[static_cast<std::size_t>(q) * static_cast<std::size_t>(n) +
                  static_cast<std::size_t>(r)];
    }
};

[[nodiscard]] inline LowOrderCorrelators low_order_view(const CorrelatorVector& corr,
                                                        const ObservableBasis& basis) {
    check_aligned(corr, basis);
    const int n = basis.n();
    LowOrderCorrelators lo{n, std::vector<double>(static_cast<std::size_t>(n)),
                           std::vector<double>(static_cast<std::size_t>(n) *
                                                   static_cast<std::size_t>(n),
                                               1.0)};
    for (int q = 0; q < n; ++q) lo.z1[static_cast<std::size_t>(q)] = corr[basis.index_of(BitString(n, {q}))];
    for (int q = 0; q < n; ++q) {
        for (int r = q + 1; r < n; ++r) {
            const double v = corr[basis.index_of(BitString(n, {q, r}))];
            lo.z2[static_cast<std::size_t>(q) * static_cast<std::size_t>(n) + static_cast<std::size_t>(r)] = v;
            lo.z2[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(q)] = v;
        }
    }
    return lo;
}

/// Level weights w_k = 2^{B−1−k}.
[[nodiscard]] inline std::vector<double> level_weights(int B) {
    std::vector<double> w(static_cast<std::size_t>(B));
    for (int k = 0; k < B; ++k) w[static_cast<std::size_t>(k)] = std::ldexp(1.0, B - 1 - k);
    return w;
}

/// Feature-level second moments derived from bit moments.
struct FeatureMoments {
    int D = 0;
    int B = 0;
    std::vector<double> E;    ///< E[b_{f,k}], D×B
    std::vector<double> var;  ///< Var[S_f]
    std::vector<double> cov;  ///< Cov[S_f,S_g], D×D (diagonal = var)

    [[nodiscard]] double bit_mean(int f, int k) const {
        return E[static_cast<std::size_t>(f) * static_cast<std::size_t>(B) + static_cast<std::size_t>(k)];
    }
    [[nodiscard]] double covariance(int f, int g) const {
        return cov[static_cast<std::size_t>(f) * static_cast<std::size_t>(D) + static_cast<std::size_t>(g)];
    }
};

[[nodiscard]] inline FeatureMoments feature_moments(const LowOrderCorrelators& z, int D, int B) {
    if (z.n != D * B) {
        throw ContractError("feature_moments: n=" + std::to_string(z.n) + " != D*B=" +
                            std::to_string(D * B));
    }
    const auto w = level_weights(B);
    const auto d = static_cast<std::size_t>(D);
    const auto b = static_cast<std::size_t>(B);
    FeatureMoments m{D, B, std::vector<double>(d * b), std::vector<double>(d), std::vector<double>(d * d)};
    for (int q = 0; q < z.n; ++q) m.E[static_cast<std::size_t>(q)] = 0.5 * (1.0 - z.z1[static_cast<std::size_t>(q)]);

    auto bit_cov = [&](int q, int r) {
        const double Eq = m.E[static_cast<std::size_t>(q)];
        const double Er = m.E[static_cast<std::size_t>(r)];
        if (q == r) return Eq * (1.0 - Eq);
        const double ebb = 0.25 * (1.0 - z.z1[static_cast<std::size_t>(q)] -
                                   z.z1[static_cast<std::size_t>(r)] + z.pair(q, r));
        return ebb - Eq * Er;
    };

    for (int f = 0; f < D; ++f) {
        for (int g = f; g < D; ++g) {
            double c = 0.0;
            if (f == g) {
                for (int k = 0; k < B; ++k) {
                    c += w[static_cast<std::size_t>(k)] * w[static_cast<std::size_t>(k)] * bit_cov(f * B + k, f * B + k);
                    for (int l = k + 1; l < B; ++l) {
                        c += 2.0 * w[static_cast<std::size_t>(k)] * w[static_cast<std::size_t>(l)] *
                             bit_cov(f * B + k, f * B + l);
                    }
                }
                m.var[static_cast<std::size_t>(f)] = c;
            } else {
                for (int k = 0; k < B; ++k)
                    for (int l = 0; l < B; ++l)
                        c += w[static_cast<std::size_t>(k)] * w[static_cast<std::size_t>(l)] *
                             bit_cov(f * B + k, g * B + l);
            }
            m.cov[static_cast<std::size_t>(f) * d + static_cast<std::size_t>(g)] = c;
            m.cov[static_cast<std::size_t>(g) * d + static_cast<std::size_t>(f)] = c;
        }
    }
    return m;
}

/// Index of the first feature with non-positive variance, if any.
[[nodiscard]] inline std::optional<int> degenerate_feature(const FeatureMoments& m) {
    for (int f = 0; f < m.D; ++f)
        if (!(m.var[static_cast<std::size_t>(f)] > 0.0)) return f;
    return std::nullopt;
}

[[nodiscard]] inline PearsonMatrix pearson_from_moments(const FeatureMoments& m) {
    if (auto f = degenerate_feature(m)) {
        throw ContractError("feature " + std::to_string(*f) + " has non-positive variance " +
                            std::to_string(m.var[static_cast<std::size_t>(*f)]));
    }
    PearsonMatrix p(m.D);
    for (int f = 0; f < m.D; ++f) {
        for (int g = f + 1; g < m.D; ++g) {
            const double r = m.covariance(f, g) /
                             std::sqrt(m.var[static_cast<std::size_t>(f)] * m.var[static_cast<std::size_t>(g)]);
            p(f, g) = r;
            p(g, f) = r;
        }
    }
    return p;
}

/// Exact map ⟨Z⟩ ↦ ρ. Throws ContractError naming a zero-variance feature.
[[nodiscard]] inline PearsonMatrix pearson_from_correlators(const CorrelatorVector& corr,
                                                            const ObservableBasis& basis, int D,
                                                            int B) {
    return pearson_from_moments(feature_moments(low_order_view(corr, basis), D, B));
}

/// As pearson_from_correlators, but nullopt instead of throwing on a
/// degenerate feature (noisy model estimates early in training).
[[nodiscard]] inline std::optional<PearsonMatrix> try_pearson_from_correlators(
    const CorrelatorVector& corr, const ObservableBasis& basis, int D, int B) {
    const auto m = feature_moments(low_order_view(corr, basis), D, B);
    if (degenerate_feature(m)) return std::nullopt;
    return pearson_from_moments(m);
}

}  // namespace iqpborn
