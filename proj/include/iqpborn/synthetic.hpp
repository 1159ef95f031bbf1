// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "iqpborn/encoding.hpp"
#include "iqpborn/rng.hpp"

namespace iqpborn {

/// Correlation matrix with ρ_{fg} = r^{|f−g|}.
[[nodiscard]] inline Eigen::MatrixXd ar1_correlation(int D, double r) {
    Eigen::MatrixXd R(D, D);
    for (int f = 0; f < D; ++f)
        for (int g = 0; g < D; ++g) R(f, g) = std::pow(r, std::abs(f - g));
    return R;
}

/**
 * N rows of a zero-mean Gaussian with correlation R, with every other column
 * passed through exp() so the marginals are not all symmetric. Quantile
 * encoding only sees ranks, so this is a Gaussian copula on the levels.
 */
[[nodiscard]] inline RawTable gaussian_copula_table(const Eigen::MatrixXd& R, std::size_t N, std::uint64_t seed) {
    const auto D = static_cast<int>(R.rows());
    Eigen::LLT<Eigen::MatrixXd> llt(R);
    if (llt.info() != Eigen::Success) throw ContractError("gaussian_copula_table: correlation is not positive definite");
    const Eigen::MatrixXd Lc = llt.matrixL();
    Stream rng(StreamTag::Synthetic, {seed, N, static_cast<std::uint64_t>(D)});
    RawTable t;
    t.N = N;
    t.D = D;
    t.values.resize(N * static_cast<std::size_t>(D));
    for (int f = 0; f < D; ++f) t.columns.push_back("x" + std::to_string(f));
    Eigen::VectorXd g(D);
    for (std::size_t i = 0; i < N; ++i) {
        for (int f = 0; f < D; ++f) g(f) = rng.normal();
        const Eigen::VectorXd x = Lc * g;
        for (int f = 0; f < D; ++f) t.values[i * static_cast<std::size_t>(D) + static_cast<std::size_t>(f)] = f % 2 ? std::exp(x(f)) : x(f);
    }
    return t;
}

}  // namespace iqpborn
