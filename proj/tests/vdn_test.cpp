// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

namespace iqpborn {
namespace {

using testing::random_angles;
using testing::random_graph;

TEST(Vdn, ZeroAnglesGiveOne) {
    const auto g = random_graph(6, 1, 5);
    const auto b = build_observable_basis(6, 3, g);
    const auto batch = LatentBatch::generate(6, 100, 3);
    std::vector<double> th(g.size(), 0.0);
    const auto z = estimate_correlators(th, g, b, batch);
    for (double v : z.values) EXPECT_EQ(v, 1.0);
}

TEST(Vdn, SingleWeightOneGateIsExactAtAnyM) {
    GateGraph g{3, 0, {BitString(3, {1})}};
    const auto b = build_observable_basis(3, 1, g);
    for (std::size_t M : {1U, 7U, 1000U}) {
        const auto z = estimate_correlators(std::vector<double>{0.37}, g, b, LatentBatch::generate(3, M, M));
        EXPECT_EQ(z[0], 1.0);
        EXPECT_NEAR(z[1], std::cos(2 * 0.37), 1e-13);
        EXPECT_EQ(z[2], 1.0);
    }
}

TEST(Vdn, AgreesWithStatevectorOnGraphsWithDependentGates) {
    for (std::uint64_t s = 0; s < 4; ++s) {
        const int n = 5;
        const auto g = random_graph(n, 10 + s, 7);
        const auto b = build_observable_basis(n, 3, g);
        const auto th = random_angles(1, g.size(), s);
        const std::size_t M = 40000;
        const auto z = estimate_correlators(th.row(0), g, b, LatentBatch::generate(n, M, 99 + s));
        const auto exact = exact_correlators(exact_iqp_state(g, th.row(0)).probabilities(), b);
        for (std::size_t k = 0; k < b.size(); ++k) EXPECT_NEAR(z[k], exact[k], 6.0 / std::sqrt(double(M)));
    }
}

TEST(Vdn, NoiseScalesAsInverseSqrtM) {
    const auto g = random_graph(6, 4, 6);
    const auto b = build_observable_basis(6, 2, g);
    const auto th = random_angles(1, g.size(), 8);
    const auto exact = exact_correlators(exact_iqp_state(g, th.row(0)).probabilities(), b);
    auto rms = [&](std::size_t M) {
        double s = 0.0;
        int count = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto z = estimate_correlators(th.row(0), g, b, LatentBatch::generate(6, M, seed));
            for (std::size_t k = 0; k < b.size(); ++k, ++count) s += (z[k] - exact[k]) * (z[k] - exact[k]);
        }
        return std::sqrt(s / count);
    };
    const double ratio = rms(100) / rms(10000);
    EXPECT_GT(ratio, 6.0);
    EXPECT_LT(ratio, 16.0);
}

TEST(Vdn, ResultIndependentOfThreadCount) {
    const auto g = generate_er_graph(20, 4.0, 2);
    const auto b = build_observable_basis(20, 2, g);
    const auto th = random_angles(3, g.size(), 1, 0.2);
    const auto batch = LatentBatch::generate(20, 3000, 5);
    const auto z1 = mixture_correlators(th, g, b, batch, {1, {}});
    const auto z4 = mixture_correlators(th, g, b, batch, {4, {}});
    EXPECT_EQ(z1.values, z4.values);
    std::vector<double> w(b.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::sin(double(k));
    EXPECT_EQ(mixture_vjp(th, g, b, batch, w, {1, {}}).flat(), mixture_vjp(th, g, b, batch, w, {3, {}}).flat());
}

TEST(Vdn, ProgressCallbackSeesEveryChunk) {
    const auto g = random_graph(4, 1, 2);
    const auto b = build_observable_basis(4, 2, g);
    const auto batch = LatentBatch::generate(4, 3 * kLatentChunk + 1, 1);
    std::size_t last = 0;
    std::size_t calls = 0;
    EngineOptions opts{2, [&](std::size_t d, std::size_t total) {
                           ++calls;
                           last = std::max(last, d);
                           EXPECT_EQ(total, 4U);
                       }};
    (void)estimate_correlators(std::vector<double>(g.size(), 0.1), g, b, batch, opts);
    EXPECT_EQ(calls, 4U);
    EXPECT_EQ(last, 4U);
}

TEST(Vdn, GradientMatchesSharedLatentFiniteDifference) {
    for (std::uint64_t s = 0; s < 3; ++s) {
        const int n = 6;
        const auto g = random_graph(n, 20 + s, 6);
        const auto b = build_observable_basis(n, 2, g);
        auto th = random_angles(1, g.size(), 40 + s).flat();
        const auto batch = LatentBatch::generate(n, 500, s);
        const auto grad = correlator_gradient(th, g, b, batch);
        const double h = 1e-6;
        double num = 0.0;
        double den = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            auto tp = th;
            auto tm = th;
            tp[j] += h;
            tm[j] -= h;
            const auto zp = estimate_correlators(tp, g, b, batch);
            const auto zm = estimate_correlators(tm, g, b, batch);
            for (std::size_t k = 0; k < b.size(); ++k) {
                const double fd = (zp[k] - zm[k]) / (2 * h);
                num += (fd - grad(k, j)) * (fd - grad(k, j));
                den += grad(k, j) * grad(k, j);
            }
        }
        EXPECT_LT(std::sqrt(num / den), 1e-6);
    }
}

TEST(Vdn, GradientZeroOutsideActSet) {
    const auto g = random_graph(5, 3, 4);
    const auto b = build_observable_basis(5, 2, g);
    const auto th = random_angles(1, g.size(), 2).flat();
    const auto grad = correlator_gradient(th, g, b, LatentBatch::generate(5, 64, 1));
    for (std::size_t k = 0; k < b.size(); ++k) {
        const auto act = b.act(k);
        for (std::size_t j = 0; j < g.size(); ++j)
            if (std::find(act.begin(), act.end(), j) == act.end()) { EXPECT_EQ(grad(k, j), 0.0); }
    }
}

TEST(Vdn, MixtureVjpIsWeightedDenseGradientOverL) {
    const auto g = random_graph(5, 6, 5);
    const auto b = build_observable_basis(5, 2, g);
    const auto th = random_angles(3, g.size(), 6);
    const auto batch = LatentBatch::generate(5, 700, 2);
    std::vector<double> w(b.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = 0.1 * double(k % 7) - 0.2;
    const auto vjp = mixture_vjp(th, g, b, batch, w);
    for (std::size_t l = 0; l < 3; ++l) {
        const auto dense = correlator_gradient(th.row(l), g, b, batch);
        for (std::size_t j = 0; j < g.size(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < b.size(); ++k) s += w[k] * dense(k, j);
            EXPECT_NEAR(vjp(l, j), s / 3.0, 1e-13);
        }
    }
}

TEST(Vdn, MixtureInvariantUnderComponentPermutation) {
    const auto g = random_graph(5, 6, 5);
    const auto b = build_observable_basis(5, 2, g);
    const auto th = random_angles(3, g.size(), 6);
    AngleTensor perm(3, g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        perm(0, j) = th(2, j);
        perm(1, j) = th(0, j);
        perm(2, j) = th(1, j);
    }
    const auto batch = LatentBatch::generate(5, 1000, 2);
    const auto a = mixture_correlators(th, g, b, batch);
    const auto c = mixture_correlators(perm, g, b, batch);
    for (std::size_t k = 0; k < b.size(); ++k) EXPECT_NEAR(a[k], c[k], 1e-14);
}

TEST(Vdn, ShapeErrors) {
    const auto g = random_graph(4, 1, 2);
    const auto other = random_graph(4, 2, 3);
    const auto b = build_observable_basis(4, 2, g);
    const auto batch = LatentBatch::generate(4, 10, 1);
    EXPECT_THROW((void)estimate_correlators(std::vector<double>(g.size() + 1), g, b, batch), ContractError);
    EXPECT_THROW((void)estimate_correlators(std::vector<double>(other.size()), other, b, batch), ContractError);
    EXPECT_THROW((void)estimate_correlators(std::vector<double>(g.size()), g, b, LatentBatch::generate(5, 10, 1)),
                 ContractError);
}

TEST(LatentBatch, WideLatentsUseBothWords) {
    const auto batch = LatentBatch::generate(100, 64, 3);
    int high = 0;
    for (const auto& y : batch.latents()) high += (y.raw()[1] != 0);
    EXPECT_GT(high, 50);
    const auto again = LatentBatch::generate(100, 64, 3);
    EXPECT_EQ(batch.latents(), again.latents());
}

}  // namespace
}  // namespace iqpborn
