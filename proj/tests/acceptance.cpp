// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "test_util.hpp"

using namespace iqpborn;
using iqpborn::testing::random_angles;
using iqpborn::testing::random_graph;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

EncodedTable synthetic_encoded(int D, int B, std::size_t N, std::uint64_t seed) {
    const auto raw = gaussian_copula_table(ar1_correlation(D, 0.6), N, seed);
    return encode(raw, fit_encoder(raw, B));
}

TrainConfig small_config(int D, int B, std::size_t L, std::size_t epochs, std::size_t M, std::uint64_t seed) {
    TrainConfig c;
    c.D = D;
    c.B = B;
    c.n = D * B;
    c.L = L;
    c.epochs = epochs;
    c.M = M;
    c.avg_degree = 2.0;
    c.user_seed = seed;
    return c;
}

// 1. Compiled circuit reproduces the mixture exactly.
Outcome cIQP_exactness() {
    const int ns[] = {2, 3, 4};
    const std::size_t Ls[] = {1, 2, 3, 4, 8};
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const int n = ns[i % 3];
        const std::size_t L = Ls[(i / 3) % 5];
        const auto g = random_graph(n, 1000 + static_cast<std::uint64_t>(i), 3);
        const auto r = verify_exact(g, random_angles(L, g.size(), 2000 + static_cast<std::uint64_t>(i)));
        worst = std::max(worst, r.max_discrepancy);
    }
    return {worst < 1e-12, fmt("50 checkpoints, max |Pr - p| = %.3g (bound 1e-12)", worst)};
}

// 2. Monte Carlo agreement of compiled circuit and mixture.
Outcome cIQP_vdn() {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto g = generate_er_graph(16, 3.0, 500 + s);
        const auto r = verify_vdn(g, random_angles(8, g.size(), 600 + s, 0.3), 10000, 700 + s);
        worst = std::max(worst, r.ratio);
    }
    const auto enc = synthetic_encoded(4, 2, 4000, 3);
    std::vector<double> trained;
    for (std::uint64_t s = 0; s < 3; ++s) {
        auto c = small_config(4, 2, 4, 300, 1024, 90 + s);
        c.learning_rate = 0.05;
        auto st = init_model(c);
        auto basis = training_basis(c, st.graph);
        auto data = data_correlators(enc, basis);
        const auto prob = make_problem(c, std::move(basis), std::move(data));
        train_until(st, prob);
        trained.push_back(verify_vdn(st.graph, st.theta, 10000, 800 + s).ratio);
    }
    bool in_band = true;
    for (double r : trained) in_band = in_band && r >= 0.3 && r <= 1.5;
    return {worst < 5.0 && in_band,
            fmt("random n=16 L=8: max ratio %.3f (bound 5); trained n=8 L=4: %.3f %.3f %.3f (band [0.3, 1.5])", worst,
                trained[0], trained[1], trained[2])};
}

// 3. Closed-form Pearson Jacobian versus central differences.
Outcome jacobian() {
    const auto enc = synthetic_encoded(8, 2, 5000, 7);
    const auto g = generate_er_graph(16, 2.0, 7);
    const auto basis = build_observable_basis(16, 2, g);
    const auto z = data_correlators(enc, basis);
    const auto J = pearson_jacobian(z, basis, 8, 2);
    const double err = relative_frobenius_error(J.entries, finite_difference_jacobian(z, basis, 8, 2, 1e-5));
    return {err < 1e-9, fmt("D=8 B=2 relative Frobenius error %.3g (bound 1e-9)", err)};
}

// 4. Estimator agrees with the statevector oracle.
Outcome estimator() {
    const std::size_t M = 100000;
    const double tol = 5.0 / std::sqrt(static_cast<double>(M));
    std::size_t total = 0;
    std::size_t within = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const int n = 3 + static_cast<int>(s % 6);
        const auto g = random_graph(n, 3000 + s, 2 * n);
        const auto b = build_observable_basis(n, n >= 3 ? 3 : 2, g);
        const auto th = random_angles(1, g.size(), 3100 + s);
        const auto z = estimate_correlators(th.row(0), g, b, LatentBatch::generate(n, M, 3200 + s));
        const auto exact = exact_correlators(exact_iqp_state(g, th.row(0)).probabilities(), b);
        for (std::size_t k = 0; k < b.size(); ++k, ++total) within += std::abs(z[k] - exact[k]) <= tol;
    }
    const double frac = static_cast<double>(within) / static_cast<double>(total);
    return {frac >= 0.99, fmt("%zu/%zu observables within 5/sqrt(M) (%.4f, need >= 0.99)", within, total, frac)};
}

// 5. Analytic gradient versus shared-latent central differences.
Outcome gradient() {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 6; ++s) {
        const int n = 2 + static_cast<int>(s % 5);
        const auto g = random_graph(n, 4000 + s, n + 2);
        const auto b = build_observable_basis(n, n >= 3 ? 3 : 2, g);
        const auto th = random_angles(1, g.size(), 4100 + s).flat();
        const auto batch = LatentBatch::generate(n, 1000, 4200 + s);
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
        worst = std::max(worst, std::sqrt(num / den));
    }
    return {worst < 1e-6, fmt("max relative error %.3g over 6 circuits n<=6 (bound 1e-6)", worst)};
}

// 6. Forward-inverse Walsh round trip of component angles.
Outcome wht_round_trip() {
    double worst = 0.0;
    for (std::size_t L : {1U, 2U, 3U, 4U, 5U, 6U, 8U, 16U}) {
        const auto g = random_graph(6, 5000 + L, 5);
        const auto th = random_angles(L, g.size(), 5100 + L);
        const auto back = effective_component_angles(compile(g, th, false), g.size());
        for (std::size_t l = 0; l < back.components(); ++l)
            for (std::size_t j = 0; j < g.size(); ++j)
                worst = std::max(worst, std::abs(back(l, j) - (l < L ? th(l, j) : 0.0)));
    }
    return {worst < 1e-12, fmt("L in {1,2,3,4,5,6,8,16}: max angle error %.3g (bound 1e-12)", worst)};
}

// 7. Compiled gate count equals |G| times padded L.
Outcome gate_count() {
    bool ok = true;
    std::size_t checked = 0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto g = generate_er_graph(8 + 4 * static_cast<int>(s), 3.0, 42 + s);
        for (std::size_t L : {1U, 2U, 3U, 4U, 8U}) {
            const auto c = compile(g, random_angles(L, g.size(), s * 10 + L), false);
            ok = ok && c.gates.size() == g.size() * c.L_pad;
            ++checked;
        }
    }
    GateGraph toy{2, 0, {BitString(2, {0}), BitString(2, {0, 1})}};
    std::vector<std::size_t> counts;
    for (std::size_t L : {1U, 2U, 4U}) counts.push_back(compile(toy, random_angles(L, 2, L), false).gates.size());
    ok = ok && counts == std::vector<std::size_t>{2, 4, 8};
    return {ok, fmt("%zu graph/L pairs exact; toy graph counts %zu/%zu/%zu (want 2/4/8)", checked, counts[0], counts[1],
                    counts[2])};
}

// 8. Weight-1 plus weight-2 observable count.
Outcome basis_count() {
    bool ok = true;
    std::size_t at64 = 0;
    for (int n : {16, 24, 32, 48, 64}) {
        const auto g = generate_er_graph(n, 2.0, 1);
        const std::size_t k = build_observable_basis(n, 2, g).size();
        ok = ok && k == static_cast<std::size_t>(n + n * (n - 1) / 2);
        if (n == 64) at64 = k;
    }
    return {ok && at64 == 2080, fmt("|O_2| = %zu at n=64 (want 2080); n + n(n-1)/2 for all n", at64)};
}

// 9. Training recovers a planted mixture.
Outcome self_consistency() {
    auto c = small_config(4, 2, 2, 3000, 4096, 42);
    c.learning_rate = 0.05;
    auto st = init_model(c);
    const auto planted = random_angles(2, st.graph.size(), 142, 0.4);
    auto basis = training_basis(c, st.graph);
    auto data = exact_mixture_correlators(st.graph, planted, basis);
    const auto prob = make_problem(c, std::move(basis), std::move(data));
    train_until(st, prob);
    const auto fit = exact_mixture_correlators(st.graph, st.theta, prob.basis);
    const double mz = mae_z(fit, prob.data, prob.basis, 2);
    const auto rho = try_pearson_from_correlators(fit, prob.basis, c.D, c.B);
    const double mr = rho ? mae_against(*rho, prob.data_rho) : std::nan("");
    return {mz < 0.02 && mr < 0.02,
            fmt("n=8 L=2 PSCK, %zu epochs: MAE_z %.4f, MAE_rho %.4f (bounds 0.02)", c.epochs, mz, mr)};
}

// 10. PSCK at zero weight reproduces heat-kernel training bit for bit.
Outcome psck_reduction() {
    const auto enc = synthetic_encoded(4, 2, 3000, 11);
    auto run = [&](KernelKind kind) {
        auto c = small_config(4, 2, 2, 150, 512, 17);
        c.kernel_kind = kind;
        c.eta = 0.0;
        auto st = init_model(c);
        auto basis = training_basis(c, st.graph);
        auto data = data_correlators(enc, basis);
        const auto prob = make_problem(c, std::move(basis), std::move(data));
        train_until(st, prob);
        return st;
    };
    const auto a = run(KernelKind::Psck);
    const auto b = run(KernelKind::Heat);
    bool same = a.history.size() == b.history.size() && a.theta.flat() == b.theta.flat();
    for (std::size_t i = 0; same && i < a.history.size(); ++i) same = a.history[i].same_trajectory(b.history[i]);
    return {same, fmt("%zu epochs, histories and angles %s", a.history.size(), same ? "identical" : "differ")};
}

// 11. Fitter exactness and reduced gradient-variance scan.
Outcome scan() {
    const std::vector<double> n{8, 12, 16, 24};
    std::vector<double> y;
    for (double v : n) y.push_back(0.7 * std::pow(v, 1.5));
    const auto planted = power_law_fit(n, y);
    const bool fit_ok = std::abs(planted.slope - 1.5) < 1e-12 && std::abs(planted.r2 - 1.0) < 1e-12;
    const auto fits = fit_scan(bp_scan(ScanConfig{}));
    const double z = std::abs(fits.psck_power.slope) / fits.psck_power.slope_se;
    const bool scan_ok = fits.heat_power.slope > 1.0 && fits.heat_power.slope_se < 0.5 && z < 2.0;
    return {fit_ok && scan_ok, fmt("planted b=%.3f R2=%.3f; heat b=%.3f +- %.3f; PSCK b=%.3f +- %.3f (|b|/se=%.2f)",
                                   planted.slope, planted.r2, fits.heat_power.slope, fits.heat_power.slope_se,
                                   fits.psck_power.slope, fits.psck_power.slope_se, z)};
}

// 12. Sampling-free marginals versus the exact distribution.
Outcome marginals() {
    const std::size_t M = 20000;
    const double tol = 5.0 / std::sqrt(static_cast<double>(M));
    double worst = 0.0;
    double worst_norm = 0.0;
    for (auto [D, B] : {std::pair{2, 4}, std::pair{4, 2}, std::pair{2, 3}, std::pair{3, 2}}) {
        const int n = D * B;
        const auto g = generate_er_graph(n, 2.0, static_cast<std::uint64_t>(10 * D + B));
        const auto th = random_angles(3, g.size(), static_cast<std::uint64_t>(D + 7 * B), 0.5);
        const auto exact = mixture_distribution(g, th);
        for (int f = 0; f < D; ++f) {
            const auto m = recover_marginal(th, g, f, D, B, M, 13);
            std::vector<double> ref(std::size_t{1} << B, 0.0);
            for (std::size_t x = 0; x < exact.size(); ++x) {
                const auto lv = bits_to_levels(BitString::from_word(n, x), D, B);
                ref[static_cast<std::size_t>(lv[static_cast<std::size_t>(f)])] += exact[x];
            }
            double total = 0.0;
            for (std::size_t v = 0; v < ref.size(); ++v) {
                worst = std::max(worst, std::abs(m.pre_clip[v] - ref[v]));
                total += m.pre_clip[v];
            }
            worst_norm = std::max(worst_norm, std::abs(total - 1.0));
        }
    }
    return {worst <= tol && worst_norm < 1e-12,
            fmt("max level error %.4f (bound %.4f); max |sum - 1| %.2g", worst, tol, worst_norm)};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"cIQP exactness", 10, cIQP_exactness},
        {"cIQP Monte Carlo bound", 60, cIQP_vdn},
        {"Jacobian verification", 5, jacobian},
        {"estimator correctness", 60, estimator},
        {"analytic gradient", 30, gradient},
        {"Walsh round trip", 0, wht_round_trip},
        {"gate-count identity", 0, gate_count},
        {"observable-basis count", 0, basis_count},
        {"end-to-end self-consistency", 0, self_consistency},
        {"PSCK reduction", 0, psck_reduction},
        {"scan fitter", 300, scan},
        {"marginal recovery", 0, marginals},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& c = criteria[i];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.budget_s <= 0 || secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::string timing = fmt("%.1fs", secs);
        if (c.budget_s > 0) timing += fmt(" of %.0fs", c.budget_s);
        std::printf("%s criterion %2zu %-28s %s [%s]\n", pass ? "PASS" : "FAIL", i + 1, c.name, o.detail.c_str(),
                    timing.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
