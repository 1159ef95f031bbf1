// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file metrics.hpp
 * @brief Correlation metrics, sampling-free per-feature marginals, W1/KS,
 * the convergence indicator and the gradient-variance scan with its fits.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "iqpborn/diagnostics.hpp"
#include "iqpborn/encoding.hpp"
#include "iqpborn/kernels.hpp"
#include "iqpborn/parallel.hpp"
#include "iqpborn/pearson.hpp"
#include "iqpborn/synthetic.hpp"
#include "iqpborn/vdn.hpp"

namespace iqpborn {

struct CorrelationMetrics {
    double mae_rho = 0.0;
    std::optional<double> r_rho;  ///< absent for fewer than two pairs or a constant vector
    std::size_t pairs = 0;
};

/// Sample Pearson correlation of two equal-length vectors; nullopt if undefined.
[[nodiscard]] inline std::optional<double> vector_pearson(std::span<const double> a, std::span<const double> b) {
    const std::size_t P = a.size();
    if (P < 2 || b.size() != P) return std::nullopt;
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(P);
    mb /= static_cast<double>(P);
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

[[nodiscard]] inline CorrelationMetrics correlation_metrics(const PearsonMatrix& model, const PearsonMatrix& data) {
    if (model.D != data.D) throw ContractError("correlation_metrics: D mismatch");
    const auto a = model.upper();
    const auto b = data.upper();
    CorrelationMetrics m;
    m.pairs = a.size();
    for (std::size_t p = 0; p < a.size(); ++p) m.mae_rho += std::abs(a[p] - b[p]);
    if (!a.empty()) m.mae_rho /= static_cast<double>(a.size());
    m.r_rho = vector_pearson(a, b);
    return m;
}

/// MAE over observables of |β| = weight (weight 0 selects every observable).
[[nodiscard]] inline double mae_z(const CorrelatorVector& model, const CorrelatorVector& data,
                                  const ObservableBasis& basis, int weight = 2) {
    check_aligned(model, data);
    check_aligned(model, basis);
    double s = 0.0;
    std::size_t count = 0;
    for (std::size_t b = 0; b < basis.size(); ++b) {
        if (weight != 0 && basis[b].popcount() != weight) continue;
        s += std::abs(model[b] - data[b]);
        ++count;
    }
    if (count == 0) throw ContractError("mae_z: no observables of weight " + std::to_string(weight));
    return s / static_cast<double>(count);
}

// ---- marginals --------------------------------------------------------------

struct MarginalDistribution {
    int feature = 0;
    std::vector<double> probs;     ///< by integer level, after clip + renormalize
    std::vector<double> pre_clip;  ///< by integer level, straight from the inverse transform
    double pre_clip_negative_mass = 0.0;
};

/// Integer level of a local B-bit pattern (bit k ↔ qubit fB+k, weight 2^{B−1−k}).
[[nodiscard]] inline int local_pattern_level(std::uint64_t pattern, int B) {
    int v = 0;
    for (int k = 0; k < B; ++k)
        if ((pattern >> k) & 1U) v |= 1 << (B - 1 - k);
    return v;
}

/**
 * p(x) = 2^{−B} Σ_β ⟨Z_β⟩ (−1)^{β·x} from the 2^B intra-feature correlators
 * indexed by local mask (entry 0 must be 1). Negatives are clipped and the
 * rest renormalized; clipped mass above 0.05 warns.
 */
[[nodiscard]] inline MarginalDistribution marginal_from_correlators(std::vector<double> z, int B, int feature = 0) {
    const std::size_t dim = std::size_t{1} << B;
    if (z.size() != dim) throw ContractError("marginal_from_correlators: need 2^B correlators");
    fwht_inplace(z);
    MarginalDistribution m;
    m.feature = feature;
    m.pre_clip.assign(dim, 0.0);
    for (std::size_t x = 0; x < dim; ++x)
        m.pre_clip[static_cast<std::size_t>(local_pattern_level(x, B))] = z[x] / static_cast<double>(dim);
    m.probs = m.pre_clip;
    double total = 0.0;
    for (auto& p : m.probs) {
        if (p < 0.0) {
            m.pre_clip_negative_mass -= p;
            p = 0.0;
        }
        total += p;
    }
    if (!(total > 0.0)) throw ContractError("marginal_from_correlators: no positive mass");
    for (auto& p : m.probs) p /= total;
    if (m.pre_clip_negative_mass > 0.05) {
        warn("feature " + std::to_string(feature) + ": clipped negative mass " +
             std::to_string(m.pre_clip_negative_mass) + " exceeds 0.05; Monte Carlo noise too large for the marginal");
    }
    return m;
}

/// Every nonempty subset of feature f's qubits, ordered by local mask.
[[nodiscard]] inline std::vector<BitString> intra_feature_words(int n, int f, int B) {
    std::vector<BitString> out;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << B); ++mask) {
        BitString w(n);
        for (int k = 0; k < B; ++k)
            if ((mask >> k) & 1U) w.set(f * B + k);
        out.push_back(w);
    }
    return out;
}

/// Sampling-free model marginal of feature f from 2^B − 1 estimated correlators.
[[nodiscard]] inline MarginalDistribution recover_marginal(const AngleTensor& theta, const GateGraph& graph, int f,
                                                           int D, int B, std::size_t M, std::uint64_t seed,
                                                           const EngineOptions& opts = {}) {
    if (f < 0 || f >= D) throw ContractError("recover_marginal: feature index out of range");
    const ObservableBasis basis(graph.n, intra_feature_words(graph.n, f, B), graph);
    const auto batch = LatentBatch::generate(graph.n, M, mix_keys({seed, static_cast<std::uint64_t>(f)}));
    const auto corr = mixture_correlators(theta, graph, basis, batch, opts);
    std::vector<double> z(std::size_t{1} << B);
    z[0] = 1.0;
    for (std::size_t b = 0; b < corr.size(); ++b) z[b + 1] = corr[b];
    return marginal_from_correlators(std::move(z), B, f);
}

/// Empirical level histogram of feature f.
[[nodiscard]] inline std::vector<double> level_histogram(const EncodedTable& t, int f) {
    std::vector<double> h(std::size_t{1} << t.B, 0.0);
    for (std::size_t i = 0; i < t.N; ++i) h[static_cast<std::size_t>(t.level(i, f))] += 1.0;
    for (auto& v : h) v /= static_cast<double>(t.N);
    return h;
}

struct DistanceReport {
    double w1 = 0.0;  ///< in integer levels
    double ks = 0.0;
};

[[nodiscard]] inline DistanceReport w1_ks(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw ContractError("w1_ks: support sizes differ");
    DistanceReport r;
    double cp = 0.0;
    double cq = 0.0;
    for (std::size_t v = 0; v < p.size(); ++v) {
        cp += p[v];
        cq += q[v];
        const double d = std::abs(cp - cq);
        r.w1 += d;
        r.ks = std::max(r.ks, d);
    }
    return r;
}

// ---- convergence ------------------------------------------------------------

struct ConvergenceIndicator {
    double delta = 0.0;
    std::string label;
};

/// Mean over the window [E−2w, E−w) minus mean over [E−w, E).
[[nodiscard]] inline ConvergenceIndicator convergence_indicator(std::span<const double> series, std::size_t window = 50) {
    if (series.size() < 2 * window) {
        throw ContractError("convergence_indicator: need at least " + std::to_string(2 * window) + " epochs, got " +
                            std::to_string(series.size()));
    }
    const std::size_t E = series.size();
    double early = 0.0;
    double late = 0.0;
    for (std::size_t i = E - 2 * window; i < E - window; ++i) early += series[i];
    for (std::size_t i = E - window; i < E; ++i) late += series[i];
    ConvergenceIndicator c;
    c.delta = (early - late) / static_cast<double>(window);
    if (std::abs(c.delta) <= 1e-4) {
        c.label = "plateaued";
    } else if (c.delta < 0.0) {
        c.label = "rising";
    } else if (c.delta < 0.005) {
        c.label = "descending mildly";
    } else {
        c.label = "descending";
    }
    return c;
}

// ---- fits -------------------------------------------------------------------

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
    double r2 = 0.0;
    double rss = 0.0;
};

/// Ordinary least squares y = a + b x.
[[nodiscard]] inline LinearFit ols(std::span<const double> x, std::span<const double> y) {
    const std::size_t N = x.size();
    if (N < 2 || y.size() != N) throw ContractError("ols: need at least two paired points");
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(N);
    my /= static_cast<double>(N);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw ContractError("ols: x has zero spread");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < N; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        f.rss += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - f.rss / syy : 1.0;
    f.slope_se = N > 2 ? std::sqrt(f.rss / static_cast<double>(N - 2) / sxx) : 0.0;
    return f;
}

/// log y = log A + b log n.
[[nodiscard]] inline LinearFit power_law_fit(std::span<const double> n, std::span<const double> y) {
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!(n[i] > 0.0) || !(y[i] > 0.0)) throw ContractError("power_law_fit: values must be positive");
        lx.push_back(std::log(n[i]));
        ly.push_back(std::log(y[i]));
    }
    return ols(lx, ly);
}

/// log y = log a − c n; the returned slope is −c.
[[nodiscard]] inline LinearFit exponential_fit(std::span<const double> n, std::span<const double> y) {
    std::vector<double> ly;
    for (double v : y) {
        if (!(v > 0.0)) throw ContractError("exponential_fit: values must be positive");
        ly.push_back(std::log(v));
    }
    return ols(n, ly);
}

// ---- trainability scan ------------------------------------------------------

struct ScanConfig {
    std::vector<int> ns{8, 12, 16, 24};
    int D = 4;  ///< B = n / D
    std::size_t L = 4;
    std::size_t K_init = 50;
    double sigma = 0.1;
    std::size_t M_grad = 2048;
    std::uint64_t graph_seed = 43;
    std::uint64_t seed = 7;
    double avg_degree = 6.0;
    double eta = 5.0;
    std::vector<double> bandwidths{0.5, 1.0, 2.0};
    std::size_t data_rows = 4000;
    double data_corr = 0.6;  ///< AR(1) strength of the synthetic copula
    unsigned threads = 1;
};

struct ScanKernelStats {
    std::vector<double> per_param_variance;
    double pgv_mean = 0.0;
    double pgv_sem = 0.0;
    double pgv_median = 0.0;
    double grad_norm2_mean = 0.0;
    double loss_mean = 0.0;
    [[nodiscard]] double relative_strength() const { return grad_norm2_mean / (loss_mean * loss_mean); }
};

struct ScanRecord {
    int n = 0;
    std::size_t gates = 0;
    std::size_t K_init = 0;
    double sigma = 0.0;
    std::size_t M_grad = 0;
    ScanKernelStats psck;
    ScanKernelStats heat;
};

struct ScanFits {
    LinearFit psck_power;
    LinearFit heat_power;
    LinearFit psck_exp;
    LinearFit heat_exp;
};

namespace detail {

inline ScanKernelStats summarize(const std::vector<std::vector<double>>& grads, const std::vector<double>& losses) {
    ScanKernelStats s;
    const std::size_t K = grads.size();
    const std::size_t P = grads.front().size();
    s.per_param_variance.assign(P, 0.0);
    for (std::size_t p = 0; p < P; ++p) {
        double m = 0.0;
        for (const auto& g : grads) m += g[p];
        m /= static_cast<double>(K);
        double v = 0.0;
        for (const auto& g : grads) v += (g[p] - m) * (g[p] - m);
        s.per_param_variance[p] = v / static_cast<double>(K - 1);
    }
    for (double v : s.per_param_variance) s.pgv_mean += v;
    s.pgv_mean /= static_cast<double>(P);
    double ss = 0.0;
    for (double v : s.per_param_variance) ss += (v - s.pgv_mean) * (v - s.pgv_mean);
    s.pgv_sem = P > 1 ? std::sqrt(ss / static_cast<double>(P - 1) / static_cast<double>(P)) : 0.0;
    auto sorted = s.per_param_variance;
    std::sort(sorted.begin(), sorted.end());
    s.pgv_median = P % 2 ? sorted[P / 2] : 0.5 * (sorted[P / 2 - 1] + sorted[P / 2]);
    for (const auto& g : grads) {
        double n2 = 0.0;
        for (double v : g) n2 += v * v;
        s.grad_norm2_mean += n2;
    }
    s.grad_norm2_mean /= static_cast<double>(K);
    for (double l : losses) s.loss_mean += l;
    s.loss_mean /= static_cast<double>(losses.size());
    return s;
}

}  // namespace detail

/**
 * One scan point: ER graph at graph_seed, quantile-encoded synthetic data,
 * K_init Gaussian initializations, both losses evaluated on the same latent
 * batch per initialization.
 */
[[nodiscard]] inline ScanRecord scan_point(const ScanConfig& cfg, int n) {
    if (cfg.K_init < 2) throw ContractError("bp_scan: K_init must be >= 2");
    if (n % cfg.D != 0) throw ContractError("bp_scan: n=" + std::to_string(n) + " not divisible by D");
    const int B = n / cfg.D;
    const auto graph = generate_er_graph(n, cfg.avg_degree, cfg.graph_seed);
    const auto basis = build_observable_basis(n, 2, graph);
    const auto raw = gaussian_copula_table(ar1_correlation(cfg.D, cfg.data_corr), cfg.data_rows, cfg.seed);
    const auto enc = encode(raw, fit_encoder(raw, B));
    const auto data = data_correlators(enc, basis);
    const auto heat = heat_spectrum(basis, cfg.bandwidths);
    const auto psck = assemble_psck(heat, pearson_jacobian(data, basis, cfg.D, B), cfg.eta);

    ScanRecord rec{n, graph.size(), cfg.K_init, cfg.sigma, cfg.M_grad, {}, {}};
    std::vector<std::vector<double>> g_psck(cfg.K_init);
    std::vector<std::vector<double>> g_heat(cfg.K_init);
    std::vector<double> l_psck(cfg.K_init);
    std::vector<double> l_heat(cfg.K_init);
    parallel_for(cfg.K_init, cfg.threads, [&](std::size_t k) {
        Stream rng(StreamTag::Scan, {cfg.seed, static_cast<std::uint64_t>(n), k});
        AngleTensor theta(cfg.L, graph.size());
        for (auto& v : theta.flat()) v = cfg.sigma * rng.normal();
        const auto batch = LatentBatch::generate(n, cfg.M_grad, mix_keys({cfg.seed, static_cast<std::uint64_t>(n), k}));
        const auto model = mixture_correlators(theta, graph, basis, batch);
        const auto lp = mmd_loss_and_residual_grad(model, data, psck);
        const auto lh = mmd_loss_and_residual_grad(model, data, heat);
        l_psck[k] = lp.loss;
        l_heat[k] = lh.loss;
        g_psck[k] = mixture_vjp(theta, graph, basis, batch, lp.grad).flat();
        g_heat[k] = mixture_vjp(theta, graph, basis, batch, lh.grad).flat();
    });
    rec.psck = detail::summarize(g_psck, l_psck);
    rec.heat = detail::summarize(g_heat, l_heat);
    return rec;
}

[[nodiscard]] inline std::vector<ScanRecord> bp_scan(const ScanConfig& cfg) {
    std::vector<ScanRecord> out;
    for (int n : cfg.ns) out.push_back(scan_point(cfg, n));
    return out;
}

[[nodiscard]] inline ScanFits fit_scan(const std::vector<ScanRecord>& recs) {
    std::vector<double> n;
    std::vector<double> p;
    std::vector<double> h;
    for (const auto& r : recs) {
        n.push_back(r.n);
        p.push_back(r.psck.pgv_mean);
        h.push_back(r.heat.pgv_mean);
    }
    return {power_law_fit(n, p), power_law_fit(n, h), exponential_fit(n, p), exponential_fit(n, h)};
}

inline void write_scan_csv(std::ostream& out, const std::vector<ScanRecord>& recs) {
    out.precision(10);
    out << "n,gates,K_init,sigma,M_grad,pgv_psck,sem_psck,median_psck,pgv_heat,sem_heat,median_heat,"
           "gradnorm2_psck,loss_psck,gradnorm2_heat,loss_heat,rel_psck,rel_heat,rel_ratio\n";
    for (const auto& r : recs) {
        out << r.n << ',' << r.gates << ',' << r.K_init << ',' << r.sigma << ',' << r.M_grad << ',' << r.psck.pgv_mean
            << ',' << r.psck.pgv_sem << ',' << r.psck.pgv_median << ',' << r.heat.pgv_mean << ',' << r.heat.pgv_sem
            << ',' << r.heat.pgv_median << ',' << r.psck.grad_norm2_mean << ',' << r.psck.loss_mean << ','
            << r.heat.grad_norm2_mean << ',' << r.heat.loss_mean << ',' << r.psck.relative_strength() << ','
            << r.heat.relative_strength() << ',' << r.psck.relative_strength() / r.heat.relative_strength() << '\n';
    }
}

}  // namespace iqpborn
