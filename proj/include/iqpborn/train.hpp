// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file train.hpp
 * @brief Mixture-of-IQP model state, Adam with cosine restarts over the
 * Walsh-diagonal MMD loss, and JSON checkpoints.
 *
 * One epoch draws a fresh latent batch keyed by (user_seed, epoch), forms the
 * mixture correlators, evaluates the loss and its residual gradient, pulls the
 * gradient back through the estimator in a single vector–Jacobian pass and
 * takes one Adam step. Everything except wall time is a pure function of the
 * config and the data correlators, so resumed runs are bit-identical.
 */

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iqpborn/gate_graph.hpp"
#include "iqpborn/kernels.hpp"
#include "iqpborn/pearson.hpp"
#include "iqpborn/rng.hpp"
#include "iqpborn/vdn.hpp"

namespace iqpborn {

enum class KernelKind { Psck, Heat };

inline std::string to_string(KernelKind k) { return k == KernelKind::Psck ? "psck" : "heat"; }

inline KernelKind parse_kernel_kind(const std::string& s) {
    if (s == "psck") return KernelKind::Psck;
    if (s == "heat") return KernelKind::Heat;
    throw ContractError("unknown kernel kind '" + s + "' (expected psck or heat)");
}

struct TrainConfig {
    int n = 64;
    int D = 8;
    int B = 8;
    std::size_t L = 8;
    int K = 2;
    std::size_t epochs = 1500;
    double learning_rate = 0.02;
    std::size_t restart_period = 100;
    std::size_t M = 4096;
    double eta = 5.0;
    std::vector<double> bandwidths{0.5, 1.0, 2.0};
    std::uint64_t user_seed = 42;
    double init_sigma = 0.1;
    KernelKind kernel_kind = KernelKind::Psck;
    double avg_degree = 6.0;
    std::uint64_t split_seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const {
        if (D < 1 || B < 1) throw ContractError("config: D and B must be >= 1");
        if (n != D * B) {
            throw ContractError("config: n=" + std::to_string(n) + " must equal D*B=" + std::to_string(D * B));
        }
        if (L < 1) throw ContractError("config: L must be >= 1");
        if (K < 2 || K > 3) throw ContractError("config: K must be 2 or 3 (Pearson needs weight-2 words)");
        if (M < 1) throw ContractError("config: M must be >= 1");
        if (!(learning_rate > 0.0)) throw ContractError("config: learning_rate must be > 0");
        if (!(eta >= 0.0)) throw ContractError("config: eta must be >= 0");
        if (!(init_sigma >= 0.0)) throw ContractError("config: init_sigma must be >= 0");
        if (bandwidths.empty()) throw ContractError("config: bandwidths must be non-empty");
    }

    /// The loss actually used: a heat kernel is PSCK at η = 0.
    [[nodiscard]] double effective_eta() const { return kernel_kind == KernelKind::Heat ? 0.0 : eta; }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"n", c.n},
         {"D", c.D},
         {"B", c.B},
         {"L", c.L},
         {"K", c.K},
         {"epochs", c.epochs},
         {"learning_rate", c.learning_rate},
         {"restart_period", c.restart_period},
         {"M", c.M},
         {"eta", c.eta},
         {"bandwidths", c.bandwidths},
         {"user_seed", c.user_seed},
         {"init_sigma", c.init_sigma},
         {"kernel_kind", to_string(c.kernel_kind)},
         {"avg_degree", c.avg_degree},
         {"split_seed", c.split_seed},
         {"adam", {{"beta1", c.adam_beta1}, {"beta2", c.adam_beta2}, {"eps", c.adam_eps}}}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
    TrainConfig d;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    c = d;
    get("D", c.D);
    get("B", c.B);
    c.n = c.D * c.B;
    get("n", c.n);
    get("L", c.L);
    get("K", c.K);
    get("epochs", c.epochs);
    get("learning_rate", c.learning_rate);
    get("restart_period", c.restart_period);
    get("M", c.M);
    get("eta", c.eta);
    get("bandwidths", c.bandwidths);
    get("user_seed", c.user_seed);
    get("init_sigma", c.init_sigma);
    get("avg_degree", c.avg_degree);
    get("split_seed", c.split_seed);
    if (j.contains("kernel_kind")) c.kernel_kind = parse_kernel_kind(j.at("kernel_kind").get<std::string>());
    if (j.contains("adam")) {
        const auto& a = j.at("adam");
        if (a.contains("beta1")) a.at("beta1").get_to(c.adam_beta1);
        if (a.contains("beta2")) a.at("beta2").get_to(c.adam_beta2);
        if (a.contains("eps")) a.at("eps").get_to(c.adam_eps);
    }
}

/// lr₀ · ½(1 + cos(π t_c / T)), t_c = epoch mod T; hard restarts, floor 0.
[[nodiscard]] inline double cosine_lr(std::size_t epoch, double lr0, std::size_t period) {
    if (period == 0) return lr0;
    const double tc = static_cast<double>(epoch % period);
    return 0.5 * lr0 * (1.0 + std::cos(std::numbers::pi * tc / static_cast<double>(period)));
}

struct EpochRecord {
    std::size_t epoch = 0;
    double loss = 0.0;
    double mae_rho = 0.0;  ///< NaN when the model Pearson matrix is undefined
    double lr = 0.0;
    double wall_ms = 0.0;

    /// Everything but wall time.
    [[nodiscard]] bool same_trajectory(const EpochRecord& o) const {
        auto eq = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
        return epoch == o.epoch && eq(loss, o.loss) && eq(mae_rho, o.mae_rho) && eq(lr, o.lr);
    }
};

struct TrainState {
    GateGraph graph;
    AngleTensor theta;
    AngleTensor adam_m;
    AngleTensor adam_v;
    std::size_t epoch = 0;  ///< epochs completed
    std::vector<EpochRecord> history;
};

[[nodiscard]] inline std::uint64_t epoch_latent_seed(std::uint64_t user_seed, std::size_t epoch) {
    return mix_keys({static_cast<std::uint64_t>(StreamTag::Latent), user_seed, epoch});
}

/// Graph at user_seed + 1, Θ ~ N(0, init_sigma²) keyed by user_seed, zero moments.
[[nodiscard]] inline TrainState init_model(const TrainConfig& c) {
    c.validate();
    TrainState s;
    s.graph = generate_er_graph(c.n, c.avg_degree, c.user_seed + 1);
    s.theta = AngleTensor(c.L, s.graph.size());
    Stream rng(StreamTag::Init, {c.user_seed});
    for (auto& v : s.theta.flat()) v = c.init_sigma * rng.normal();
    s.adam_m = AngleTensor(c.L, s.graph.size());
    s.adam_v = AngleTensor(c.L, s.graph.size());
    return s;
}

/// Everything an epoch needs besides the mutable state.
struct TrainingProblem {
    TrainConfig config;
    ObservableBasis basis;
    CorrelatorVector data;
    KernelSpectrum kernel;
    std::vector<double> data_rho;  ///< f<g entries
};

[[nodiscard]] inline ObservableBasis training_basis(const TrainConfig& c, const GateGraph& graph) {
    return build_observable_basis(c.n, c.K, graph, c.K == 3 ? c.B : 0);
}

/// Builds the kernel from exact data correlators aligned to `basis`.
[[nodiscard]] inline TrainingProblem make_problem(const TrainConfig& c, ObservableBasis basis, CorrelatorVector data) {
    c.validate();
    check_aligned(data, basis);
    auto kernel = heat_spectrum(basis, c.bandwidths);
    if (c.kernel_kind == KernelKind::Psck) kernel = assemble_psck(kernel, pearson_jacobian(data, basis, c.D, c.B), c.eta);
    auto rho = pearson_from_correlators(data, basis, c.D, c.B).upper();
    return {c, std::move(basis), std::move(data), std::move(kernel), std::move(rho)};
}

[[nodiscard]] inline double mae_against(const PearsonMatrix& model, std::span<const double> data_upper) {
    const auto m = model.upper();
    double s = 0.0;
    for (std::size_t p = 0; p < m.size(); ++p) s += std::abs(m[p] - data_upper[p]);
    return m.empty() ? 0.0 : s / static_cast<double>(m.size());
}

class TrainingDiverged : public std::runtime_error {
  public:
    TrainingDiverged(const std::string& what, nlohmann::json dump)
        : std::runtime_error(what), dump_(std::move(dump)) {}
    [[nodiscard]] const nlohmann::json& dump() const noexcept { return dump_; }

  private:
    nlohmann::json dump_;
};

/// One Adam step at epoch state.epoch; appends and returns its record.
inline EpochRecord train_epoch(TrainState& state, const TrainingProblem& prob, const EngineOptions& opts = {}) {
    const auto& c = prob.config;
    const auto t0 = std::chrono::steady_clock::now();
    const auto batch = LatentBatch::generate(c.n, c.M, epoch_latent_seed(c.user_seed, state.epoch));
    const auto model = mixture_correlators(state.theta, state.graph, prob.basis, batch, opts);
    const auto lg = mmd_loss_and_residual_grad(model, prob.data, prob.kernel);
    if (!std::isfinite(lg.loss)) {
        double max_abs = 0.0;
        for (double v : state.theta.flat()) max_abs = std::max(max_abs, std::abs(v));
        nlohmann::json dump = {{"epoch", state.epoch},
                               {"loss", std::isnan(lg.loss) ? "nan" : "inf"},
                               {"heat_part", lg.heat_part},
                               {"pearson_part", lg.pearson_part},
                               {"max_abs_theta", max_abs},
                               {"angles", state.theta.flat()}};
        throw TrainingDiverged("non-finite loss at epoch " + std::to_string(state.epoch), std::move(dump));
    }
    const auto grad = mixture_vjp(state.theta, state.graph, prob.basis, batch, lg.grad, opts);

    const double lr = cosine_lr(state.epoch, c.learning_rate, c.restart_period);
    const double t = static_cast<double>(state.epoch + 1);
    const double bc1 = 1.0 - std::pow(c.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(c.adam_beta2, t);
    auto& th = state.theta.flat();
    auto& m = state.adam_m.flat();
    auto& v = state.adam_v.flat();
    const auto& g = grad.flat();
    for (std::size_t k = 0; k < th.size(); ++k) {
        m[k] = c.adam_beta1 * m[k] + (1.0 - c.adam_beta1) * g[k];
        v[k] = c.adam_beta2 * v[k] + (1.0 - c.adam_beta2) * g[k] * g[k];
        th[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + c.adam_eps);
    }

    EpochRecord rec;
    rec.epoch = state.epoch;
    rec.loss = lg.loss;
    rec.lr = lr;
    const auto rho = try_pearson_from_correlators(model, prob.basis, c.D, c.B);
    rec.mae_rho = rho ? mae_against(*rho, prob.data_rho) : std::numeric_limits<double>::quiet_NaN();
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    state.history.push_back(rec);
    ++state.epoch;
    return rec;
}

/// Runs epochs until state.epoch == until (or config.epochs).
inline void train_until(TrainState& state, const TrainingProblem& prob, std::optional<std::size_t> until = {},
                        const EngineOptions& opts = {},
                        const std::function<void(const EpochRecord&)>& on_epoch = {}) {
    const std::size_t stop = until.value_or(prob.config.epochs);
    while (state.epoch < stop) {
        const auto rec = train_epoch(state, prob, opts);
        if (on_epoch) on_epoch(rec);
    }
}

// ---- checkpoints ------------------------------------------------------------

inline nlohmann::json angles_json(const AngleTensor& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t l = 0; l < t.components(); ++l) {
        const auto r = t.row(l);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return rows;
}

inline AngleTensor angles_from_json(const nlohmann::json& j, std::size_t gates) {
    AngleTensor t(j.size(), gates);
    for (std::size_t l = 0; l < j.size(); ++l) {
        const auto row = j.at(l).get<std::vector<double>>();
        if (row.size() != gates) throw ContractError("checkpoint: angle row " + std::to_string(l) + " has wrong length");
        std::copy(row.begin(), row.end(), t.row(l).begin());
    }
    return t;
}

inline nlohmann::json checkpoint_json(const TrainConfig& c, const TrainState& s) {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& r : s.history) {
        hist.push_back({r.epoch, r.loss, std::isnan(r.mae_rho) ? nlohmann::json(nullptr) : nlohmann::json(r.mae_rho),
                        r.lr, r.wall_ms});
    }
    return {{"config", c},
            {"graph", to_json(s.graph)},
            {"angles", angles_json(s.theta)},
            {"adam_m", angles_json(s.adam_m)},
            {"adam_v", angles_json(s.adam_v)},
            {"epoch", s.epoch},
            {"rng_states",
             {{"latent", {{"user_seed", c.user_seed}, {"next_epoch", s.epoch}}},
              {"graph_seed", c.user_seed + 1}}},
            {"history", std::move(hist)}};
}

struct Checkpoint {
    TrainConfig config;
    TrainState state;
};

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    Checkpoint ck;
    ck.config = j.at("config").get<TrainConfig>();
    ck.config.validate();
    ck.state.graph = graph_from_json(j.at("graph"));
    const auto G = ck.state.graph.size();
    ck.state.theta = angles_from_json(j.at("angles"), G);
    ck.state.adam_m = angles_from_json(j.at("adam_m"), G);
    ck.state.adam_v = angles_from_json(j.at("adam_v"), G);
    if (ck.state.theta.components() != ck.config.L) throw ContractError("checkpoint: angle rows != L");
    ck.state.epoch = j.at("epoch").get<std::size_t>();
    if (j.contains("history")) {
        for (const auto& r : j.at("history")) {
            EpochRecord e;
            e.epoch = r.at(0).get<std::size_t>();
            e.loss = r.at(1).get<double>();
            e.mae_rho = r.at(2).is_null() ? std::numeric_limits<double>::quiet_NaN() : r.at(2).get<double>();
            e.lr = r.at(3).get<double>();
            e.wall_ms = r.at(4).get<double>();
            ck.state.history.push_back(e);
        }
    }
    return ck;
}

/// Write to a sibling temp file, then rename over the target.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void save_checkpoint(const std::filesystem::path& path, const TrainConfig& c, const TrainState& s) {
    atomic_write(path, checkpoint_json(c, s).dump(1) + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    return checkpoint_from_json(nlohmann::json::parse(in));
}

inline void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& hist) {
    std::ostringstream out;
    out.precision(17);
    out << "epoch,loss,mae_rho,lr,wall_ms\n";
    for (const auto& r : hist) out << r.epoch << ',' << r.loss << ',' << r.mae_rho << ',' << r.lr << ',' << r.wall_ms << '\n';
    atomic_write(path, out.str());
}

}  // namespace iqpborn
