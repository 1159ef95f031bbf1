// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line driver: encode, train, eval, compile, verify-ciqp, marginals,
// bp-scan and sweep over reproducible run directories.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iqpborn.hpp"
#include "iqpborn/run_dir.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace iqpborn;

namespace {

struct Common {
    std::optional<unsigned> threads;
    [[nodiscard]] unsigned resolved_threads() const { return threads.value_or(threads_from_env()); }
};

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    return json::parse(in);
}

void write_text(const fs::path& p, const std::string& s) { atomic_write(p, s); }

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

/// Raw table from a file path or "synthetic:N[:D[:seed]]".
RawTable load_raw(const std::string& spec) {
    if (spec.rfind("synthetic:", 0) == 0) {
        std::vector<std::string> parts;
        std::stringstream ss(spec.substr(10));
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        const std::size_t N = std::stoul(parts.at(0));
        const int D = parts.size() > 1 ? std::stoi(parts[1]) : 8;
        const std::uint64_t seed = parts.size() > 2 ? std::stoull(parts[2]) : 0;
        return gaussian_copula_table(ar1_correlation(D, 0.6), N, seed);
    }
    return load_table(spec);
}

struct Prepared {
    RawTable raw;
    Split split;
    QuantileEncoder encoder;
    EncodedTable train;
    EncodedTable test;
    RawTable raw_train;
    RawTable raw_test;
};

Prepared prepare(const std::string& data, int B, std::uint64_t split_seed) {
    Prepared p;
    p.raw = load_raw(data);
    p.split = make_split(p.raw.N, split_seed);
    p.raw_train = select_rows(p.raw, p.split.train);
    p.raw_test = select_rows(p.raw, p.split.test);
    p.encoder = fit_encoder(p.raw_train, B);
    p.train = encode(p.raw_train, p.encoder);
    p.test = encode(p.raw_test, p.encoder);
    return p;
}

std::string levels_csv(const EncodedTable& t) {
    std::ostringstream out;
    for (int f = 0; f < t.D; ++f) out << (f ? "," : "") << "f" << f;
    out << '\n';
    for (std::size_t i = 0; i < t.N; ++i) {
        for (int f = 0; f < t.D; ++f) out << (f ? "," : "") << t.level(i, f);
        out << '\n';
    }
    return out.str();
}

json floor_json(const Prepared& p) {
    const auto tr = encoding_floor(p.raw_train, p.train);
    const auto te = encoding_floor(p.raw_test, p.test);
    return {{"n", p.train.n()}, {"D", p.train.D}, {"B", p.train.B}, {"N_train", p.train.N}, {"N_test", p.test.N},
            {"floor_train", tr.mae_rho}, {"floor_test", te.mae_rho}, {"pairs_excluded", tr.pairs_excluded}};
}

// ---- encode -----------------------------------------------------------------

struct EncodeOpts {
    std::string input;
    int B = 8;
    std::uint64_t seed = 0;
    std::string out = "runs/encode";
};

int cmd_encode(const EncodeOpts& o) {
    const auto p = prepare(o.input, o.B, o.seed);
    fs::create_directories(o.out);
    const fs::path dir(o.out);
    write_json(dir / "encoder.json", to_json(p.encoder));
    write_json(dir / "split.json", to_json(p.split));
    write_text(dir / "encoded_train.csv", levels_csv(p.train));
    write_text(dir / "encoded_test.csv", levels_csv(p.test));
    const auto fl = floor_json(p);
    write_json(dir / "floor.json", fl);
    std::vector<fs::path> inputs;
    if (fs::exists(o.input)) inputs.emplace_back(o.input);
    write_manifest(dir, {{"command", "encode"}, {"input", o.input}, {"B", o.B}, {"seed", o.seed}},
                   {"encoder.json", "split.json", "encoded_train.csv", "encoded_test.csv", "floor.json"}, inputs);
    std::cout << fl.dump(2) << '\n';
    return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainOpts {
    std::string config;
    std::string data;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> kernel;
    std::optional<double> eta;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> latents;
    std::string out;
    std::string resume;
    std::size_t checkpoint_every = 100;
    bool quiet = false;
};

TrainConfig resolve_config(const TrainOpts& o, json& raw_cfg) {
    raw_cfg = o.config.empty() ? json::object() : read_json(o.config);
    auto c = raw_cfg.get<TrainConfig>();
    if (o.seed) c.user_seed = *o.seed;
    if (o.kernel) c.kernel_kind = parse_kernel_kind(*o.kernel);
    if (o.eta) c.eta = *o.eta;
    if (o.epochs) c.epochs = *o.epochs;
    if (o.latents) c.M = *o.latents;
    c.validate();
    return c;
}

struct TrainResult {
    fs::path dir;
    TrainConfig config;
    TrainState state;
    double wall_minutes = 0.0;
};

TrainResult run_training(const TrainOpts& o, const Common& common) {
    json raw_cfg;
    auto c = resolve_config(o, raw_cfg);
    std::string data = o.data.empty() ? raw_cfg.value("data", std::string{}) : o.data;
    if (data.empty()) throw std::runtime_error("train: no dataset (--data or \"data\" in the config)");
    const fs::path dir = o.out.empty() ? fs::path("runs") / ("seed" + std::to_string(c.user_seed)) : fs::path(o.out);
    fs::create_directories(dir);

    const auto p = prepare(data, c.B, c.split_seed);
    if (p.train.D != c.D) {
        throw std::runtime_error("train: dataset has D=" + std::to_string(p.train.D) + ", config has D=" +
                                 std::to_string(c.D));
    }
    TrainState state;
    if (!o.resume.empty()) {
        auto ck = load_checkpoint(o.resume);
        if (nlohmann::json(ck.config).dump() != nlohmann::json([&] {
                auto cc = c;
                cc.epochs = ck.config.epochs;
                return cc;
            }()).dump()) {
            warn("resume: checkpoint config differs from the requested config; continuing with the checkpoint's");
        }
        const auto epochs = c.epochs;
        c = ck.config;
        c.epochs = epochs;
        state = std::move(ck.state);
    } else {
        state = init_model(c);
    }
    auto basis = training_basis(c, state.graph);
    auto data_corr = data_correlators(p.train, basis);
    const auto prob = make_problem(c, std::move(basis), std::move(data_corr));

    json cfg_out = c;
    cfg_out["data"] = data;
    write_json(dir / "config.json", cfg_out);
    write_json(dir / "encoder.json", to_json(p.encoder));
    write_json(dir / "split.json", to_json(p.split));
    if (c.kernel_kind == KernelKind::Psck) write_jacobian_csv((dir / "jacobian.csv").string(), *prob.kernel.jacobian, prob.basis);

    const EngineOptions eng{common.resolved_threads(), {}};
    const auto t0 = std::chrono::steady_clock::now();
    try {
        train_until(state, prob, c.epochs, eng, [&](const EpochRecord& r) {
            if (!o.quiet && (r.epoch % 50 == 0 || r.epoch + 1 == c.epochs)) {
                std::fprintf(stderr, "epoch %5zu  loss %.6g  mae_rho %.4f  lr %.5f\n", r.epoch, r.loss, r.mae_rho, r.lr);
            }
            if (o.checkpoint_every > 0 && (r.epoch + 1) % o.checkpoint_every == 0) {
                save_checkpoint(dir / "checkpoint.json", c, state);
            }
        });
    } catch (const TrainingDiverged& e) {
        write_json(dir / "diverged.json", e.dump());
        throw;
    }
    const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    save_checkpoint(dir / "checkpoint.json", c, state);
    write_history_csv(dir / "history.csv", state.history);
    std::vector<std::string> artifacts{"config.json", "encoder.json", "split.json", "checkpoint.json", "history.csv"};
    if (c.kernel_kind == KernelKind::Psck) artifacts.emplace_back("jacobian.csv");
    std::vector<fs::path> inputs;
    if (fs::exists(data)) inputs.emplace_back(data);
    write_manifest(dir, cfg_out, artifacts, inputs);
    return {dir, c, std::move(state), minutes};
}

int cmd_train(const TrainOpts& o, const Common& common) {
    const auto r = run_training(o, common);
    const auto& h = r.state.history;
    json summary = {{"run", r.dir.string()}, {"epochs", r.state.epoch}, {"gates", r.state.graph.size()}};
    if (!h.empty()) {
        summary["final_loss"] = h.back().loss;
        summary["final_mae_rho"] = h.back().mae_rho;
    }
    std::cout << summary.dump(2) << '\n';
    return 0;
}

// ---- eval -------------------------------------------------------------------

struct EvalOpts {
    std::string run;
    std::string data;
    std::size_t latents = 65536;
    std::uint64_t seed = 1;
    std::optional<int> D;
};

struct RunContext {
    fs::path dir;
    Checkpoint ck;
    std::string data;
};

RunContext load_run(const std::string& run) {
    const fs::path dir(run);
    RunContext rc{dir, load_checkpoint(dir / "checkpoint.json"), {}};
    const auto cfg = read_json(dir / "config.json");
    rc.data = cfg.value("data", std::string{});
    return rc;
}

json split_metrics(const RunContext& rc, const EncodedTable& enc, const RawTable& raw, const CorrelatorVector& model,
                   const ObservableBasis& basis, const fs::path& residual_csv) {
    const auto& c = rc.ck.config;
    const auto data = data_correlators(enc, basis);
    const auto rho_data = pearson_from_correlators(data, basis, c.D, c.B);
    const auto rho_model = try_pearson_from_correlators(model, basis, c.D, c.B);
    json j = {{"N", enc.N},
              {"mae_z", mae_z(model, data, basis, 2)},
              {"mae_z_all", mae_z(model, data, basis, 0)},
              {"floor", encoding_floor(raw, enc).mae_rho}};
    if (rho_model) {
        const auto m = correlation_metrics(*rho_model, rho_data);
        j["mae_rho"] = m.mae_rho;
        j["r_rho"] = m.r_rho ? json(*m.r_rho) : json(nullptr);
        std::ostringstream out;
        out.precision(10);
        out << "f,g,rho_model,rho_data,delta\n";
        for (int f = 0; f < c.D; ++f)
            for (int g = f + 1; g < c.D; ++g)
                out << f << ',' << g << ',' << (*rho_model)(f, g) << ',' << rho_data(f, g) << ','
                    << (*rho_model)(f, g) - rho_data(f, g) << '\n';
        write_text(residual_csv, out.str());
    } else {
        j["mae_rho"] = nullptr;
        j["r_rho"] = nullptr;
    }
    return j;
}

json evaluate_run(const EvalOpts& o, const Common& common) {
    auto rc = load_run(o.run);
    const auto& c = rc.ck.config;
    if (o.D && *o.D != c.D) {
        throw std::runtime_error("eval: --D " + std::to_string(*o.D) + " does not match the checkpoint's D=" +
                                 std::to_string(c.D));
    }
    const std::string data = o.data.empty() ? rc.data : o.data;
    const auto raw = load_raw(data);
    if (raw.D != c.D) {
        throw std::runtime_error("eval: dataset has D=" + std::to_string(raw.D) + ", checkpoint has D=" +
                                 std::to_string(c.D));
    }
    const auto split = split_from_json(read_json(rc.dir / "split.json"));
    if (split.N != raw.N) throw std::runtime_error("eval: dataset size differs from the run's split");
    const auto encoder = encoder_from_json(read_json(rc.dir / "encoder.json"));
    const auto raw_train = select_rows(raw, split.train);
    const auto raw_test = select_rows(raw, split.test);
    const auto basis = build_observable_basis(c.n, 2, rc.ck.state.graph);
    const auto batch = LatentBatch::generate(c.n, o.latents, mix_keys({static_cast<std::uint64_t>(StreamTag::Verify), o.seed}));
    const auto model = mixture_correlators(rc.ck.state.theta, rc.ck.state.graph, basis, batch,
                                           {common.resolved_threads(), {}});
    json out = {{"latents", o.latents}, {"seed", o.seed}, {"epochs", rc.ck.state.epoch}};
    out["train"] = split_metrics(rc, encode(raw_train, encoder), raw_train, model, basis, rc.dir / "residuals_train.csv");
    out["test"] = split_metrics(rc, encode(raw_test, encoder), raw_test, model, basis, rc.dir / "residuals_test.csv");
    if (out["train"]["mae_rho"].is_number() && out["test"]["mae_rho"].is_number()) {
        out["gap"] = out["test"]["mae_rho"].get<double>() - out["train"]["mae_rho"].get<double>();
    }
    std::vector<double> series;
    for (const auto& r : rc.ck.state.history) series.push_back(r.mae_rho);
    if (series.size() >= 100) {
        const auto ci = convergence_indicator(series);
        out["convergence"] = {{"delta", ci.delta}, {"label", ci.label}};
    }
    if (!rc.ck.state.history.empty()) out["final_loss"] = rc.ck.state.history.back().loss;
    write_json(rc.dir / "metrics.json", out);
    return out;
}

int cmd_eval(const EvalOpts& o, const Common& common) {
    std::cout << evaluate_run(o, common).dump(2) << '\n';
    return 0;
}

// ---- compile / verify -------------------------------------------------------

int cmd_compile(const std::string& run, bool no_prune) {
    const auto rc = load_run(run);
    const auto prov = "checkpoint.json@" + hash_file(rc.dir / "checkpoint.json");
    const auto c = compile(rc.ck.state.graph, rc.ck.state.theta, !no_prune, prov);
    write_json(rc.dir / "compiled.json", to_json(c));
    std::ostringstream txt;
    write_flat_text(txt, c);
    write_text(rc.dir / "compiled.txt", txt.str());
    std::cout << json{{"n_data", c.n_data}, {"a", c.a}, {"gates", c.gates.size()}, {"pruned", c.pruned}}.dump(2)
              << '\n';
    return 0;
}

struct VerifyOpts {
    std::string run;
    bool exact = false;
    std::optional<std::size_t> vdn;
    std::uint64_t seed = 11;
    double tolerance = 1e-12;
};

int cmd_verify(const VerifyOpts& o, const Common& common) {
    const auto rc = load_run(o.run);
    const auto& g = rc.ck.state.graph;
    const auto& th = rc.ck.state.theta;
    bool ok = true;
    json out;
    if (o.exact || !o.vdn) {
        const auto r = verify_exact(g, th);
        out["exact"] = {{"max_discrepancy", r.max_discrepancy},
                        {"max_discrepancy_unpadded", r.max_discrepancy_unpadded},
                        {"L", r.L},
                        {"L_pad", r.L_pad},
                        {"total_qubits", r.total_qubits},
                        {"pass", r.max_discrepancy < o.tolerance}};
        ok = ok && r.max_discrepancy < o.tolerance;
    }
    if (o.vdn) {
        const auto r = verify_vdn(g, th, *o.vdn, o.seed, {common.resolved_threads(), {}});
        out["vdn"] = {{"M", r.M}, {"observables", r.observables}, {"mae", r.mae}, {"ratio", r.ratio}, {"pass", r.ratio < 5.0}};
        ok = ok && r.ratio < 5.0;
    }
    write_json(rc.dir / "verify.json", out);
    std::cout << out.dump(2) << '\n';
    return ok ? 0 : 2;
}

// ---- marginals --------------------------------------------------------------

int cmd_marginals(const std::string& run, std::size_t latents, std::uint64_t seed, const Common& common) {
    const auto rc = load_run(run);
    const auto& c = rc.ck.config;
    const auto raw = load_raw(rc.data);
    const auto split = split_from_json(read_json(rc.dir / "split.json"));
    const auto encoder = encoder_from_json(read_json(rc.dir / "encoder.json"));
    const auto train = encode(select_rows(raw, split.train), encoder);
    std::ostringstream csv;
    std::ostringstream dist;
    csv.precision(10);
    dist.precision(10);
    csv << "feature,level,model_p,data_p\n";
    dist << "feature,w1,ks,clipped_mass\n";
    for (int f = 0; f < c.D; ++f) {
        const auto m = recover_marginal(rc.ck.state.theta, rc.ck.state.graph, f, c.D, c.B, latents, seed,
                                        {common.resolved_threads(), {}});
        const auto h = level_histogram(train, f);
        for (std::size_t v = 0; v < h.size(); ++v) csv << f << ',' << v << ',' << m.probs[v] << ',' << h[v] << '\n';
        const auto d = w1_ks(m.probs, h);
        dist << f << ',' << d.w1 << ',' << d.ks << ',' << m.pre_clip_negative_mass << '\n';
    }
    write_text(rc.dir / "marginals.csv", csv.str());
    write_text(rc.dir / "marginal_distances.csv", dist.str());
    std::cout << dist.str();
    return 0;
}

// ---- bp-scan ----------------------------------------------------------------

struct ScanOpts {
    std::string config;
    std::vector<int> ns;
    std::optional<std::size_t> k_init;
    std::optional<std::size_t> m_grad;
    std::optional<std::uint64_t> seed;
    std::string out = "runs/bp_scan";
};

json fit_json(const LinearFit& f) {
    return {{"slope", f.slope}, {"slope_se", f.slope_se}, {"intercept", f.intercept}, {"r2", f.r2}, {"rss", f.rss}};
}

int cmd_scan(const ScanOpts& o, const Common& common) {
    ScanConfig cfg;
    if (!o.config.empty()) {
        const auto j = read_json(o.config);
        cfg.ns = j.value("ns", cfg.ns);
        cfg.D = j.value("D", cfg.D);
        cfg.L = j.value("L", cfg.L);
        cfg.K_init = j.value("K_init", cfg.K_init);
        cfg.sigma = j.value("sigma", cfg.sigma);
        cfg.M_grad = j.value("M_grad", cfg.M_grad);
        cfg.graph_seed = j.value("graph_seed", cfg.graph_seed);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.avg_degree = j.value("avg_degree", cfg.avg_degree);
        cfg.eta = j.value("eta", cfg.eta);
        cfg.bandwidths = j.value("bandwidths", cfg.bandwidths);
        cfg.data_rows = j.value("data_rows", cfg.data_rows);
        cfg.data_corr = j.value("data_corr", cfg.data_corr);
    }
    if (!o.ns.empty()) cfg.ns = o.ns;
    if (o.k_init) cfg.K_init = *o.k_init;
    if (o.m_grad) cfg.M_grad = *o.m_grad;
    if (o.seed) cfg.seed = *o.seed;
    cfg.threads = common.resolved_threads();
    const auto recs = bp_scan(cfg);
    fs::create_directories(o.out);
    std::ostringstream csv;
    write_scan_csv(csv, recs);
    write_text(fs::path(o.out) / "scan.csv", csv.str());
    json summary = {{"config",
                     {{"ns", cfg.ns}, {"D", cfg.D}, {"L", cfg.L}, {"K_init", cfg.K_init}, {"sigma", cfg.sigma},
                      {"M_grad", cfg.M_grad}, {"graph_seed", cfg.graph_seed}, {"seed", cfg.seed},
                      {"avg_degree", cfg.avg_degree}, {"eta", cfg.eta}, {"bandwidths", cfg.bandwidths}}}};
    if (recs.size() >= 2) {
        const auto fits = fit_scan(recs);
        summary["psck_power"] = fit_json(fits.psck_power);
        summary["heat_power"] = fit_json(fits.heat_power);
        summary["psck_exponential"] = fit_json(fits.psck_exp);
        summary["heat_exponential"] = fit_json(fits.heat_exp);
    } else {
        warn("bp-scan: fits need at least two values of n; writing the scan table only");
    }
    write_json(fs::path(o.out) / "fits.json", summary);
    std::cout << csv.str() << summary.dump(2) << '\n';
    return 0;
}

// ---- sweep ------------------------------------------------------------------

int cmd_sweep(TrainOpts o, const std::vector<std::uint64_t>& seeds, std::size_t eval_latents, const Common& common) {
    const fs::path root = o.out.empty() ? fs::path("runs/sweep") : fs::path(o.out);
    fs::create_directories(root);
    std::ostringstream csv;
    csv.precision(10);
    csv << "seed,gates,final_loss,mae_rho_train,mae_rho_test,gap,r_rho_train,r_rho_test,mae_z_train,mae_z_test,"
           "floor_train,floor_test,delta,label,wall_min\n";
    auto num = [](const json& j, const char* k) { return j.contains(k) && j[k].is_number() ? j[k].dump() : std::string("nan"); };
    for (auto s : seeds) {
        o.seed = s;
        o.out = (root / ("seed" + std::to_string(s))).string();
        const auto r = run_training(o, common);
        EvalOpts eo;
        eo.run = o.out;
        eo.latents = eval_latents;
        eo.seed = s;
        const auto m = evaluate_run(eo, common);
        const auto conv = m.value("convergence", json::object());
        csv << s << ',' << r.state.graph.size() << ',' << num(m, "final_loss") << ',' << num(m["train"], "mae_rho") << ','
            << num(m["test"], "mae_rho") << ',' << num(m, "gap") << ',' << num(m["train"], "r_rho") << ','
            << num(m["test"], "r_rho") << ',' << num(m["train"], "mae_z") << ',' << num(m["test"], "mae_z") << ','
            << num(m["train"], "floor") << ',' << num(m["test"], "floor") << ',' << num(conv, "delta") << ','
            << conv.value("label", std::string("n/a")) << ',' << r.wall_minutes << '\n';
        write_text(root / "sweep.csv", csv.str());
    }
    std::cout << csv.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Classically trained IQP Born machines: training, compilation and evaluation"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kVersion);
    Common common;
    app.add_option("--threads", common.threads, "Worker threads (fallback: IQPBORN_THREADS, then 1)");

    EncodeOpts enc;
    auto* c_enc = app.add_subcommand("encode", "Quantile-encode a raw table, write split and floor report");
    c_enc->add_option("--input,--data", enc.input, "CSV, binary table, or synthetic:N[:D[:seed]]")->required();
    c_enc->add_option("--bits,-B", enc.B, "Bits per feature");
    c_enc->add_option("--seed", enc.seed, "Split seed");
    c_enc->add_option("--out", enc.out, "Output directory");

    TrainOpts tr;
    auto add_train_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", tr.config, "Run config JSON");
        cmd->add_option("--data", tr.data, "Raw dataset (overrides config \"data\")");
        cmd->add_option("--seed", tr.seed, "User seed");
        cmd->add_option("--kernel", tr.kernel, "psck or heat")->check(CLI::IsMember({"psck", "heat"}));
        cmd->add_option("--eta", tr.eta, "PSCK mixing weight");
        cmd->add_option("--epochs", tr.epochs, "Total epochs");
        cmd->add_option("--latents", tr.latents, "Monte Carlo latents per forward pass");
        cmd->add_option("--out", tr.out, "Run directory");
        cmd->add_option("--checkpoint-every", tr.checkpoint_every, "Epochs between checkpoints (0 = end only)");
        cmd->add_flag("--quiet", tr.quiet, "No per-epoch progress");
    };
    auto* c_train = app.add_subcommand("train", "Train a MoIQP model");
    add_train_flags(c_train);
    c_train->add_option("--resume", tr.resume, "Continue from a checkpoint");

    EvalOpts ev;
    auto* c_eval = app.add_subcommand("eval", "Evaluate a run on its train and test splits");
    c_eval->add_option("--run", ev.run, "Run directory")->required();
    c_eval->add_option("--data", ev.data, "Dataset (default: the run's)");
    c_eval->add_option("--latents", ev.latents, "Monte Carlo latents");
    c_eval->add_option("--seed", ev.seed, "Evaluation latent seed");
    c_eval->add_option("--D", ev.D, "Expected feature count");

    std::string compile_run;
    bool no_prune = false;
    auto* c_comp = app.add_subcommand("compile", "Compile a MoIQP checkpoint into one IQP circuit");
    c_comp->add_option("--run", compile_run, "Run directory")->required();
    c_comp->add_flag("--no-prune", no_prune, "Keep zero-angle gates");

    VerifyOpts vo;
    auto* c_ver = app.add_subcommand("verify-ciqp", "Check the compiled circuit against the mixture");
    c_ver->add_option("--run", vo.run, "Run directory")->required();
    c_ver->add_flag("--exact", vo.exact, "Exact statevector check (n + a <= 22)");
    c_ver->add_option("--vdn", vo.vdn, "Monte Carlo check with M latents per side");
    c_ver->add_option("--seed", vo.seed, "Latent seed");
    c_ver->add_option("--tolerance", vo.tolerance, "Exact-mode tolerance");

    std::string marg_run;
    std::size_t marg_latents = 65536;
    std::uint64_t marg_seed = 3;
    auto* c_marg = app.add_subcommand("marginals", "Sampling-free per-feature marginals with W1/KS");
    c_marg->add_option("--run", marg_run, "Run directory")->required();
    c_marg->add_option("--latents", marg_latents, "Monte Carlo latents");
    c_marg->add_option("--seed", marg_seed, "Latent seed");

    ScanOpts so;
    auto* c_scan = app.add_subcommand("bp-scan", "Gradient-variance scan with power-law and exponential fits");
    c_scan->add_option("--config", so.config, "Scan config JSON");
    c_scan->add_option("--ns", so.ns, "Qubit counts")->delimiter(',');
    c_scan->add_option("--kinit", so.k_init, "Initializations per n");
    c_scan->add_option("--latents", so.m_grad, "Latents per gradient");
    c_scan->add_option("--seed", so.seed, "Scan seed");
    c_scan->add_option("--out", so.out, "Output directory");

    std::vector<std::uint64_t> sweep_seeds{42, 43, 44, 45, 46};
    std::size_t sweep_eval_latents = 65536;
    auto* c_sweep = app.add_subcommand("sweep", "Train and evaluate several seeds, one summary row each");
    add_train_flags(c_sweep);
    c_sweep->add_option("--seeds", sweep_seeds, "User seeds")->delimiter(',');
    c_sweep->add_option("--eval-latents", sweep_eval_latents, "Latents for evaluation");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*c_enc) return cmd_encode(enc);
        if (*c_train) return cmd_train(tr, common);
        if (*c_eval) return cmd_eval(ev, common);
        if (*c_comp) return cmd_compile(compile_run, no_prune);
        if (*c_ver) return cmd_verify(vo, common);
        if (*c_marg) return cmd_marginals(marg_run, marg_latents, marg_seed, common);
        if (*c_scan) return cmd_scan(so, common);
        if (*c_sweep) return cmd_sweep(tr, sweep_seeds, sweep_eval_latents, common);
    } catch (const std::exception& e) {
        std::cerr << "iqpborn: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
