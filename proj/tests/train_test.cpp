// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "test_util.hpp"

namespace iqpborn {
namespace {

TrainConfig small_config(int D = 2, int B = 2, std::size_t L = 2) {
    TrainConfig c;
    c.D = D;
    c.B = B;
    c.n = D * B;
    c.L = L;
    c.epochs = 200;
    c.M = 512;
    c.avg_degree = std::min(2.0, D * B - 1.5);
    c.restart_period = 100;
    c.user_seed = 5;
    return c;
}

/// Data correlators from a planted-correlation synthetic table.
TrainingProblem synthetic_problem(const TrainConfig& c, const GateGraph& graph, std::uint64_t seed = 3) {
    const auto raw = gaussian_copula_table(ar1_correlation(c.D, 0.7), 4000, seed);
    const auto enc = encode(raw, fit_encoder(raw, c.B));
    auto basis = training_basis(c, graph);
    auto data = data_correlators(enc, basis);
    return make_problem(c, std::move(basis), std::move(data));
}

/// Loss evaluated with exact model correlators.
double exact_loss(const TrainState& s, const TrainingProblem& p) {
    return mmd_loss_and_residual_grad(exact_mixture_correlators(s.graph, s.theta, p.basis), p.data, p.kernel).loss;
}

TEST(Schedule, CosineRestarts) {
    EXPECT_DOUBLE_EQ(cosine_lr(0, 0.02, 100), 0.02);
    EXPECT_NEAR(cosine_lr(50, 0.02, 100), 0.01, 1e-15);
    EXPECT_LT(cosine_lr(99, 0.02, 100), 1e-5);
    EXPECT_DOUBLE_EQ(cosine_lr(100, 0.02, 100), 0.02);
    EXPECT_NEAR(cosine_lr(1250, 0.02, 100), 0.01, 1e-15);
}

TEST(Config, JsonRoundTripAndValidation) {
    auto c = small_config();
    c.kernel_kind = KernelKind::Heat;
    c.bandwidths = {0.3, 0.9};
    const nlohmann::json j = c;
    const auto back = j.get<TrainConfig>();
    EXPECT_EQ(nlohmann::json(back), j);
    auto bad = c;
    bad.n = 5;
    EXPECT_THROW(bad.validate(), ContractError);
    bad = c;
    bad.L = 0;
    EXPECT_THROW(bad.validate(), ContractError);
    EXPECT_THROW((void)parse_kernel_kind("gauss"), ContractError);
}

TEST(Init, DeterministicAndGraphSeedIsUserSeedPlusOne) {
    const auto c = small_config(4, 2, 3);
    const auto a = init_model(c);
    const auto b = init_model(c);
    EXPECT_EQ(a.theta, b.theta);
    EXPECT_EQ(a.graph, generate_er_graph(c.n, c.avg_degree, c.user_seed + 1));
    for (double v : a.adam_m.flat()) EXPECT_EQ(v, 0.0);
}

TEST(Init, ZeroSigmaGivesIdentityModel) {
    auto c = small_config();
    c.init_sigma = 0.0;
    auto s = init_model(c);
    for (double v : s.theta.flat()) EXPECT_EQ(v, 0.0);
    const auto prob = synthetic_problem(c, s.graph);
    CorrelatorVector ones{prob.basis.fingerprint(), std::vector<double>(prob.basis.size(), 1.0), c.M};
    const double expected = mmd_loss_and_residual_grad(ones, prob.data, prob.kernel).loss;
    const auto before = s.theta;
    const auto rec = train_epoch(s, prob);
    EXPECT_DOUBLE_EQ(rec.loss, expected);
    // sin(0) = 0: zero gradient, Adam leaves Θ fixed.
    EXPECT_EQ(s.theta, before);
}

TEST(Train, SmokeLossDropsBelowTenPercent) {
    const auto c = small_config();
    auto s = init_model(c);
    const auto prob = synthetic_problem(c, s.graph);
    train_until(s, prob);
    ASSERT_EQ(s.history.size(), 200U);
    EXPECT_LT(s.history.back().loss, 0.1 * s.history.front().loss);
    EXPECT_LT(exact_loss(s, prob), 0.1 * s.history.front().loss);
}

TEST(Train, HeatEqualsPsckAtEtaZero) {
    auto heat = small_config(3, 2, 2);
    heat.epochs = 30;
    heat.kernel_kind = KernelKind::Heat;
    auto psck = heat;
    psck.kernel_kind = KernelKind::Psck;
    psck.eta = 0.0;
    auto sh = init_model(heat);
    auto sp = init_model(psck);
    train_until(sh, synthetic_problem(heat, sh.graph));
    train_until(sp, synthetic_problem(psck, sp.graph));
    ASSERT_EQ(sh.history.size(), sp.history.size());
    for (std::size_t e = 0; e < sh.history.size(); ++e) EXPECT_TRUE(sh.history[e].same_trajectory(sp.history[e]));
    EXPECT_EQ(sh.theta, sp.theta);
}

TEST(Train, ResumeIsBitIdentical) {
    auto c = small_config(3, 2, 2);
    c.epochs = 40;
    auto full = init_model(c);
    const auto prob = synthetic_problem(c, full.graph);
    train_until(full, prob);

    auto part = init_model(c);
    train_until(part, prob, 17);
    const auto dir = std::filesystem::temp_directory_path() / "iqpborn_resume";
    std::filesystem::create_directories(dir);
    save_checkpoint(dir / "ck.json", c, part);
    auto ck = load_checkpoint(dir / "ck.json");
    EXPECT_EQ(ck.state.theta, part.theta);
    EXPECT_EQ(ck.state.adam_v, part.adam_v);
    train_until(ck.state, prob);
    EXPECT_EQ(ck.state.theta, full.theta);
    ASSERT_EQ(ck.state.history.size(), full.history.size());
    for (std::size_t e = 0; e < full.history.size(); ++e)
        EXPECT_TRUE(ck.state.history[e].same_trajectory(full.history[e]));
}

TEST(Train, ThreadCountDoesNotChangeTrajectory) {
    auto c = small_config(3, 2, 2);
    c.epochs = 10;
    c.M = 2000;
    auto a = init_model(c);
    auto b = init_model(c);
    const auto prob = synthetic_problem(c, a.graph);
    train_until(a, prob, {}, {1, {}});
    train_until(b, prob, {}, {3, {}});
    EXPECT_EQ(a.theta, b.theta);
}

TEST(Train, NonFiniteLossAborts) {
    const auto c = small_config();
    auto s = init_model(c);
    auto prob = synthetic_problem(c, s.graph);
    prob.data.values[0] = std::numeric_limits<double>::quiet_NaN();
    try {
        (void)train_epoch(s, prob);
        FAIL();
    } catch (const TrainingDiverged& e) {
        EXPECT_EQ(e.dump().at("epoch"), 0);
        EXPECT_TRUE(e.dump().contains("angles"));
    }
}

// Full-loss finite differences at fixed latents against the VJP chain.
TEST(Gradient, MixtureChainMatchesMonolithicFiniteDifference) {
    for (auto kind : {KernelKind::Psck, KernelKind::Heat}) {
        auto c = small_config(3, 2, 3);
        c.kernel_kind = kind;
        auto s = init_model(c);
        for (auto& v : s.theta.flat()) v *= 5.0;
        const auto prob = synthetic_problem(c, s.graph);
        const auto batch = LatentBatch::generate(c.n, 300, 1);
        auto loss_at = [&](const AngleTensor& t) {
            return mmd_loss_and_residual_grad(mixture_correlators(t, s.graph, prob.basis, batch), prob.data,
                                              prob.kernel);
        };
        const auto lg = loss_at(s.theta);
        const auto grad = mixture_vjp(s.theta, s.graph, prob.basis, batch, lg.grad);
        double num = 0.0;
        double den = 0.0;
        for (std::size_t k = 0; k < s.theta.flat().size(); ++k) {
            auto tp = s.theta;
            auto tm = s.theta;
            tp.flat()[k] += 1e-6;
            tm.flat()[k] -= 1e-6;
            const double fd = (loss_at(tp).loss - loss_at(tm).loss) / 2e-6;
            num += (fd - grad.flat()[k]) * (fd - grad.flat()[k]);
            den += fd * fd;
        }
        EXPECT_LT(std::sqrt(num / den), 1e-5);
    }
}

TEST(Gradient, LossInvariantUnderComponentPermutation) {
    auto c = small_config(3, 2, 3);
    auto s = init_model(c);
    const auto prob = synthetic_problem(c, s.graph);
    const auto batch = LatentBatch::generate(c.n, 400, 2);
    AngleTensor rev(3, s.graph.size());
    for (std::size_t l = 0; l < 3; ++l)
        for (std::size_t j = 0; j < s.graph.size(); ++j) rev(l, j) = s.theta(2 - l, j);
    const double a = mmd_loss_and_residual_grad(mixture_correlators(s.theta, s.graph, prob.basis, batch), prob.data,
                                                prob.kernel).loss;
    const double b = mmd_loss_and_residual_grad(mixture_correlators(rev, s.graph, prob.basis, batch), prob.data,
                                                prob.kernel).loss;
    EXPECT_NEAR(a, b, 1e-13 * a);
}

// Data produced by a known mixture on the model's own graph.
TEST(Train, SelfConsistencyOnPlantedModel) {
    auto c = small_config(3, 2, 2);
    c.epochs = 1000;
    c.M = 4096;
    c.learning_rate = 0.05;
    auto s = init_model(c);
    const auto planted = testing::random_angles(2, s.graph.size(), 77, 0.4);
    auto basis = training_basis(c, s.graph);
    auto data = exact_mixture_correlators(s.graph, planted, basis);
    const auto prob = make_problem(c, std::move(basis), std::move(data));
    const double initial = exact_loss(s, prob);
    train_until(s, prob);
    EXPECT_LT(exact_loss(s, prob), 0.05 * initial);
    const auto fitted = exact_mixture_correlators(s.graph, s.theta, prob.basis);
    EXPECT_LT(mae_z(fitted, prob.data, prob.basis, 2), 0.02);
}

TEST(History, CsvHasSchema) {
    const auto dir = std::filesystem::temp_directory_path() / "iqpborn_hist";
    std::filesystem::create_directories(dir);
    write_history_csv(dir / "h.csv", {{0, 1.0, 0.5, 0.02, 3.0}});
    std::ifstream in(dir / "h.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "epoch,loss,mae_rho,lr,wall_ms");
}

}  // namespace
}  // namespace iqpborn
