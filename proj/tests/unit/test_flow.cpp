// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "gflow/errors.hpp"
#include "gflow/flow/checkpoint.hpp"
#include "gflow/flow/layers.hpp"
#include "gflow/flow/model.hpp"
#include "gflow/numcore/linalg.hpp"
#include "gflow/numcore/ops.hpp"
#include "gflow/numcore/optim.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace gflow;
using flow::Ablation;
using num::Tensor;

namespace {

// Dense Jacobian of the physical-frame -> latent map by central differences.
Tensor numerical_jacobian(const flow::FlowModel& model, const Tensor& x, const Tensor& history,
                          const Tensor& controls, const flow::RecurrentStates& states, double step) {
    const std::size_t n = x.size();
    Tensor jac = Tensor::matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        Tensor xp = x, xm = x;
        xp[j] += step;
        xm[j] -= step;
        flow::RecurrentStates sp = states, sm = states;
        const Tensor zp = model.forward_values(model.standardize(xp), history, controls, sp, 1);
        const Tensor zm = model.forward_values(model.standardize(xm), history, controls, sm, 1);
        for (std::size_t i = 0; i < n; ++i) jac.at(i, j) = (zp[i] - zm[i]) / (2.0 * step);
    }
    return jac;
}

void set_identity_steps(flow::FlowModel& model) {
    const auto& cfg = model.config();
    // raw such that sigmoid(raw + 2) + 1e-3 == 1
    const double raw_one = std::log(0.999 / 0.001) - flow::kScaleShift;
    for (const auto& step : model.steps()) {
        model.params().value(step.mix) = num::identity(cfg.channels);
        Tensor& ob = model.params().value(step.conditioner.out_b);
        const std::size_t half = ob.size() / 2;
        for (std::size_t i = 0; i < half; ++i) ob[i] = raw_one;
    }
}

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("actnorm forward examples") {
    const Tensor x = Tensor::matrix(21, 3, 0.7);
    auto id = flow::actnorm_forward(x, Tensor::matrix(21, 3, 1.0), Tensor::matrix(21, 3, 0.0));
    CHECK(num::max_abs_diff(id.y, x) == 0.0);
    CHECK(id.logdet == 0.0);
    auto twice = flow::actnorm_forward(x, Tensor::matrix(21, 3, 2.0), Tensor::matrix(21, 3, 0.0));
    CHECK(twice.logdet == doctest::Approx(63.0 * std::log(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(flow::actnorm_forward(x, Tensor::matrix(21, 3, 0.0), Tensor::matrix(21, 3, 0.0)), NumericError);
}

TEST_CASE("actnorm init normalizes the batch") {
    num::Rng rng = num::make_rng(11);
    const std::size_t n = 64, m = 5, c = 3;
    Tensor x = testing::random_tensor({n * m, c}, rng, 3.0);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += static_cast<double>(i % (m * c));
    const auto p = flow::actnorm_init(x, m);
    const Tensor y = flow::actnorm_forward(x, p.scale, p.bias).y;
    for (std::size_t e = 0; e < m * c; ++e) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t s = 0; s < n; ++s) mean += y[s * m * c + e];
        mean /= n;
        for (std::size_t s = 0; s < n; ++s) sq += (y[s * m * c + e] - mean) * (y[s * m * c + e] - mean);
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(std::sqrt(sq / n) - 1.0) < 1e-4);
    }
    const auto again = flow::actnorm_init(y, m);
    for (std::size_t e = 0; e < m * c; ++e) {
        CHECK(again.bias[e] == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(again.scale[e] == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(flow::actnorm_init(Tensor::matrix(8 * m, c, 4.0), m), NumericError);
    CHECK_THROWS_AS(flow::actnorm_init(Tensor::matrix(m, c, 4.0), m), ConfigError);
}

TEST_CASE("invconv forward examples") {
    num::Rng rng = num::make_rng(12);
    const Tensor x = testing::random_tensor({4, 3}, rng);
    auto id = flow::invconv_forward(x, num::identity(3));
    CHECK(num::max_abs_diff(id.y, x) == 0.0);
    CHECK(id.logdet == 0.0);
    Tensor perm = Tensor::matrix(3, 3);
    perm.at(0, 2) = perm.at(1, 0) = perm.at(2, 1) = 1.0;
    auto p = flow::invconv_forward(x, perm);
    CHECK(std::abs(p.logdet) < 1e-15);
    for (std::size_t r = 0; r < 4; ++r) {
        CHECK(p.y.at(r, 2) == x.at(r, 0));
        CHECK(p.y.at(r, 0) == x.at(r, 1));
    }
    CHECK_THROWS_AS(flow::invconv_forward(x, Tensor::matrix(3, 3)), NumericError);
}

TEST_CASE("invconv logdet matches a dense numerical Jacobian") {
    num::Rng rng = num::make_rng(13);
    const std::size_t m = 4, c = 2;
    Tensor w = num::random_rotation(c, rng);
    for (double& v : w.values()) v *= 1.7;
    const Tensor x = testing::random_tensor({m, c}, rng);
    const double h = 1e-6;
    Tensor jac = Tensor::matrix(m * c, m * c);
    for (std::size_t j = 0; j < m * c; ++j) {
        Tensor xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const Tensor yp = flow::invconv_forward(xp, w).y, ym = flow::invconv_forward(xm, w).y;
        for (std::size_t i = 0; i < m * c; ++i) jac.at(i, j) = (yp[i] - ym[i]) / (2 * h);
    }
    CHECK(std::abs(num::logabsdet(jac) - flow::invconv_forward(x, w).logdet) < 1e-6);
    CHECK(num::max_abs_diff(flow::invconv_inverse(flow::invconv_forward(x, w).y, w), x) < 1e-12);
}

TEST_CASE("coupling examples") {
    const Tensor x({1, 2}, {3.0, 5.0});
    auto out = flow::coupling_forward(x, Tensor({1, 1}, {2.0}), Tensor({1, 1}, {1.0}), 1);
    CHECK(out.y[0] == 3.0);
    CHECK(out.y[1] == 12.0);
    CHECK(out.logdet == doctest::Approx(std::log(2.0)));
    auto id = flow::coupling_forward(x, Tensor({1, 1}, {1.0}), Tensor({1, 1}, {0.0}), 1);
    CHECK(num::max_abs_diff(id.y, x) == 0.0);
    CHECK(id.logdet == 0.0);

    const Tensor s0 = flow::coupling_scale(Tensor({1}, {0.0}));
    CHECK(s0[0] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0)) + 1e-3));

    num::Rng rng = num::make_rng(14);
    const Tensor xr = testing::random_tensor({6, 3}, rng);
    const Tensor s = flow::coupling_scale(testing::random_tensor({6, 1}, rng, 2.0));
    const Tensor b = testing::random_tensor({6, 1}, rng);
    const Tensor back = flow::coupling_inverse(flow::coupling_forward(xr, s, b, 2).y, s, b, 2);
    CHECK(num::max_abs_diff(back, xr) < 1e-8);
}

TEST_CASE("identity model at the origin gives the Gaussian mode density") {
    const auto cfg = testing::tiny_config();
    flow::FlowModel model(cfg, testing::chain_skeleton(4, 1), 1);
    set_identity_steps(model);
    num::Rng rng = num::make_rng(15);
    const Tensor hist = testing::random_tensor({cfg.history * 4, 2}, rng);
    const Tensor ctrl = testing::random_tensor({1, cfg.control_window()}, rng);
    auto states = model.initial_state(1);
    std::vector<double> ld;
    const Tensor z = model.forward_values(Tensor::matrix(4, 2), hist, ctrl, states, 1, &ld);
    CHECK(z.max_abs() < 1e-15);
    CHECK(std::abs(ld[0]) < 1e-12);
    auto s2 = model.initial_state(1);
    const double lp = model.log_likelihood(Tensor::matrix(4, 2), hist, ctrl, s2, 1)[0];
    CHECK(lp == doctest::Approx(-4.0 * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));

    // tau = 0 returns the data mean
    flow::Standardization st{Tensor::matrix(4, 2, 0.0), Tensor::matrix(4, 2, 2.0)};
    for (std::size_t i = 0; i < 8; ++i) st.mean[i] = 10.0 + i;
    model.set_standardization(st);
    auto s3 = model.initial_state(1);
    const Tensor x0 = model.sample_frame(testing::random_tensor({4, 2}, rng), hist, ctrl, 0.0, s3, 1);
    CHECK(num::max_abs_diff(x0, st.mean) < 1e-12);
}

TEST_CASE("full-depth model inverts exactly") {
    for (Ablation a : {Ablation::STMG, Ablation::MG}) {
        const auto cfg = testing::full_depth_config(a);
        flow::FlowModel model(cfg, skel::default_skeleton(), 21);
        testing::randomize_parameters(model, 3, 0.2);
        num::Rng rng = num::make_rng(16);
        const std::size_t batch = 10;
        const Tensor x = testing::random_tensor({batch * 21, 3}, rng);
        const Tensor hist = testing::random_tensor({batch * cfg.history * 21, 3}, rng);
        const Tensor ctrl = testing::random_tensor({batch, cfg.control_window()}, rng);
        const auto states = testing::random_states(model, batch, rng);
        auto fwd_states = states, inv_states = states;
        const Tensor z = model.forward_values(x, hist, ctrl, fwd_states, batch);
        const Tensor back = model.inverse_values(z, hist, ctrl, inv_states, batch);
        CHECK(num::max_abs_diff(back, x) < 1e-6);
        for (std::size_t k = 0; k < fwd_states.size(); ++k) {
            CHECK(num::max_abs_diff(fwd_states[k].h.back(), inv_states[k].h.back()) < 1e-9);
        }
        // f(f^-1(z)) = z
        auto s1 = states, s2 = states;
        const Tensor xz = model.inverse_values(z, hist, ctrl, s1, batch);
        CHECK(num::max_abs_diff(model.forward_values(xz, hist, ctrl, s2, batch), z) < 1e-8);
    }
}

TEST_CASE("analytic log-determinant matches the dense Jacobian") {
    for (Ablation a : {Ablation::STMG, Ablation::SMG, Ablation::MG}) {
        const auto cfg = testing::tiny_config(a);
        flow::FlowModel model(cfg, testing::chain_skeleton(4, 1), 4);
        testing::randomize_parameters(model, 9, 0.4);
        model.set_standardization({Tensor({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8}),
                                   Tensor({4, 2}, {0.5, 1.5, 2.0, 0.8, 1.1, 0.9, 3.0, 0.7})});
        num::Rng rng = num::make_rng(17);
        for (int trial = 0; trial < 5; ++trial) {
            const Tensor x = testing::random_tensor({4, 2}, rng, 2.0);
            const Tensor hist = testing::random_tensor({cfg.history * 4, 2}, rng);
            const Tensor ctrl = testing::random_tensor({1, cfg.control_window()}, rng);
            const auto states = testing::random_states(model, 1, rng);
            auto s = states;
            std::vector<double> ld;
            model.forward_values(model.standardize(x), hist, ctrl, s, 1, &ld);
            const double analytic = ld[0] + model.standardization_logdet();
            const double numeric = num::logabsdet(numerical_jacobian(model, x, hist, ctrl, states, 1e-5));
            CHECK(std::abs(analytic - numeric) < 1e-4);
        }
    }
}

TEST_CASE("likelihood gradients pass the finite-difference check") {
    for (Ablation a : {Ablation::STMG, Ablation::SMG, Ablation::MG}) {
        const auto cfg = testing::tiny_config(a);
        flow::FlowModel model(cfg, testing::chain_skeleton(4, 1), 5);
        testing::randomize_parameters(model, 10, 0.3);
        num::Rng rng = num::make_rng(18);
        const auto batch = testing::random_sequences(cfg, 2, cfg.history + 1, rng);
        const auto initial = testing::random_states(model, 2, rng);
        const auto worst = testing::worst_group(testing::likelihood_grad_check(model, batch, initial, 2e-3));
        INFO("ablation " << flow::to_string(a) << " worst parameter " << worst.name << " error " << worst.error);
        CHECK(worst.error < 1e-4);
    }
}

TEST_CASE("marker relabelling by a graph automorphism leaves the likelihood unchanged") {
    auto cfg = testing::tiny_config();
    cfg.markers = 5;
    const auto skeleton = testing::chain_skeleton(5, 2);
    for (Ablation a : {Ablation::STMG, Ablation::MG}) {
        cfg.ablation = a;
        flow::FlowModel model(cfg, skeleton, 6);
        testing::randomize_parameters(model, 11, 0.3);
        const std::vector<std::size_t> perm{4, 3, 2, 1, 0};
        const flow::FlowModel mirrored = model.relabeled(perm);
        num::Rng rng = num::make_rng(19);
        const Tensor x = testing::random_tensor({5, 2}, rng);
        const Tensor hist = testing::random_tensor({cfg.history * 5, 2}, rng);
        const Tensor ctrl = testing::random_tensor({1, cfg.control_window()}, rng);
        Tensor xp(x.shape()), hp(hist.shape());
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t c = 0; c < 2; ++c) xp.at(perm[i], c) = x.at(i, c);
            for (std::size_t t = 0; t < cfg.history; ++t) {
                for (std::size_t c = 0; c < 2; ++c) hp.at(t * 5 + perm[i], c) = hist.at(t * 5 + i, c);
            }
        }
        auto s1 = model.initial_state(1), s2 = mirrored.initial_state(1);
        const double lp = model.log_likelihood(x, hist, ctrl, s1, 1)[0];
        const double lq = mirrored.log_likelihood(xp, hp, ctrl, s2, 1)[0];
        CHECK(lp == doctest::Approx(lq).epsilon(1e-11));
        // a non-automorphic relabelling of the data alone does change it
        auto s3 = model.initial_state(1);
        CHECK(std::abs(model.log_likelihood(xp, hp, ctrl, s3, 1)[0] - lp) > 1e-6);
    }
}

TEST_CASE("batched evaluation is bit-identical to per-sample evaluation") {
    const auto cfg = testing::tiny_config();
    flow::FlowModel model(cfg, testing::chain_skeleton(4, 1), 7);
    testing::randomize_parameters(model, 12);
    num::Rng rng = num::make_rng(20);
    const std::size_t batch = 3;
    const Tensor x = testing::random_tensor({batch * 4, 2}, rng);
    const Tensor hist = testing::random_tensor({batch * cfg.history * 4, 2}, rng);
    const Tensor ctrl = testing::random_tensor({batch, cfg.control_window()}, rng);
    auto states = model.initial_state(batch);
    const auto all = model.log_likelihood(x, hist, ctrl, states, batch);
    for (std::size_t b = 0; b < batch; ++b) {
        Tensor xb = Tensor::matrix(4, 2), hb = Tensor::matrix(cfg.history * 4, 2), cb = Tensor::matrix(1, cfg.control_window());
        std::copy_n(x.data() + b * 8, 8, xb.data());
        std::copy_n(hist.data() + b * hb.size(), hb.size(), hb.data());
        std::copy_n(ctrl.data() + b * cb.size(), cb.size(), cb.data());
        auto s = model.initial_state(1);
        CHECK(model.log_likelihood(xb, hb, cb, s, 1)[0] == all[b]);
    }
}

TEST_CASE("data-dependent init standardizes every actnorm output") {
    const auto cfg = testing::tiny_config();
    flow::FlowModel model(cfg, testing::chain_skeleton(4, 1), 8);
    testing::randomize_parameters(model, 13, 0.3);
    num::Rng rng = num::make_rng(21);
    // one predicted frame per sequence keeps the stacked order equal to the batch order
    auto batch = testing::random_sequences(cfg, 40, cfg.history + 1, rng);
    for (double& v : batch.frames.values()) v = 2.0 * v + 1.0;
    model.initialize_actnorm(batch);

    const std::size_t n = 40;
    const Tensor hist = flow::gather_history(batch, cfg.history, cfg.history);
    const Tensor ctrl = flow::gather_controls(batch, cfg.history, cfg.history);
    Tensor x = Tensor::matrix(n * 4, 2);
    for (std::size_t s = 0; s < n; ++s) {
        std::copy_n(batch.frames.data() + (s * (cfg.history + 1) + cfg.history) * 8, 8, x.data() + s * 8);
    }
    num::Tape t(&model.params(), false);
    const flow::Context ctx = model.context(t, hist, ctrl, n);
    for (std::size_t k = 0; k < model.steps().size(); ++k) {
        const auto& step = model.steps()[k];
        const Tensor y = flow::actnorm_forward(x, model.params().value(step.actnorm_scale),
                                               model.params().value(step.actnorm_bias)).y;
        for (std::size_t e = 0; e < 8; ++e) {
            double mean = 0.0, sq = 0.0;
            for (std::size_t s = 0; s < n; ++s) mean += y[s * 8 + e];
            mean /= n;
            for (std::size_t s = 0; s < n; ++s) sq += (y[s * 8 + e] - mean) * (y[s * 8 + e] - mean);
            CHECK(std::abs(mean) < 1e-6);
            CHECK(std::abs(std::sqrt(sq / n) - 1.0) < 1e-4);
        }
        auto state = cond::RecurrentValues::zeros(step.conditioner, n).on_tape(t);
        x = t.value(model.step_forward(t, k, t.constant(x), ctx, state, nullptr));
    }
}

TEST_CASE("ablations control the graph parameter census") {
    const auto skeleton = skel::default_skeleton();
    flow::FlowModel mg(testing::full_depth_config(Ablation::MG), skeleton, 1);
    flow::FlowModel smg(testing::full_depth_config(Ablation::SMG), skeleton, 1);
    flow::FlowModel stmg(testing::full_depth_config(Ablation::STMG), skeleton, 1);
    CHECK(mg.graph_parameter_count() == 0);
    CHECK(smg.graph_parameter_count() > 0);
    CHECK(smg.temporal_parameter_count() == 0);
    CHECK(stmg.temporal_parameter_count() > 0);
    CHECK(stmg.graph_parameter_count() > smg.graph_parameter_count());
}

TEST_CASE("configuration validation") {
    auto cfg = testing::tiny_config();
    cfg.kernel_schedule = {3, 3};
    CHECK_THROWS_AS(flow::FlowModel(cfg, testing::chain_skeleton(4, 1), 1), ConfigError);
    cfg = testing::tiny_config();
    cfg.kernel_schedule = {3, 4, 5};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = testing::tiny_config();
    CHECK_THROWS_AS(flow::FlowModel(cfg, testing::chain_skeleton(5, 1), 1), ConfigError);
    const auto schedule = flow::default_kernel_schedule(16);
    CHECK(std::count(schedule.begin(), schedule.end(), 3u) == 10);
    CHECK(std::count(schedule.begin(), schedule.end(), 5u) == 4);
    CHECK(std::count(schedule.begin(), schedule.end(), 7u) == 2);
    CHECK(flow::default_kernel_schedule(3).size() == 3);
    const auto round = flow::model_config_from_json(flow::to_json(testing::tiny_config(Ablation::SMG)));
    CHECK(round.ablation == Ablation::SMG);
    CHECK(round.kernel_schedule == testing::tiny_config().kernel_schedule);
    CHECK_THROWS_AS(flow::parse_ablation("XYZ"), ConfigError);
}

TEST_CASE("checkpoint round trip is lossless") {
    const auto cfg = testing::tiny_config();
    flow::FlowModel model(cfg, testing::chain_skeleton(4, 1), 9);
    testing::randomize_parameters(model, 14);
    model.set_standardization({Tensor({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8}), Tensor::matrix(4, 2, 0.3)});
    flow::CheckpointExtras extras;
    extras.optimizer = num::AdamState::zeros_like(model.params());
    extras.optimizer->step = 17;
    extras.optimizer->first_moment[0][0] = 0.125;
    extras.training = {{"step", 17}, {"note", "x"}};
    const auto path = std::filesystem::temp_directory_path() / "gflow_test_checkpoint.bin";
    flow::save_checkpoint(path, model, extras);
    const auto loaded = flow::load_checkpoint(path);
    for (std::size_t i = 0; i < model.params().count(); ++i) {
        const auto id = static_cast<num::ParamId>(i);
        CHECK(num::max_abs_diff(model.params().value(id), loaded.model.params().value(id)) == 0.0);
    }
    CHECK(loaded.model.seed() == 9);
    CHECK(num::max_abs_diff(loaded.model.standardization().mean, model.standardization().mean) == 0.0);
    REQUIRE(loaded.extras.optimizer.has_value());
    CHECK(loaded.extras.optimizer->step == 17);
    CHECK(loaded.extras.optimizer->first_moment[0][0] == 0.125);
    CHECK(loaded.extras.training.at("note") == "x");

    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
    CHECK_THROWS_AS(flow::load_checkpoint(path), IoError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(flow::load_checkpoint(path), IoError);
}

}  // TEST_SUITE
