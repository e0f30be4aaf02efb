// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstring>
#include <vector>

#include "gflow/kernels/kernels.hpp"
#include "gflow/numcore/random.hpp"
#include "gflow/skeleton/skeleton.hpp"
#include "support/fixtures.hpp"

using namespace gflow;

namespace {

std::vector<double> random_vector(std::size_t n, num::Rng& rng) {
    const num::Tensor t = num::normal({n}, rng);
    return {t.values().begin(), t.values().end()};
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

class PolicyGuard {
public:
    PolicyGuard() : saved_(kernels::policy()) {}
    ~PolicyGuard() { kernels::set_policy(saved_); }

private:
    kernels::Policy saved_;
};

}  // namespace

TEST_SUITE("kernels") {
    TEST_CASE("gemm variants match a naive triple loop and agree bitwise across policies") {
        num::Rng rng = num::make_rng(31);
        const std::size_t n = 67, k = 45, m = 53;
        const auto a = random_vector(n * k, rng);
        const auto b = random_vector(k * m, rng);
        std::vector<double> naive(n * m, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
                for (std::size_t j = 0; j < m; ++j) naive[i * m + j] += a[i * k + p] * b[p * m + j];
            }
        }
        std::vector<double> s(n * m), p(n * m);
        kernels::serial::gemm_nn(n, k, m, a.data(), b.data(), s.data(), false);
        kernels::parallel::gemm_nn(n, k, m, a.data(), b.data(), p.data(), false);
        CHECK(bit_equal(s, p));
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == doctest::Approx(naive[i]).epsilon(1e-12));

        // a^T c with a [n x k], c [n x m] -> [k x m]
        const auto c = random_vector(n * m, rng);
        std::vector<double> st(k * m, 1.0), pt(k * m, 1.0);
        kernels::serial::gemm_tn(n, k, m, a.data(), c.data(), st.data(), true);
        kernels::parallel::gemm_tn(n, k, m, a.data(), c.data(), pt.data(), true);
        CHECK(bit_equal(st, pt));
        double ref = 1.0;
        for (std::size_t i = 0; i < n; ++i) ref += a[i * k + 2] * c[i * m + 5];
        CHECK(st[2 * m + 5] == doctest::Approx(ref).epsilon(1e-12));

        // c b^T with c [n x m], d [k x m] -> [n x k]
        const auto d = random_vector(k * m, rng);
        std::vector<double> sn(n * k), pn(n * k);
        kernels::serial::gemm_nt(n, m, k, c.data(), d.data(), sn.data(), false);
        kernels::parallel::gemm_nt(n, m, k, c.data(), d.data(), pn.data(), false);
        CHECK(bit_equal(sn, pn));
        double ref2 = 0.0;
        for (std::size_t j = 0; j < m; ++j) ref2 += c[3 * m + j] * d[7 * m + j];
        CHECK(sn[3 * k + 7] == doctest::Approx(ref2).epsilon(1e-12));
    }

    TEST_CASE("graph aggregation and its adjoint agree bitwise across policies") {
        const auto adjacency = skel::partition(skel::default_skeleton(), 5);
        const std::size_t batch = 40, width = 16, d = adjacency.stack.subsets.size();
        num::Rng rng = num::make_rng(32);
        const std::size_t rows = batch * adjacency.markers();
        const auto xw = random_vector(rows * d * width, rng);
        std::vector<double> s(rows * width), p(rows * width);
        kernels::serial::graph_aggregate(adjacency.stack, batch, width, xw.data(), s.data());
        kernels::parallel::graph_aggregate(adjacency.stack, batch, width, xw.data(), p.data());
        CHECK(bit_equal(s, p));

        const auto dy = random_vector(rows * width, rng);
        std::vector<double> sa(rows * d * width, 0.0), pa(rows * d * width, 0.0);
        kernels::serial::graph_aggregate_adjoint(adjacency.stack, batch, width, dy.data(), sa.data());
        kernels::parallel::graph_aggregate_adjoint(adjacency.stack, batch, width, dy.data(), pa.data());
        CHECK(bit_equal(sa, pa));

        // <A x, dy> == <x, A^T dy>
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) lhs += s[i] * dy[i];
        for (std::size_t i = 0; i < xw.size(); ++i) rhs += xw[i] * sa[i];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }

    TEST_CASE("temporal convolution agrees bitwise across policies and matches a direct sum") {
        const std::size_t batch = 12, time = 10, markers = 21, channels = 32, taps = 9;
        num::Rng rng = num::make_rng(33);
        const auto x = random_vector(batch * time * markers * channels, rng);
        const auto kernel = random_vector(taps * channels, rng);
        std::vector<double> s(x.size()), p(x.size());
        kernels::serial::temporal_conv(batch, time, markers, channels, taps, x.data(), kernel.data(), s.data());
        kernels::parallel::temporal_conv(batch, time, markers, channels, taps, x.data(), kernel.data(), p.data());
        CHECK(bit_equal(s, p));

        const std::size_t b = 3, t = 1, m = 4, c = 7;
        double ref = 0.0;
        for (std::size_t k = 0; k < taps; ++k) {
            const long src = static_cast<long>(t) + static_cast<long>(k) - static_cast<long>(taps / 2);
            const std::size_t tt = kernels::mirror_index(src, time);
            ref += kernel[k * channels + c] * x[((b * time + tt) * markers + m) * channels + c];
        }
        CHECK(s[((b * time + t) * markers + m) * channels + c] == doctest::Approx(ref).epsilon(1e-12));

        const auto dy = random_vector(x.size(), rng);
        std::vector<double> sdx(x.size(), 0.0), pdx(x.size(), 0.0), sdk(kernel.size(), 0.0), pdk(kernel.size(), 0.0);
        kernels::serial::temporal_conv_backward(batch, time, markers, channels, taps, x.data(), kernel.data(),
                                                dy.data(), sdx.data(), sdk.data());
        kernels::parallel::temporal_conv_backward(batch, time, markers, channels, taps, x.data(), kernel.data(),
                                                  dy.data(), pdx.data(), pdk.data());
        CHECK(bit_equal(sdx, pdx));
        CHECK(bit_equal(sdk, pdk));
    }

    TEST_CASE("mirror padding reflects with the edge sample repeated") {
        CHECK(kernels::mirror_index(-1, 3) == 0);
        CHECK(kernels::mirror_index(-2, 3) == 1);
        CHECK(kernels::mirror_index(3, 3) == 2);
        CHECK(kernels::mirror_index(4, 3) == 1);
        for (long t = 0; t < 5; ++t) CHECK(kernels::mirror_index(t, 5) == static_cast<std::size_t>(t));
    }

    TEST_CASE("lstm pointwise agrees bitwise across policies") {
        const std::size_t n = 64, hidden = 96;
        num::Rng rng = num::make_rng(34);
        const auto gates = random_vector(n * 4 * hidden, rng);
        const auto c = random_vector(n * hidden, rng);
        std::vector<double> s(n * 2 * hidden), p(n * 2 * hidden);
        kernels::serial::lstm_pointwise(n, hidden, gates.data(), c.data(), s.data());
        kernels::parallel::lstm_pointwise(n, hidden, gates.data(), c.data(), p.data());
        CHECK(bit_equal(s, p));
        const auto dout = random_vector(s.size(), rng);
        std::vector<double> sg(gates.size(), 0.0), pg(gates.size(), 0.0), sc(c.size(), 0.0), pc(c.size(), 0.0);
        kernels::serial::lstm_pointwise_backward(n, hidden, gates.data(), c.data(), s.data(), dout.data(), sg.data(),
                                                 sc.data());
        kernels::parallel::lstm_pointwise_backward(n, hidden, gates.data(), c.data(), p.data(), dout.data(),
                                                   pg.data(), pc.data());
        CHECK(bit_equal(sg, pg));
        CHECK(bit_equal(sc, pc));
    }

    TEST_CASE("model likelihood and gradients are identical under both policies") {
        PolicyGuard guard;
        const auto cfg = testing::full_depth_config();
        flow::FlowModel model(cfg, skel::default_skeleton(), 3);
        testing::randomize_parameters(model, 4, 0.1);
        num::Rng rng = num::make_rng(35);
        const auto batch = testing::random_sequences(cfg, 3, cfg.history + 2, rng);
        auto run = [&](kernels::Policy policy) {
            kernels::set_policy(policy);
            num::Tape tape(&model.params());
            const num::Var ll = model.sequence_log_likelihood(tape, batch);
            const double value = tape.value(ll).item();
            return std::make_pair(value, tape.backward(ll));
        };
        const auto [vs, gs] = run(kernels::Policy::Serial);
        const auto [vp, gp] = run(kernels::Policy::Parallel);
        CHECK(std::memcmp(&vs, &vp, sizeof(double)) == 0);
        for (std::size_t i = 0; i < gs.size(); ++i) {
            CHECK(bit_equal(gs[i].storage(), gp[i].storage()));
        }
    }
}
