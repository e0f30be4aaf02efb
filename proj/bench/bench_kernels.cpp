// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels against their OpenMP versions, plus the batched
// sequence likelihood end to end. Arg 0 selects the variant: 0 serial,
// 1 parallel.

#include <benchmark/benchmark.h>

#include <vector>

#include "gflow/app/train.hpp"
#include "gflow/kernels/kernels.hpp"
#include "gflow/numcore/random.hpp"
#include "gflow/skeleton/skeleton.hpp"

using namespace gflow;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    num::Rng rng = num::make_rng(seed);
    const num::Tensor t = num::normal({n}, rng);
    return {t.values().begin(), t.values().end()};
}

void BM_Gemm(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(1)), k = 256, m = 256;
    const auto a = random_vector(n * k, 1), b = random_vector(k * m, 2);
    std::vector<double> c(n * m);
    for (auto _ : state) {
        if (state.range(0) == 0) {
            kernels::serial::gemm_nn(n, k, m, a.data(), b.data(), c.data(), false);
        } else {
            kernels::parallel::gemm_nn(n, k, m, a.data(), b.data(), c.data(), false);
        }
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * k * m));
}
BENCHMARK(BM_Gemm)->ArgsProduct({{0, 1}, {64, 512}});

void BM_GraphAggregate(benchmark::State& state) {
    const auto part = skel::partition(skel::default_skeleton(), 5);
    const std::size_t batch = static_cast<std::size_t>(state.range(1)), width = 32;
    const std::size_t subsets = part.stack.subsets.size(), markers = part.stack.markers;
    const auto xw = random_vector(batch * markers * subsets * width, 3);
    std::vector<double> y(batch * markers * width);
    for (auto _ : state) {
        if (state.range(0) == 0) {
            kernels::serial::graph_aggregate(part.stack, batch, width, xw.data(), y.data());
        } else {
            kernels::parallel::graph_aggregate(part.stack, batch, width, xw.data(), y.data());
        }
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_GraphAggregate)->ArgsProduct({{0, 1}, {16, 256}});

void BM_TemporalConv(benchmark::State& state) {
    const std::size_t batch = static_cast<std::size_t>(state.range(1)), time = 10, markers = 21, channels = 32, taps = 9;
    const auto x = random_vector(batch * time * markers * channels, 4), w = random_vector(taps * channels, 5);
    std::vector<double> y(x.size());
    for (auto _ : state) {
        if (state.range(0) == 0) {
            kernels::serial::temporal_conv(batch, time, markers, channels, taps, x.data(), w.data(), y.data());
        } else {
            kernels::parallel::temporal_conv(batch, time, markers, channels, taps, x.data(), w.data(), y.data());
        }
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_TemporalConv)->ArgsProduct({{0, 1}, {8, 64}});

void BM_LstmPointwise(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(1)), hidden = 512;
    const auto gates = random_vector(n * 4 * hidden, 6), c = random_vector(n * hidden, 7);
    std::vector<double> out(n * 2 * hidden);
    for (auto _ : state) {
        if (state.range(0) == 0) {
            kernels::serial::lstm_pointwise(n, hidden, gates.data(), c.data(), out.data());
        } else {
            kernels::parallel::lstm_pointwise(n, hidden, gates.data(), c.data(), out.data());
        }
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_LstmPointwise)->ArgsProduct({{0, 1}, {8, 128}});

// Forward likelihood of a batch of 40-frame windows under the dispatch policy.
void BM_SequenceNll(benchmark::State& state) {
    kernels::set_policy(state.range(0) == 0 ? kernels::Policy::Serial : kernels::Policy::Parallel);
    flow::ModelConfig c;
    c.flow_steps = 8;
    c.kernel_schedule = flow::default_kernel_schedule(8);
    c.lstm_hidden = 64;
    c.sgcn_width = 8;
    c.stgcn_widths = {16, 16};
    flow::FlowModel model(c, skel::default_skeleton(), 1);
    app::CorpusConfig cc;
    cc.clips = 4;
    cc.steps = 12;
    std::vector<data::MotionClip> clips;
    for (auto& s : app::synth_corpus(cc)) clips.push_back(std::move(s.clip));
    const auto windows = app::make_windows(clips, model.skeleton(), 40, 0.5, true);
    model.set_standardization(data::standardize_fit(windows));
    std::vector<data::TrainingWindow> batch(windows.begin(), windows.begin() + static_cast<long>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(app::mean_nll(model, batch, batch.size()));
    kernels::set_policy(kernels::Policy::Parallel);
}
BENCHMARK(BM_SequenceNll)->ArgsProduct({{0, 1}, {4, 16}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
