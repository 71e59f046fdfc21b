// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The rismi authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Parallel kernels against their serial references. Run with
// OMP_NUM_THREADS set to the number of cores to see the speedup.

#include "rismi/analysis.hpp"
#include "rismi/montecarlo.hpp"
#include "rismi/presets.hpp"
#include "rismi/solver.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

namespace {

using namespace rismi;

const ChannelSpec& six_panel() {
    static const ChannelSpec spec = build_channel(six_panel_recipe(8, 1.0, 2026));
    return spec;
}

std::vector<cplx> density_points(const ChannelSpec& spec, std::size_t n) {
    const double edge = support_edge_estimate(spec);
    std::vector<cplx> pts;
    for (std::size_t i = 0; i < n; ++i) pts.emplace_back(1.1 * edge * double(i + 1) / double(n), 1e-3 * edge);
    return pts;
}

void BM_SweepParallel(benchmark::State& state) {
    const auto pts = density_points(six_panel(), 128);
    for (auto _ : state) benchmark::DoNotOptimize(sweep(six_panel(), pts, SolverOptions{}));
    state.counters["threads"] = omp_get_max_threads();
}

void BM_SweepSerial(benchmark::State& state) {
    const auto pts = density_points(six_panel(), 128);
    for (auto _ : state) benchmark::DoNotOptimize(sweep_serial(six_panel(), pts, SolverOptions{}));
}

void BM_EigenvaluesParallel(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(empirical_eigenvalues(six_panel(), std::size_t(state.range(0)), 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EigenvaluesSerial(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(empirical_eigenvalues_serial(six_panel(), std::size_t(state.range(0)), 1));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CovarianceParallel(benchmark::State& state) {
    const CMatrix p = CMatrix::Identity(8, 8);
    for (auto _ : state) benchmark::DoNotOptimize(empirical_covariance(six_panel(), CorrelationMap::Eta, 1, p, 2000, 1));
}

void BM_CovarianceSerial(benchmark::State& state) {
    const CMatrix p = CMatrix::Identity(8, 8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(empirical_covariance_serial(six_panel(), CorrelationMap::Eta, 1, p, 2000, 1));
    }
}

void BM_MutualInformationSweep(benchmark::State& state) {
    const std::vector<double> db{0.0, 10.0, 20.0, 30.0};
    for (auto _ : state) benchmark::DoNotOptimize(mutual_information_sweep(six_panel(), db, SolverOptions{}));
}

}  // namespace

BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EigenvaluesParallel)->Arg(2000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EigenvaluesSerial)->Arg(2000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CovarianceParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CovarianceSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MutualInformationSweep)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
