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

#include "oracle.hpp"
#include "rismi/presets.hpp"
#include "rismi/solver.hpp"

#include <doctest.h>

using namespace rismi;

namespace {

/// Root of z G^2 - z G + 1 = 0 with Im G < 0 (Im z > 0), or G < 0 (z < 0).
cplx mp_cauchy(cplx z) {
    const cplx disc = std::sqrt(z * z - 4.0 * z);
    const cplx a = (z + disc) / (2.0 * z), b = (z - disc) / (2.0 * z);
    if (z.imag() > 0.0) return a.imag() < b.imag() ? a : b;
    return std::abs(a) < std::abs(b) ? a : b;  // decays like 1/z
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("deterministic channel: Cauchy transform equals the resolvent trace") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t k : {0u, 2u}) {
        std::vector<CMatrix> f{oracle::gaussian(rng, 4, 5, 0.5)};
        std::vector<CMatrix> g;
        std::vector<double> rho;
        for (std::size_t i = 0; i < k; ++i) {
            f.push_back(oracle::gaussian(rng, 3, 5, 0.5));
            g.push_back(oracle::gaussian(rng, 4, 3, 0.5));
            rho.push_back(0.5 + 0.2 * double(i));
        }
        const ChannelSpec spec = oracle::deterministic_spec(f, g, rho);
        const CMatrix h = oracle::deterministic_h(f, g, rho);
        const CMatrix b = h * h.adjoint();
        SolverOptions opts;
        for (int i = 0; i < 10; ++i) {
            const cplx z = i % 2 ? cplx(-10.0 * u(rng) - 0.01, 0.0) : cplx(8.0 * u(rng) - 1.0, 0.05 + 2.0 * u(rng));
            const SolverState s = solve_fixed_point(spec, z, nullptr, opts);
            REQUIRE(s.converged());
            CHECK(std::abs(cauchy_B(spec, s) - oracle::resolvent_trace(b, z)) <= 1e-9);
        }
    }
}

TEST_CASE("Marchenko-Pastur Cauchy transform in closed form") {
    const ChannelSpec spec = build_channel(marchenko_pastur_recipe(16));
    SolverOptions opts;
    for (cplx z : {cplx(1.0, 0.5), cplx(3.0, 0.1), cplx(-2.0, 0.0), cplx(5.0, 1.0), cplx(0.5, 0.01)}) {
        const SolverState s = solve_fixed_point(spec, z, nullptr, opts);
        REQUIRE(s.converged());
        CHECK(std::abs(cauchy_B(spec, s) - mp_cauchy(z)) < 1e-8);
        CHECK(std::abs(cauchy_trace(s) - mp_cauchy(z)) < 1e-8);
    }
}

TEST_CASE("Herglotz sign and 1/z decay on a random channel") {
    const ChannelSpec spec = build_channel(six_panel_recipe(4, 1.0, 7));
    SolverOptions opts;
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 12; ++i) {
        const cplx z(30.0 * u(rng) - 5.0, 0.01 + 5.0 * u(rng));
        const SolverState s = solve_fixed_point(spec, z, nullptr, opts);
        REQUIRE(s.converged());
        CHECK(cauchy_B(spec, s).imag() < 0.0);
    }
    double last = 1.0;
    for (double r : {1e2, 1e3, 1e4}) {
        const cplx z = r * cplx(0.6, 0.8);
        const SolverState s = solve_fixed_point(spec, z, nullptr, opts);
        REQUIRE(s.converged());
        const double dev = std::abs(z * cauchy_B(spec, s) - 1.0);
        CHECK(dev < last);
        last = dev;
    }
    CHECK(last < 1e-2);
}

TEST_CASE("converged state is a fixed point of the map") {
    const ChannelSpec spec = build_channel(six_panel_recipe(4, 10.0, 7));
    SolverOptions opts;
    const SolverState s = solve_fixed_point(spec, cplx(2.0, 0.3), nullptr, opts);
    REQUIRE(s.converged());
    const SolverState m = apply_fixed_point_map(spec, s);
    CHECK(oracle::rel_err(m.gc_tilde, s.gc_tilde) < 1e-8);
    CHECK(oracle::rel_err(m.gd_tilde, s.gd_tilde) < 1e-8);
    const SolverState zero = initial_state(spec, cplx(2.0, 0.3));
    CHECK(zero.gc_tilde.norm() == 0.0);
}

TEST_CASE("warm and cold starts agree") {
    const ChannelSpec spec = build_channel(kappa_sweep_recipe(2, 5.0, 3));
    SolverOptions opts;
    const SolverState a = solve_fixed_point(spec, cplx(4.0, 0.2), nullptr, opts);
    const SolverState b = solve_fixed_point(spec, cplx(4.1, 0.2), &a, opts);
    const SolverState c = solve_fixed_point(spec, cplx(4.1, 0.2), nullptr, opts);
    REQUIRE(b.converged());
    REQUIRE(c.converged());
    CHECK(std::abs(cauchy_B(spec, b) - cauchy_B(spec, c)) < 1e-9);
}

TEST_CASE("plain iteration and Anderson reach the same point") {
    const ChannelSpec spec = build_channel(six_panel_recipe(4, 1.0, 9));
    SolverOptions anderson, plain;
    plain.acceleration = Acceleration::None;
    plain.max_iterations = 20000;
    for (cplx z : {cplx(-0.5, 0.0), cplx(-50.0, 0.0), cplx(3.0, 0.05)}) {
        const SolverState a = solve_fixed_point(spec, z, nullptr, anderson);
        const SolverState p = solve_fixed_point(spec, z, nullptr, plain);
        REQUIRE(a.converged());
        REQUIRE(p.converged());
        CHECK(std::abs(cauchy_B(spec, a) - cauchy_B(spec, p)) < 1e-8);
        CHECK(a.iterations <= p.iterations);
    }
}

TEST_CASE("sweeps: parallel equals serial, and the path does not matter") {
    const ChannelSpec spec = build_channel(six_panel_recipe(4, 1.0, 2026));
    SolverOptions opts;
    opts.chain_length = 8;
    std::vector<cplx> pts;
    for (int i = 0; i < 40; ++i) pts.emplace_back(-std::pow(10.0, -2.0 + 0.1 * i), 0.0);
    const auto par = sweep(spec, pts, opts);
    const auto ser = sweep_serial(spec, pts, opts);
    std::vector<cplx> rev(pts.rbegin(), pts.rend());
    const auto back = sweep(spec, rev, opts);
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        REQUIRE(par[i].converged());
        CHECK(cauchy_B(spec, par[i]) == cauchy_B(spec, ser[i]));
        worst = std::max(worst, std::abs(cauchy_B(spec, par[i]) - cauchy_B(spec, back[pts.size() - 1 - i])));
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("invalid arguments throw") {
    const ChannelSpec spec = build_channel(marchenko_pastur_recipe(4));
    SolverOptions bad;
    bad.damping = 0.0;
    CHECK_THROWS(solve_fixed_point(spec, cplx(1.0, 1.0), nullptr, bad));
    bad = SolverOptions{};
    bad.tolerance = -1.0;
    CHECK_THROWS(bad.validate());
    // on the positive real axis only a positive epsilon_imag makes the point valid
    CHECK_THROWS(solve_fixed_point(spec, cplx(1.0, 0.0), nullptr, SolverOptions{}));
    SolverOptions eps;
    eps.epsilon_imag = 1e-3;
    CHECK(solve_fixed_point(spec, cplx(1.0, 0.0), nullptr, eps).converged());
    CHECK(std::string(to_string(SolveStatus::BranchViolation)) == "branch_violation");
}

}  // TEST_SUITE
