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
#include "rismi/channel.hpp"
#include "rismi/presets.hpp"
#include "rismi/rng.hpp"

#include <doctest.h>

#include <numbers>

using namespace rismi;

namespace {

// E[X^H C X] for X = U (P o Y) V^H with independent zero-mean entries of
// variance var(i, a), summed one rank-one term at a time.
CMatrix literal_left(const CMatrix& u, const CMatrix& v, const RMatrix& var, const CMatrix& c) {
    CMatrix out = CMatrix::Zero(v.rows(), v.rows());
    for (Eigen::Index i = 0; i < var.rows(); ++i) {
        for (Eigen::Index a = 0; a < var.cols(); ++a) {
            const CMatrix e = u.col(i) * v.col(a).adjoint();
            out += var(i, a) * e.adjoint() * c * e;
        }
    }
    return out;
}

CMatrix literal_right(const CMatrix& u, const CMatrix& v, const RMatrix& var, const CMatrix& c) {
    CMatrix out = CMatrix::Zero(u.rows(), u.rows());
    for (Eigen::Index i = 0; i < var.rows(); ++i) {
        for (Eigen::Index a = 0; a < var.cols(); ++a) {
            const CMatrix e = u.col(i) * v.col(a).adjoint();
            out += var(i, a) * e * c * e.adjoint();
        }
    }
    return out;
}

CMatrix random_hermitian(std::mt19937_64& rng, Eigen::Index n) {
    const CMatrix a = oracle::gaussian(rng, n, n);
    return a + a.adjoint();
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("UPA steering vector follows the planar phase ramp") {
    const double az = 0.7, el = 1.1;
    const CVector a = upa_steering(az, el, 3, 4);
    REQUIRE(a.size() == 12);
    for (std::size_t in = 0; in < 4; ++in) {
        for (std::size_t im = 0; im < 3; ++im) {
            const double phase =
                std::numbers::pi * (double(in) * std::sin(az) * std::sin(el) + double(im) * std::cos(el));
            const cplx expected = std::exp(cplx(0.0, phase));
            CHECK(std::abs(a(Eigen::Index(in * 3 + im)) - expected) < 1e-14);
        }
    }
    CHECK_THROWS_AS(upa_steering(0.0, 0.0, 0, 2), DimensionError);
}

TEST_CASE("line-of-sight specular part is a rank-one outer product") {
    const CMatrix s = los_specular({0.3, 1.0}, {1.2, 0.4}, {2, 2}, {1, 3});
    CHECK(s.rows() == 4);
    CHECK(s.cols() == 3);
    CHECK(s.squaredNorm() == doctest::Approx(12.0));
    Eigen::JacobiSVD<CMatrix> svd(s);
    CHECK(svd.singularValues()(1) < 1e-12);
}

TEST_CASE("Rician factor scales specular power to kappa times the scatter power") {
    std::mt19937_64 rng(3);
    const CMatrix shape = oracle::gaussian(rng, 4, 6);
    RMatrix prof = RMatrix::Constant(4, 6, 0.5);
    prof(0, 0) = 2.0;
    const double scatter = prof.squaredNorm() / 6.0;
    const CMatrix s = apply_rician_factor(shape, prof, 3.0, 6.0);
    CHECK(s.squaredNorm() == doctest::Approx(3.0 * scatter).epsilon(1e-13));
    CHECK(apply_rician_factor(shape, prof, 0.0, 6.0).norm() == 0.0);
    CHECK_THROWS(apply_rician_factor(shape, prof, -1.0, 6.0));
    CHECK_THROWS(apply_rician_factor(shape, RMatrix::Zero(4, 6), 1.0, 6.0));
}

TEST_CASE("fixed-total convention keeps the link power independent of kappa") {
    std::mt19937_64 rng(4);
    const CMatrix shape = oracle::gaussian(rng, 5, 8);
    const RMatrix prof = RMatrix::Constant(5, 8, 1.0);
    const double raw = prof.squaredNorm() / 8.0;
    for (double kappa : {0.0, 1.0, 10.0, 100.0}) {
        const LinkF l = make_link_f(shape, identity(5), identity(8), prof, kappa, PowerConvention::FixedTotal);
        CHECK(l.specular.squaredNorm() + l.profile.squaredNorm() / 8.0 == doctest::Approx(raw).epsilon(1e-12));
        const LinkF s = make_link_f(shape, identity(5), identity(8), prof, kappa, PowerConvention::SpecularOnly);
        CHECK(s.profile.squaredNorm() == doctest::Approx(prof.squaredNorm()));
    }
}

TEST_CASE("correlation maps equal the entrywise expectation") {
    std::mt19937_64 rng(5);
    const Eigen::Index t = 4, r = 3, l = 5;
    KeyedStream s(9, StreamTag::Statistics, {1});
    LinkF f;
    f.specular = CMatrix::Zero(l, t);
    f.rx_basis = haar_unitary(l, s);
    f.tx_basis = haar_unitary(t, s);
    f.profile = (RMatrix::Random(l, t).array() + 1.5).matrix();
    LinkG g;
    g.specular = CMatrix::Zero(r, l);
    g.rx_basis = haar_unitary(r, s);
    g.tx_basis = haar_unitary(l, s);
    g.profile = (RMatrix::Random(r, l).array() + 1.5).matrix();

    // scatter variances: F entries M^2 / T; G entries N^2 / (T r_k) = N^2 / L_k
    const RMatrix var_f = f.profile.array().square() / double(t);
    const RMatrix var_g = g.profile.array().square() / double(l);

    const CMatrix cr = random_hermitian(rng, r), cl = random_hermitian(rng, l), ct = random_hermitian(rng, t);
    CHECK(oracle::rel_err(eta(g, cr), literal_left(g.rx_basis, g.tx_basis, var_g, cr)) < 1e-12);
    CHECK(oracle::rel_err(eta_tilde(g, cl), literal_right(g.rx_basis, g.tx_basis, var_g, cl)) < 1e-12);
    CHECK(oracle::rel_err(zeta(f, cl), literal_left(f.rx_basis, f.tx_basis, var_f, cl)) < 1e-12);
    CHECK(oracle::rel_err(zeta_tilde(f, ct), literal_right(f.rx_basis, f.tx_basis, var_f, ct)) < 1e-12);
    CHECK_THROWS(eta(g, cl));
}

TEST_CASE("realization composes the cascaded channel") {
    const ChannelSpec spec = build_channel(six_panel_recipe(4, 1.0, 2026));
    const ChannelRealization real = sample_realization(spec, 5, 17);
    CMatrix h = real.f[0];
    for (std::size_t k = 1; k <= spec.ris_count(); ++k) {
        h += std::sqrt(spec.link_g(k).rho) * real.g[k - 1] * real.f[k];
    }
    CHECK(oracle::rel_err(real.h, h) < 1e-14);
    const Factorization gf = assemble_gf(real, spec);
    CHECK(oracle::rel_err(gf.g * gf.f, h) < 1e-13);

    // same keys, same draw; another trial, another draw
    const ChannelRealization again = sample_realization(spec, 5, 17);
    CHECK((again.h - real.h).norm() == 0.0);
    CHECK((sample_realization(spec, 5, 18).h - real.h).norm() > 0.0);
}

TEST_CASE("deterministic channel and mean Gram matrix") {
    std::mt19937_64 rng(6);
    const std::vector<CMatrix> f{oracle::gaussian(rng, 3, 4), oracle::gaussian(rng, 2, 4)};
    const std::vector<CMatrix> g{oracle::gaussian(rng, 3, 2)};
    const ChannelSpec spec = oracle::deterministic_spec(f, g, {0.6});
    CHECK(spec.deterministic());
    const CMatrix h = oracle::deterministic_h(f, g, {0.6});
    CHECK(oracle::rel_err(deterministic_channel(spec), h) < 1e-14);
    CHECK(oracle::rel_err(mean_gram(spec), h * h.adjoint()) < 1e-13);
    Eigen::JacobiSVD<CMatrix> svd(h);
    CHECK(support_edge_estimate(spec) == doctest::Approx(std::pow(svd.singularValues()(0), 2)).epsilon(1e-10));
}

TEST_CASE("RIS phase shifts are absorbed into the G-link") {
    std::mt19937_64 rng(7);
    KeyedStream s(3, StreamTag::Statistics, {2});
    LinkG g;
    g.specular = oracle::gaussian(rng, 3, 4);
    g.rx_basis = haar_unitary(3, s);
    g.tx_basis = haar_unitary(4, s);
    g.profile = RMatrix::Constant(3, 4, 1.0);
    const LinkG before = g;
    const std::vector<double> phases{0.1, 1.0, -2.0, 3.0};
    absorb_phase_shifts(g, phases);
    CVector theta(4);
    for (int i = 0; i < 4; ++i) theta(i) = std::polar(1.0, phases[std::size_t(i)]);
    CHECK(oracle::rel_err(g.specular, before.specular * theta.asDiagonal()) < 1e-15);
    CHECK(oracle::rel_err(g.tx_basis.adjoint(), before.tx_basis.adjoint() * theta.asDiagonal()) < 1e-15);
    CHECK_THROWS_AS(absorb_phase_shifts(g, {0.0}), DimensionError);
}

TEST_CASE("channel spec rejects inconsistent shapes") {
    std::mt19937_64 rng(8);
    const std::vector<CMatrix> f{oracle::gaussian(rng, 3, 4), oracle::gaussian(rng, 2, 4)};
    CHECK_THROWS(oracle::deterministic_spec({f[0], f[1]}, {}, {}));
    const ChannelSpec ok = oracle::deterministic_spec({f[0]}, {}, {});
    // F_0 must have R rows
    CHECK_THROWS_AS(ChannelSpec(4, 5, ok.links_f(), {}), DimensionError);
    CHECK_THROWS_AS(ChannelSpec(0, 3, ok.links_f(), {}), DimensionError);
}

TEST_CASE("keyed streams are reproducible and independent") {
    KeyedStream a(1, StreamTag::ScatterF, {0, 1});
    KeyedStream b(1, StreamTag::ScatterF, {0, 1});
    KeyedStream c(1, StreamTag::ScatterF, {1, 0});
    const CMatrix xa = a.complex_normal_matrix(4, 4, 1.0);
    CHECK((xa - b.complex_normal_matrix(4, 4, 1.0)).norm() == 0.0);
    CHECK((xa - c.complex_normal_matrix(4, 4, 1.0)).norm() > 0.0);

    KeyedStream d(2, StreamTag::Statistics, {});
    const CMatrix big = d.complex_normal_matrix(200, 200, 2.0);
    const double power = big.squaredNorm() / double(big.size());
    CHECK(power == doctest::Approx(2.0).epsilon(0.02));
    CHECK(std::abs(big.mean()) < 0.02);
    for (int i = 0; i < 1000; ++i) {
        const double u = d.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
    CHECK(is_unitary(haar_unitary(7, d)));
}

TEST_CASE("presets have the advertised shapes") {
    const ChannelSpec mp = build_channel(marchenko_pastur_recipe(16));
    CHECK(mp.tx() == 16);
    CHECK(mp.rx() == 16);
    CHECK(mp.ris_count() == 0);
    CHECK(deterministic_channel(mp).norm() == 0.0);

    const ChannelSpec d = build_channel(dense_ris_recipe(2, 2026));
    CHECK(d.tx() == 64);
    CHECK(d.rx() == 64);
    CHECK(d.ris_count() == 2);
    CHECK(d.link_g(2).elements() == 144);

    const ChannelSpec six = build_channel(six_panel_recipe(8, 10.0, 2026));
    const std::vector<double> rho{0.9, 0.8, 0.7, 0.5, 0.3, 0.1};
    REQUIRE(six.ris_count() == 6);
    for (std::size_t k = 1; k <= 6; ++k) {
        CHECK(six.link_g(k).rho == rho[k - 1]);
        CHECK(six.link_g(k).elements() == 16);
    }

    const ChannelSpec narrow = build_channel(narrow_angle_recipe(3, 1));
    CHECK(narrow.tx() == 16);
    CHECK(narrow.rx() == 10);
}

TEST_CASE("link statistics do not depend on K or kappa") {
    const ChannelSpec k2 = build_channel(dense_ris_recipe(2, 77));
    const ChannelSpec k4 = build_channel(dense_ris_recipe(4, 77));
    CHECK((k2.link_f(1).profile - k4.link_f(1).profile).norm() == 0.0);
    CHECK((k2.link_g(2).rx_basis - k4.link_g(2).rx_basis).norm() == 0.0);

    const ChannelSpec a = build_channel(kappa_sweep_recipe(2, 1.0, 5));
    const ChannelSpec b = build_channel(kappa_sweep_recipe(2, 10.0, 5));
    CHECK((a.link_f(0).tx_basis - b.link_f(0).tx_basis).norm() == 0.0);
    // fixed total: specular share grows with kappa
    const double pa = a.link_f(0).specular.squaredNorm(), pb = b.link_f(0).specular.squaredNorm();
    CHECK(pb > pa);

    const ChannelRecipe trimmed = with_ris_count(dense_ris_recipe(4, 77), 2);
    CHECK(trimmed.ris_count() == 2);
    CHECK(with_kappa(dense_ris_recipe(1, 77), 5.0).ris_f[0].kappa == 5.0);
}

}  // TEST_SUITE
