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

#include "rismi/presets.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rismi {

namespace {

using Index = Eigen::Index;

constexpr std::uint64_t kSideF = 0;
constexpr std::uint64_t kSideG = 1;
constexpr std::uint64_t kSidePhase = 2;

enum Purpose : std::uint64_t { RxBasis = 0, TxBasis = 1, Profile = 2 };

CMatrix draw_basis(const BasisRecipe& b, Index n, std::uint64_t seed, std::uint64_t side, std::uint64_t k,
                   std::uint64_t purpose) {
    switch (b.kind) {
        case BasisKind::Identity:
            return CMatrix::Identity(n, n);
        case BasisKind::Haar: {
            KeyedStream s(seed, StreamTag::Statistics, {side, k, purpose});
            return haar_unitary(n, s);
        }
        case BasisKind::Explicit:
            if (b.matrix.rows() != n || b.matrix.cols() != n) {
                throw DimensionError("explicit eigenbasis has the wrong size");
            }
            return b.matrix;
    }
    throw std::invalid_argument("unknown basis kind");
}

RMatrix draw_profile(const ProfileRecipe& p, Index rows, Index cols, std::uint64_t seed, std::uint64_t side,
                     std::uint64_t k) {
    switch (p.kind) {
        case ProfileKind::Ones:
            return RMatrix::Ones(rows, cols);
        case ProfileKind::Zeros:
            return RMatrix::Zero(rows, cols);
        case ProfileKind::Uniform: {
            KeyedStream s(seed, StreamTag::Statistics, {side, k, static_cast<std::uint64_t>(Profile)});
            RMatrix m(rows, cols);
            for (Index j = 0; j < cols; ++j) {
                for (Index i = 0; i < rows; ++i) {
                    m(i, j) = s.uniform(p.lo, p.hi);
                }
            }
            if (p.normalize) {
                const double ms = m.squaredNorm() / static_cast<double>(m.size());
                if (ms <= 0.0) throw std::invalid_argument("uniform profile draw is identically zero");
                m /= std::sqrt(ms);
            }
            return m;
        }
        case ProfileKind::Values:
            if (p.values.rows() != rows || p.values.cols() != cols) {
                throw DimensionError("profile values have the wrong shape");
            }
            return p.values;
    }
    throw std::invalid_argument("unknown profile kind");
}

struct DrawnAngles {
    Direction departure, arrival;
};

DrawnAngles draw_angles(const LinkRecipe& r, std::uint64_t seed, std::uint64_t side, std::uint64_t k) {
    KeyedStream s(seed, StreamTag::Angles, {side, k});
    DrawnAngles a;
    a.departure.azimuth = s.uniform(r.departure.az_lo, r.departure.az_hi);
    a.departure.elevation = s.uniform(r.departure.el_lo, r.departure.el_hi);
    a.arrival.azimuth = s.uniform(r.arrival.az_lo, r.arrival.az_hi);
    a.arrival.elevation = s.uniform(r.arrival.el_lo, r.arrival.el_hi);
    return a;
}

/// Specular for a zero profile: kappa times the power of a unit profile.
CMatrix deterministic_specular(const CMatrix& shape, double kappa, double divisor) {
    const RMatrix unit = RMatrix::Ones(shape.rows(), shape.cols());
    return apply_rician_factor(shape, unit, kappa, divisor);
}

LinkF build_f(const ChannelRecipe& c, const LinkRecipe& r, std::size_t k, UpaShape rx_shape) {
    const auto lk = static_cast<Index>(rx_shape.count());
    const auto t = static_cast<Index>(c.tx_upa.count());
    const DrawnAngles a = draw_angles(r, c.seed, kSideF, k);
    const CMatrix shape = los_specular(a.departure, a.arrival, rx_shape, c.tx_upa);
    CMatrix u = draw_basis(r.rx_basis, lk, c.seed, kSideF, k, RxBasis);
    CMatrix v = draw_basis(r.tx_basis, t, c.seed, kSideF, k, TxBasis);
    RMatrix m = draw_profile(r.profile, lk, t, c.seed, kSideF, k);
    if (r.profile.kind == ProfileKind::Zeros) {
        return LinkF{deterministic_specular(shape, r.kappa, static_cast<double>(t)), std::move(u), std::move(v),
                     std::move(m)};
    }
    return make_link_f(shape, std::move(u), std::move(v), std::move(m), r.kappa, c.convention);
}

LinkG build_g(const ChannelRecipe& c, const LinkRecipe& r, std::size_t k) {
    const UpaShape ris = c.ris_upa[k - 1];
    const auto lk = static_cast<Index>(ris.count());
    const auto rr = static_cast<Index>(c.rx_upa.count());
    const DrawnAngles a = draw_angles(r, c.seed, kSideG, k);
    const CMatrix shape = los_specular(a.departure, a.arrival, c.rx_upa, ris);
    CMatrix w = draw_basis(r.rx_basis, rr, c.seed, kSideG, k, RxBasis);
    CMatrix s = draw_basis(r.tx_basis, lk, c.seed, kSideG, k, TxBasis);
    RMatrix n = draw_profile(r.profile, rr, lk, c.seed, kSideG, k);
    LinkG g;
    if (r.profile.kind == ProfileKind::Zeros) {
        g = LinkG{deterministic_specular(shape, r.kappa, static_cast<double>(lk)), std::move(w), std::move(s),
                  std::move(n), c.rho[k - 1]};
    } else {
        g = make_link_g(shape, std::move(w), std::move(s), std::move(n), r.kappa, c.rho[k - 1], c.tx_upa.count(),
                        c.convention);
    }
    if (!r.phases.empty()) {
        absorb_phase_shifts(g, r.phases);
    } else if (c.random_phases) {
        KeyedStream st(c.seed, StreamTag::Angles, {kSidePhase, k});
        std::vector<double> phases(static_cast<std::size_t>(lk));
        for (double& ph : phases) ph = st.uniform(0.0, 2.0 * std::numbers::pi);
        absorb_phase_shifts(g, phases);
    }
    return g;
}

LinkRecipe haar_link(double kappa) {
    LinkRecipe r;
    r.kappa = kappa;
    r.profile.kind = ProfileKind::Uniform;
    r.profile.lo = 0.0;
    r.profile.hi = 1.0;
    r.rx_basis.kind = BasisKind::Haar;
    r.tx_basis.kind = BasisKind::Haar;
    return r;
}

ChannelRecipe uniform_recipe(UpaShape tx, UpaShape rx, UpaShape ris, std::vector<double> rho, double kappa,
                             std::uint64_t seed) {
    ChannelRecipe c;
    c.tx_upa = tx;
    c.rx_upa = rx;
    c.rho = std::move(rho);
    c.ris_upa.assign(c.rho.size(), ris);
    c.direct = haar_link(kappa);
    c.ris_f.assign(c.rho.size(), haar_link(kappa));
    c.ris_g.assign(c.rho.size(), haar_link(kappa));
    c.seed = seed;
    c.random_phases = true;
    return c;
}

}  // namespace

void ChannelRecipe::validate() const {
    if (tx_upa.count() == 0 || rx_upa.count() == 0) {
        throw std::invalid_argument("array shapes must be positive");
    }
    const std::size_t k = ris_upa.size();
    if (rho.size() != k || ris_f.size() != k || ris_g.size() != k) {
        throw std::invalid_argument("rho, ris_f and ris_g need one entry per RIS panel");
    }
    for (const UpaShape& s : ris_upa) {
        if (s.count() == 0) throw std::invalid_argument("RIS panel shape must be positive");
    }
    auto check_link = [](const LinkRecipe& r) {
        if (!(r.kappa >= 0.0) || !std::isfinite(r.kappa)) {
            throw std::invalid_argument("Rician factors must be finite and nonnegative");
        }
        if (r.profile.kind == ProfileKind::Uniform && !(r.profile.lo >= 0.0 && r.profile.hi > r.profile.lo)) {
            throw std::invalid_argument("uniform profile bounds must satisfy 0 <= lo < hi");
        }
    };
    check_link(direct);
    for (const auto& r : ris_f) check_link(r);
    for (const auto& r : ris_g) check_link(r);
}

ChannelSpec build_channel(const ChannelRecipe& c) {
    c.validate();
    std::vector<LinkF> fs;
    std::vector<LinkG> gs;
    std::vector<double> kf, kg;
    fs.push_back(build_f(c, c.direct, 0, c.rx_upa));
    kf.push_back(c.direct.kappa);
    for (std::size_t k = 1; k <= c.ris_count(); ++k) {
        fs.push_back(build_f(c, c.ris_f[k - 1], k, c.ris_upa[k - 1]));
        kf.push_back(c.ris_f[k - 1].kappa);
        gs.push_back(build_g(c, c.ris_g[k - 1], k));
        kg.push_back(c.ris_g[k - 1].kappa);
    }
    return ChannelSpec(c.tx_upa.count(), c.rx_upa.count(), std::move(fs), std::move(gs), std::move(kf),
                       std::move(kg));
}

ChannelRecipe marchenko_pastur_recipe(std::size_t n) {
    ChannelRecipe c;
    c.tx_upa = {1, n};
    c.rx_upa = {1, n};
    c.direct.kappa = 0.0;
    c.direct.profile.kind = ProfileKind::Ones;
    return c;
}

ChannelRecipe dense_ris_recipe(std::size_t k, std::uint64_t seed) {
    return uniform_recipe({8, 8}, {8, 8}, {12, 12}, std::vector<double>(k, 1.0), 1.0, seed);
}

ChannelRecipe six_panel_recipe(std::size_t n, double kappa, std::uint64_t seed) {
    UpaShape shape;
    if (n == 4) {
        shape = {2, 2};
    } else if (n == 8) {
        shape = {2, 4};
    } else {
        shape = {1, n};
    }
    return uniform_recipe(shape, shape, {4, 4}, {0.9, 0.8, 0.7, 0.5, 0.3, 0.1}, kappa, seed);
}

ChannelRecipe kappa_sweep_recipe(std::size_t k, double kappa, std::uint64_t seed) {
    return uniform_recipe({4, 4}, {2, 4}, {2, 4}, std::vector<double>(k, 1.0), kappa, seed);
}

ChannelRecipe narrow_angle_recipe(std::size_t k, std::uint64_t seed) {
    constexpr double pi = std::numbers::pi;
    ChannelRecipe c = uniform_recipe({4, 4}, {2, 5}, {2, 4}, std::vector<double>(k, 0.5), 10.0, seed);
    // transceiver windows of length 0.05 pi, panel windows of length 0.1 pi
    const AngleRange tx_window{0.30 * pi, 0.35 * pi, 0.40 * pi, 0.45 * pi};
    const AngleRange rx_window{0.60 * pi, 0.65 * pi, 0.50 * pi, 0.55 * pi};
    const AngleRange ris_in{1.10 * pi, 1.20 * pi, 0.30 * pi, 0.40 * pi};
    const AngleRange ris_out{1.40 * pi, 1.50 * pi, 0.60 * pi, 0.70 * pi};
    c.direct.departure = tx_window;
    c.direct.arrival = rx_window;
    for (std::size_t i = 0; i < k; ++i) {
        c.ris_f[i].departure = tx_window;
        c.ris_f[i].arrival = ris_in;
        c.ris_g[i].departure = ris_out;
        c.ris_g[i].arrival = rx_window;
    }
    return c;
}

ChannelRecipe with_kappa(ChannelRecipe recipe, double kappa) {
    recipe.direct.kappa = kappa;
    for (auto& r : recipe.ris_f) r.kappa = kappa;
    for (auto& r : recipe.ris_g) r.kappa = kappa;
    return recipe;
}

ChannelRecipe with_ris_count(ChannelRecipe recipe, std::size_t k) {
    if (k > recipe.ris_count()) {
        throw std::invalid_argument("with_ris_count: recipe has fewer panels");
    }
    recipe.ris_upa.resize(k);
    recipe.rho.resize(k);
    recipe.ris_f.resize(k);
    recipe.ris_g.resize(k);
    return recipe;
}

}  // namespace rismi
