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

#include "rismi/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace rismi {

namespace {

using Index = Eigen::Index;

void require_shape(const CMatrix& a, Index rows, Index cols, const char* what) {
    if (a.rows() != rows || a.cols() != cols) {
        std::ostringstream os;
        os << what << ": expected " << rows << "x" << cols << ", got " << a.rows() << "x" << a.cols();
        throw DimensionError(os.str());
    }
}

void require_shape(const RMatrix& a, Index rows, Index cols, const char* what) {
    if (a.rows() != rows || a.cols() != cols) {
        std::ostringstream os;
        os << what << ": expected " << rows << "x" << cols << ", got " << a.rows() << "x" << a.cols();
        throw DimensionError(os.str());
    }
}

void require_unitary(const CMatrix& u, const char* what) {
    if (!is_unitary(u, 1e-12)) {
        throw std::invalid_argument(std::string(what) + " is not unitary to 1e-12");
    }
}

void require_profile(const RMatrix& p, const char* what) {
    if (!p.allFinite() || (p.array() < 0.0).any()) {
        throw std::invalid_argument(std::string(what) + " must be finite and nonnegative");
    }
}

/// diag(B^H A B), or diag(A) when B is the identity.
CVector sandwich_diagonal(const CMatrix& basis, const CMatrix& a) {
    if (is_identity(basis)) {
        return a.diagonal();
    }
    const CMatrix ab = a * basis;
    return (basis.conjugate().array() * ab.array()).colwise().sum().transpose();
}

/// B diag(w) B^H, or diag(w) when B is the identity.
CMatrix rotate_diagonal(const CMatrix& basis, const CVector& w) {
    if (is_identity(basis)) {
        return w.asDiagonal();
    }
    return (basis * w.asDiagonal()) * basis.adjoint();
}

}  // namespace

// ---- ChannelSpec -------------------------------------------------------------

ChannelSpec::ChannelSpec(std::size_t tx, std::size_t rx, std::vector<LinkF> links_f, std::vector<LinkG> links_g,
                         std::vector<double> kappa_f, std::vector<double> kappa_g)
    : tx_(tx),
      rx_(rx),
      links_f_(std::move(links_f)),
      links_g_(std::move(links_g)),
      kappa_f_(std::move(kappa_f)),
      kappa_g_(std::move(kappa_g)) {
    if (tx_ == 0 || rx_ == 0) {
        throw DimensionError("antenna counts must be positive");
    }
    if (links_f_.empty()) {
        throw DimensionError("the direct link F_0 is required");
    }
    if (links_f_.size() != links_g_.size() + 1) {
        throw DimensionError("need K+1 transmitter-side links for K RIS links");
    }
    const auto t = static_cast<Index>(tx_);
    const auto r = static_cast<Index>(rx_);

    std::vector<std::size_t> sizes;
    sizes.reserve(links_f_.size());
    for (std::size_t k = 0; k < links_f_.size(); ++k) {
        const LinkF& f = links_f_[k];
        const Index lk = f.specular.rows();
        if (k == 0 && lk != r) {
            throw DimensionError("F_0 must have R rows (L_0 = R)");
        }
        if (lk <= 0) {
            throw DimensionError("link dimension must be positive");
        }
        require_shape(f.specular, lk, t, "F specular");
        require_shape(f.rx_basis, lk, lk, "U");
        require_shape(f.tx_basis, t, t, "V");
        require_shape(f.profile, lk, t, "M");
        require_unitary(f.rx_basis, "U");
        require_unitary(f.tx_basis, "V");
        require_profile(f.profile, "M");
        if (!f.specular.allFinite()) {
            throw std::invalid_argument("F specular has non-finite entries");
        }
        sizes.push_back(static_cast<std::size_t>(lk));
    }
    for (std::size_t k = 1; k < links_f_.size(); ++k) {
        const LinkG& g = links_g_[k - 1];
        const auto lk = static_cast<Index>(sizes[k]);
        require_shape(g.specular, r, lk, "G specular");
        require_shape(g.rx_basis, r, r, "W");
        require_shape(g.tx_basis, lk, lk, "S");
        require_shape(g.profile, r, lk, "N");
        require_unitary(g.rx_basis, "W");
        require_unitary(g.tx_basis, "S");
        require_profile(g.profile, "N");
        if (!g.specular.allFinite()) {
            throw std::invalid_argument("G specular has non-finite entries");
        }
        if (!(g.rho > 0.0 && g.rho <= 1.0)) {
            throw std::invalid_argument("link gain rho must lie in (0, 1]");
        }
    }
    for (double kf : kappa_f_) {
        if (!(kf >= 0.0)) throw std::invalid_argument("Rician factors must be nonnegative");
    }
    for (double kg : kappa_g_) {
        if (!(kg >= 0.0)) throw std::invalid_argument("Rician factors must be nonnegative");
    }
    partition_ = Partition(std::move(sizes));
}

double ChannelSpec::ratio(std::size_t k) const {
    if (k == 0 || k >= partition_.blocks()) {
        throw std::out_of_range("ratio: RIS link index out of range");
    }
    return static_cast<double>(partition_.size(k)) / static_cast<double>(tx_);
}

bool ChannelSpec::deterministic() const {
    for (const auto& f : links_f_) {
        if (f.profile.cwiseAbs().maxCoeff() > 0.0) return false;
    }
    for (const auto& g : links_g_) {
        if (g.profile.cwiseAbs().maxCoeff() > 0.0) return false;
    }
    return true;
}

// ---- geometry -----------------------------------------------------------------

CVector upa_steering(double azimuth, double elevation, std::size_t m, std::size_t n) {
    if (m == 0 || n == 0) {
        throw DimensionError("UPA dimensions must be positive");
    }
    const double horizontal = std::sin(azimuth) * std::sin(elevation);
    const double vertical = std::cos(elevation);
    CVector a(static_cast<Index>(m * n));
    for (std::size_t in = 0; in < n; ++in) {
        for (std::size_t im = 0; im < m; ++im) {
            const double phase = std::numbers::pi * (static_cast<double>(in) * horizontal + static_cast<double>(im) * vertical);
            a(static_cast<Index>(in * m + im)) = std::polar(1.0, phase);
        }
    }
    return a;
}

CMatrix los_specular(Direction departure, Direction arrival, UpaShape rx, UpaShape tx) {
    const CVector a_rx = upa_steering(arrival.azimuth, arrival.elevation, rx.m, rx.n);
    const CVector a_tx = upa_steering(departure.azimuth, departure.elevation, tx.m, tx.n);
    return a_rx * a_tx.adjoint();
}

// ---- Rician factor ------------------------------------------------------------

double expected_scatter_power(const RMatrix& profile, double divisor) {
    if (!(divisor > 0.0)) {
        throw std::invalid_argument("scatter normalization must be positive");
    }
    return profile.squaredNorm() / divisor;
}

CMatrix apply_rician_factor(const CMatrix& specular, const RMatrix& profile, double kappa, double scatter_divisor) {
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
        throw std::invalid_argument("Rician factor must be finite and nonnegative");
    }
    if (kappa == 0.0) {
        return CMatrix::Zero(specular.rows(), specular.cols());
    }
    const double scatter = expected_scatter_power(profile, scatter_divisor);
    if (scatter <= 0.0) {
        throw std::invalid_argument("zero scattering profile with a finite positive Rician factor");
    }
    const double current = specular.squaredNorm();
    if (current <= 0.0) {
        throw std::invalid_argument("zero specular component with a positive Rician factor");
    }
    return specular * std::sqrt(kappa * scatter / current);
}

// ---- correlation maps ---------------------------------------------------------

CMatrix eta(const LinkG& link, const CMatrix& c_tilde) {
    const Index r = link.specular.rows();
    const Index lk = link.specular.cols();
    require_shape(c_tilde, r, r, "eta argument");
    const CVector d = sandwich_diagonal(link.rx_basis, c_tilde);
    const CVector pi = link.profile.array().square().matrix().transpose().cast<cplx>() * d;
    return rotate_diagonal(link.tx_basis, pi / static_cast<double>(lk));
}

CMatrix eta_tilde(const LinkG& link, const CMatrix& c_k) {
    const Index lk = link.specular.cols();
    require_shape(c_k, lk, lk, "eta_tilde argument");
    const CVector d = sandwich_diagonal(link.tx_basis, c_k);
    const CVector pi = link.profile.array().square().matrix().cast<cplx>() * d;
    return rotate_diagonal(link.rx_basis, pi / static_cast<double>(lk));
}

CMatrix zeta(const LinkF& link, const CMatrix& d_k) {
    const Index lk = link.specular.rows();
    const Index t = link.specular.cols();
    require_shape(d_k, lk, lk, "zeta argument");
    const CVector d = sandwich_diagonal(link.rx_basis, d_k);
    const CVector sigma = link.profile.array().square().matrix().transpose().cast<cplx>() * d;
    return rotate_diagonal(link.tx_basis, sigma / static_cast<double>(t));
}

CMatrix zeta_tilde(const LinkF& link, const CMatrix& d_tilde) {
    const Index t = link.specular.cols();
    require_shape(d_tilde, t, t, "zeta_tilde argument");
    const CVector d = sandwich_diagonal(link.tx_basis, d_tilde);
    const CVector sigma = link.profile.array().square().matrix().cast<cplx>() * d;
    return rotate_diagonal(link.rx_basis, sigma / static_cast<double>(t));
}

// ---- sampling -----------------------------------------------------------------

CMatrix sample_scatter_f(const ChannelSpec& spec, std::size_t k, std::uint64_t seed, std::uint64_t trial) {
    const LinkF& link = spec.link_f(k);
    const double variance = 1.0 / static_cast<double>(spec.tx());
    KeyedStream stream(seed, StreamTag::ScatterF, {trial, k});
    CMatrix x = stream.complex_normal_matrix(link.specular.rows(), link.specular.cols(), variance);
    x.array() *= link.profile.array().cast<cplx>();
    if (!is_identity(link.rx_basis)) x = link.rx_basis * x;
    if (!is_identity(link.tx_basis)) x = x * link.tx_basis.adjoint();
    return x;
}

CMatrix sample_scatter_g(const ChannelSpec& spec, std::size_t k, std::uint64_t seed, std::uint64_t trial) {
    const LinkG& link = spec.link_g(k);
    const double variance = 1.0 / static_cast<double>(spec.tx());
    KeyedStream stream(seed, StreamTag::ScatterG, {trial, k});
    CMatrix y = stream.complex_normal_matrix(link.specular.rows(), link.specular.cols(), variance);
    y.array() *= link.profile.array().cast<cplx>();
    y /= std::sqrt(spec.ratio(k));
    if (!is_identity(link.rx_basis)) y = link.rx_basis * y;
    if (!is_identity(link.tx_basis)) y = y * link.tx_basis.adjoint();
    return y;
}

ChannelRealization sample_realization(const ChannelSpec& spec, std::uint64_t seed, std::uint64_t trial) {
    ChannelRealization out;
    out.seed = seed;
    out.trial = trial;
    const std::size_t n_links = spec.links_f().size();
    out.f.reserve(n_links);
    out.g.reserve(n_links - 1);
    for (std::size_t k = 0; k < n_links; ++k) {
        out.f.push_back(spec.link_f(k).specular + sample_scatter_f(spec, k, seed, trial));
    }
    out.h = out.f[0];
    for (std::size_t k = 1; k < n_links; ++k) {
        out.g.push_back(spec.link_g(k).specular + sample_scatter_g(spec, k, seed, trial));
        out.h.noalias() += std::sqrt(spec.link_g(k).rho) * (out.g.back() * out.f[k]);
    }
    return out;
}

Factorization assemble_gf(const ChannelRealization& real, const ChannelSpec& spec) {
    const auto r = static_cast<Index>(spec.rx());
    const auto t = static_cast<Index>(spec.tx());
    const auto l = static_cast<Index>(spec.partition().total());
    Factorization out{CMatrix::Zero(r, l), CMatrix::Zero(l, t)};
    const Partition& p = spec.partition();
    out.g.leftCols(r) = CMatrix::Identity(r, r);
    for (std::size_t k = 0; k < p.blocks(); ++k) {
        const auto off = static_cast<Index>(p.offset(k));
        const auto lk = static_cast<Index>(p.size(k));
        out.f.middleRows(off, lk) = real.f[k];
        if (k > 0) {
            out.g.middleCols(off, lk) = std::sqrt(spec.link_g(k).rho) * real.g[k - 1];
        }
    }
    return out;
}

CMatrix stacked_specular_g(const ChannelSpec& spec) {
    const auto r = static_cast<Index>(spec.rx());
    const Partition& p = spec.partition();
    CMatrix g = CMatrix::Zero(r, static_cast<Index>(p.total()));
    g.leftCols(r) = CMatrix::Identity(r, r);
    for (std::size_t k = 1; k < p.blocks(); ++k) {
        g.middleCols(static_cast<Index>(p.offset(k)), static_cast<Index>(p.size(k))) =
            std::sqrt(spec.link_g(k).rho) * spec.link_g(k).specular;
    }
    return g;
}

CMatrix stacked_specular_f(const ChannelSpec& spec) {
    const Partition& p = spec.partition();
    CMatrix f(static_cast<Index>(p.total()), static_cast<Index>(spec.tx()));
    for (std::size_t k = 0; k < p.blocks(); ++k) {
        f.middleRows(static_cast<Index>(p.offset(k)), static_cast<Index>(p.size(k))) = spec.link_f(k).specular;
    }
    return f;
}

CMatrix deterministic_channel(const ChannelSpec& spec) {
    CMatrix h = spec.link_f(0).specular;
    for (std::size_t k = 1; k < spec.partition().blocks(); ++k) {
        h.noalias() += std::sqrt(spec.link_g(k).rho) * (spec.link_g(k).specular * spec.link_f(k).specular);
    }
    return h;
}

CMatrix mean_gram(const ChannelSpec& spec) {
    const CMatrix hbar = deterministic_channel(spec);
    const auto t = static_cast<Index>(spec.tx());
    const CMatrix eye_t = CMatrix::Identity(t, t);
    CMatrix out = hbar * hbar.adjoint() + zeta_tilde(spec.link_f(0), eye_t);
    for (std::size_t k = 1; k < spec.partition().blocks(); ++k) {
        const LinkF& f = spec.link_f(k);
        const LinkG& g = spec.link_g(k);
        const CMatrix ff = f.specular * f.specular.adjoint() + zeta_tilde(f, eye_t);
        const CMatrix scatter_f = zeta_tilde(f, eye_t);
        out += g.rho * (g.specular * scatter_f * g.specular.adjoint() + eta_tilde(g, ff));
    }
    return out;
}

double support_edge_estimate(const ChannelSpec& spec) {
    const CMatrix hbar = deterministic_channel(spec);
    const double total = mean_gram(spec).trace().real();
    double scatter = total - hbar.squaredNorm();
    if (scatter <= 64.0 * std::numeric_limits<double>::epsilon() * total) scatter = 0.0;  // cancellation noise
    const double r = static_cast<double>(spec.rx());
    const double t = static_cast<double>(spec.tx());
    const double amp = spectral_norm(hbar) + std::sqrt(scatter / r) + std::sqrt(scatter / t);
    return amp * amp;
}

// ---- construction helpers -----------------------------------------------------

LinkF make_link_f(const CMatrix& specular_shape, CMatrix rx_basis, CMatrix tx_basis, RMatrix profile, double kappa,
                  PowerConvention convention) {
    const double divisor = static_cast<double>(specular_shape.cols());
    LinkF link;
    link.specular = apply_rician_factor(specular_shape, profile, kappa, divisor);
    link.rx_basis = std::move(rx_basis);
    link.tx_basis = std::move(tx_basis);
    link.profile = std::move(profile);
    if (convention == PowerConvention::FixedTotal) {
        const double s = 1.0 / std::sqrt(1.0 + kappa);
        link.specular *= s;
        link.profile *= s;
    }
    return link;
}

LinkG make_link_g(const CMatrix& specular_shape, CMatrix rx_basis, CMatrix tx_basis, RMatrix profile, double kappa,
                  double rho, std::size_t tx, PowerConvention convention) {
    // E||G~||^2 = sum(N^2) / (T r_k) = sum(N^2) / L_k
    (void)tx;
    const double divisor = static_cast<double>(specular_shape.cols());
    LinkG link;
    link.specular = apply_rician_factor(specular_shape, profile, kappa, divisor);
    link.rx_basis = std::move(rx_basis);
    link.tx_basis = std::move(tx_basis);
    link.profile = std::move(profile);
    link.rho = rho;
    if (convention == PowerConvention::FixedTotal) {
        const double s = 1.0 / std::sqrt(1.0 + kappa);
        link.specular *= s;
        link.profile *= s;
    }
    return link;
}

void absorb_phase_shifts(LinkG& link, const std::vector<double>& phases) {
    if (static_cast<Index>(phases.size()) != link.specular.cols()) {
        throw DimensionError("one phase shift per reflecting element is required");
    }
    CVector theta(static_cast<Index>(phases.size()));
    for (std::size_t i = 0; i < phases.size(); ++i) {
        theta(static_cast<Index>(i)) = std::polar(1.0, phases[i]);
    }
    // G = (Gbar_R + W (N o Y) S_R^H) Theta  =>  Gbar = Gbar_R Theta, S = Theta^H S_R
    link.specular = link.specular * theta.asDiagonal();
    link.tx_basis = theta.conjugate().asDiagonal() * link.tx_basis;
}

}  // namespace rismi
