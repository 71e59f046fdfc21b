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

// Statistical description of a multi-RIS MIMO channel
//
//   H = F_0 + sum_k sqrt(rho_k) G_k F_k,
//   F_k = Fbar_k + U_k (M_k o X_k) V_k^H,              X_k ~ CN(0, 1/T), L_k x T
//   G_k = Gbar_k + r_k^{-1/2} W_k (N_k o Y_k) S_k^H,    Y_k ~ CN(0, 1/T), R x L_k
//
// with r_k = L_k / T, plus the one-sided correlation maps of the scattering
// parts and a keyed sampler for realizations.

#pragma once

#include "rismi/linalg.hpp"
#include "rismi/rng.hpp"

#include <cstdint>
#include <vector>

namespace rismi {

/// Transmitter-to-receiver (k = 0) or transmitter-to-RIS link F_k.
struct LinkF {
    CMatrix specular;  ///< L_k x T
    CMatrix rx_basis;  ///< U_k, L_k x L_k unitary
    CMatrix tx_basis;  ///< V_k, T x T unitary
    RMatrix profile;   ///< M_k, L_k x T, nonnegative

    Eigen::Index rows() const { return specular.rows(); }
};

/// RIS-to-receiver link G_k (phase shifts already absorbed).
struct LinkG {
    CMatrix specular;  ///< R x L_k
    CMatrix rx_basis;  ///< W_k, R x R unitary
    CMatrix tx_basis;  ///< S_k, L_k x L_k unitary
    RMatrix profile;   ///< N_k, R x L_k, nonnegative
    double rho = 1.0;  ///< relative gain of the reflected path, (0, 1]

    Eigen::Index elements() const { return specular.cols(); }
};

/// Immutable after construction; safe to share read-only across threads.
class ChannelSpec {
public:
    ChannelSpec(std::size_t tx, std::size_t rx, std::vector<LinkF> links_f, std::vector<LinkG> links_g,
                std::vector<double> kappa_f = {}, std::vector<double> kappa_g = {});

    std::size_t tx() const noexcept { return tx_; }
    std::size_t rx() const noexcept { return rx_; }
    std::size_t ris_count() const noexcept { return links_g_.size(); }
    const Partition& partition() const noexcept { return partition_; }
    const std::vector<LinkF>& links_f() const noexcept { return links_f_; }
    const std::vector<LinkG>& links_g() const noexcept { return links_g_; }
    const LinkF& link_f(std::size_t k) const { return links_f_.at(k); }
    /// k in 1..K, matching the link numbering of the channel model.
    const LinkG& link_g(std::size_t k) const { return links_g_.at(k - 1); }
    const std::vector<double>& kappa_f() const noexcept { return kappa_f_; }
    const std::vector<double>& kappa_g() const noexcept { return kappa_g_; }

    /// r_k = L_k / T for k >= 1.
    double ratio(std::size_t k) const;

    /// True when every variance profile is identically zero.
    bool deterministic() const;

private:
    std::size_t tx_;
    std::size_t rx_;
    Partition partition_;
    std::vector<LinkF> links_f_;
    std::vector<LinkG> links_g_;
    std::vector<double> kappa_f_;
    std::vector<double> kappa_g_;
};

struct ChannelRealization {
    std::vector<CMatrix> f;  ///< F_0..F_K
    std::vector<CMatrix> g;  ///< G_1..G_K (index 0 holds G_1)
    CMatrix h;
    std::uint64_t seed = 0;
    std::uint64_t trial = 0;
};

struct Direction {
    double azimuth = 0.0;
    double elevation = 0.0;
};

/// M x N uniform planar array; element count M * N.
struct UpaShape {
    std::size_t m = 1;
    std::size_t n = 1;

    std::size_t count() const { return m * n; }
};

/// Entry n*M + m is exp(i pi (n sin(az) sin(el) + m cos(el))).
CVector upa_steering(double azimuth, double elevation, std::size_t m, std::size_t n);

/// Rank-one line-of-sight matrix a_rx(arrival) a_tx(departure)^H.
CMatrix los_specular(Direction departure, Direction arrival, UpaShape rx, UpaShape tx);

/// E||scatter||_F^2 for a profile: sum(profile^2) / divisor, where the divisor
/// is T for F-links and T r_k = L_k for G-links.
double expected_scatter_power(const RMatrix& profile, double divisor);

/// Rescales the specular matrix so that ||specular||_F^2 / E||scatter||_F^2 = kappa.
CMatrix apply_rician_factor(const CMatrix& specular, const RMatrix& profile, double kappa, double scatter_divisor);

/// eta_k(C~) = E[G~_k^H C~ G~_k], L_k x L_k.
CMatrix eta(const LinkG& link, const CMatrix& c_tilde);
/// eta~_k(C_k) = E[G~_k C_k G~_k^H], R x R.
CMatrix eta_tilde(const LinkG& link, const CMatrix& c_k);
/// zeta_k(D_k) = E[F~_k^H D_k F~_k], T x T.
CMatrix zeta(const LinkF& link, const CMatrix& d_k);
/// zeta~_k(D~) = E[F~_k D~ F~_k^H], L_k x L_k.
CMatrix zeta_tilde(const LinkF& link, const CMatrix& d_tilde);

/// Scattering parts alone, drawn from the streams keyed by (seed, trial, link).
CMatrix sample_scatter_f(const ChannelSpec& spec, std::size_t k, std::uint64_t seed, std::uint64_t trial);
CMatrix sample_scatter_g(const ChannelSpec& spec, std::size_t k, std::uint64_t seed, std::uint64_t trial);

ChannelRealization sample_realization(const ChannelSpec& spec, std::uint64_t seed, std::uint64_t trial);

struct Factorization {
    CMatrix g;  ///< R x L, [I_R, sqrt(rho_1) G_1, ...]
    CMatrix f;  ///< L x T, [F_0; ...; F_K]
};

Factorization assemble_gf(const ChannelRealization& real, const ChannelSpec& spec);

/// Gbar = [I_R, sqrt(rho_1) Gbar_1, ..., sqrt(rho_K) Gbar_K] (R x L).
CMatrix stacked_specular_g(const ChannelSpec& spec);
/// Fbar = [Fbar_0; ...; Fbar_K] (L x T).
CMatrix stacked_specular_f(const ChannelSpec& spec);

/// Hbar = Fbar_0 + sum_k sqrt(rho_k) Gbar_k Fbar_k.
CMatrix deterministic_channel(const ChannelSpec& spec);

/// E[H H^H], exact from the correlation maps.
CMatrix mean_gram(const ChannelSpec& spec);

/// Heuristic upper edge of the spectrum of H H^H:
/// (||Hbar||_2 + sqrt(s / R) + sqrt(s / T))^2 with s = E||H - Hbar||_F^2.
/// Exact for the Marchenko-Pastur case.
double support_edge_estimate(const ChannelSpec& spec);

// ---- construction helpers -------------------------------------------------

/// How the Rician factor is imposed on a link.
enum class PowerConvention {
    /// Scale the specular part only; the scattering profile is left untouched.
    SpecularOnly,
    /// Additionally scale both parts by 1/sqrt(1 + kappa) so that the expected
    /// link power equals the raw scattering power, independent of kappa.
    FixedTotal,
};

LinkF make_link_f(const CMatrix& specular_shape, CMatrix rx_basis, CMatrix tx_basis, RMatrix profile, double kappa,
                  PowerConvention convention);

LinkG make_link_g(const CMatrix& specular_shape, CMatrix rx_basis, CMatrix tx_basis, RMatrix profile, double kappa,
                  double rho, std::size_t tx, PowerConvention convention);

/// Absorbs diag(exp(i phases)) into Gbar and S (G = R Theta).
void absorb_phase_shifts(LinkG& link, const std::vector<double>& phases);

}  // namespace rismi
