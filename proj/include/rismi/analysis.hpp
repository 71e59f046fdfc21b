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

// Eigenvalue density and mutual information from the Cauchy transform.
//
//   f_B(t) = -(1/pi) Im G_B(t + i eps)
//   I(gamma) = R int_0^gamma g(t) dt,  g(t) = 1/t + G_B(-1/t) / t^2
//
// Mutual information is in nats throughout.

#pragma once

#include "rismi/channel.hpp"
#include "rismi/solver.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rismi {

struct SpectralResult {
    std::vector<double> t;
    std::vector<double> density;  ///< NaN where the solver failed
    std::vector<bool> valid;
    double epsilon = 0.0;
    bool richardson = false;
    double mass = 0.0;  ///< trapezoid integral over the valid points
    std::size_t failures = 0;
    std::size_t iterations = 0;  ///< total solver iterations
};

/// 1e-4 times the support edge estimate.
double default_epsilon(const ChannelSpec& spec);

/// Density on an ascending nonnegative grid via a warm-started sweep at
/// t + i epsilon. With richardson, returns 2 f(eps / 2) - f(eps).
SpectralResult spectral_density(const ChannelSpec& spec, const std::vector<double>& t_grid, double epsilon,
                                const SolverOptions& opts, bool richardson = false);

/// Trapezoid rule over the valid points of a sampled function.
double trapezoid(const std::vector<double>& x, const std::vector<double>& y, const std::vector<bool>* valid = nullptr);

struct MIResult {
    double gamma = 0.0;  ///< linear SNR
    double value = 0.0;  ///< nats
    double quadrature_error_estimate = 0.0;
    bool ok = true;
    std::string message;
};

struct QuadratureOptions {
    /// Each ladder panel is cut into this many equal sub-panels.
    std::size_t panel_split = 1;
    /// Adds an 8-node pass per panel and reports |I_16 - I_8|.
    bool error_estimate = true;
};

/// Composite 16-node Gauss-Legendre on a geometric ladder anchored at
/// t0 = 1 / support_edge_estimate: [0, t0], [t0, 2 t0], [2 t0, 4 t0], ...,
/// the last panel ending at gamma. Integrand values are cached per node, so
/// a sequence of gammas shares every complete panel.
class MutualInformation {
public:
    MutualInformation(const ChannelSpec& spec, SolverOptions opts, QuadratureOptions q = {});

    MIResult operator()(double gamma);
    std::vector<MIResult> sweep_db(const std::vector<double>& gammas_db);

    /// g(t) for t > 0, solving (and caching) where needed.
    double integrand(double t);

    std::size_t solves() const noexcept { return solves_; }
    double ladder_start() const noexcept { return t0_; }

private:
    struct Panel {
        double a, b;
    };
    std::vector<Panel> panels(double gamma) const;
    /// Evaluates every uncached node in one warm-started sweep.
    void fill(const std::vector<double>& nodes);

    const ChannelSpec* spec_;
    SolverOptions opts_;
    QuadratureOptions q_;
    double t0_;
    std::map<double, double> cache_;
    std::map<double, std::string> failed_;
    std::size_t solves_ = 0;
};

MIResult mutual_information(const ChannelSpec& spec, double gamma, const SolverOptions& opts,
                            const QuadratureOptions& q = {});

/// One result per dB value; warm starts and cached nodes are shared.
std::vector<MIResult> mutual_information_sweep(const ChannelSpec& spec, const std::vector<double>& gammas_db,
                                               const SolverOptions& opts, const QuadratureOptions& q = {});

/// min(T, R) / (10 log10 e) nats per dB.
double high_snr_slope(std::size_t tx, std::size_t rx);

double db_to_linear(double db);
double linear_to_db(double x);

struct DeviationResult {
    bool found = false;
    double snr_db = 0.0;
    double intercept_nats = 0.0;  ///< I at the anchor
    std::size_t evaluations = 0;
};

/// Relative deviation |I(x) - law(x)| / I(x) from the affine law
/// law(x) = I(anchor) + slope (x - anchor), x in dB.
double deviation_from_law(MutualInformation& mi, double x_db, double anchor_db, double slope);

/// Largest SNR in [lo_db, hi_db] (bisection, 0.1 dB resolution, anchor at
/// hi_db) at which the deviation is at least the threshold. Not found when
/// the deviation at lo_db is already below it.
DeviationResult deviation_snr(const ChannelSpec& spec, double threshold, const SolverOptions& opts,
                              double lo_db = 0.0, double hi_db = 50.0, double resolution_db = 0.1);

/// R int log(1 + gamma t) f(t) dt by the trapezoid rule over the density grid.
double mutual_information_from_density(const SpectralResult& density, double gamma, std::size_t rx);

}  // namespace rismi
