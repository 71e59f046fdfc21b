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

// Declarative channel recipes and the experiment presets built from them.
//
// A recipe fixes array shapes, link gains, Rician factors and how the random
// statistics (angles, eigenbases, profiles) are drawn. Draws are keyed by
// (seed, side, link, purpose), so link k gets the same statistics whatever
// K or kappa is, and sweeps over either compare like with like.

#pragma once

#include "rismi/channel.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rismi {

enum class BasisKind { Identity, Haar, Explicit };

struct BasisRecipe {
    BasisKind kind = BasisKind::Identity;
    CMatrix matrix;  ///< used when kind == Explicit
};

enum class ProfileKind { Ones, Zeros, Uniform, Values };

struct ProfileRecipe {
    ProfileKind kind = ProfileKind::Ones;
    double lo = 0.0;  ///< Uniform bounds
    double hi = 1.0;
    RMatrix values;   ///< used when kind == Values
    /// Rescale drawn profiles to mean square 1 (Uniform only).
    bool normalize = true;
};

/// Angles drawn uniformly from [lo, hi]; lo == hi pins the angle.
struct AngleRange {
    double az_lo = 0.0, az_hi = 0.0;
    double el_lo = 0.0, el_hi = 0.0;

    static AngleRange fixed(double az, double el) { return {az, az, el, el}; }
    static AngleRange full() { return {0.0, 6.283185307179586, 0.0, 3.141592653589793}; }
};

struct LinkRecipe {
    /// With a zero profile the specular power is kappa times that of a unit
    /// profile, so deterministic links still have a well-defined scale.
    double kappa = 1.0;
    ProfileRecipe profile;
    BasisRecipe rx_basis;
    BasisRecipe tx_basis;
    AngleRange departure = AngleRange::full();
    AngleRange arrival = AngleRange::full();
    std::vector<double> phases;  ///< RIS phase shifts (G-links only), empty = none
};

struct ChannelRecipe {
    UpaShape tx_upa{1, 1};
    UpaShape rx_upa{1, 1};
    std::vector<UpaShape> ris_upa;  ///< one per RIS panel
    std::vector<double> rho;        ///< one per RIS panel
    LinkRecipe direct;
    std::vector<LinkRecipe> ris_f;  ///< transmitter -> RIS k
    std::vector<LinkRecipe> ris_g;  ///< RIS k -> receiver
    std::uint64_t seed = 1;
    PowerConvention convention = PowerConvention::FixedTotal;
    /// Draw a fixed, uniformly random phase configuration for every panel
    /// whose G-link recipe carries no explicit phases.
    bool random_phases = false;

    std::size_t ris_count() const { return ris_upa.size(); }
    void validate() const;
};

/// Draws the statistics and assembles an immutable ChannelSpec.
ChannelSpec build_channel(const ChannelRecipe& recipe);

// ---- presets ----------------------------------------------------------------

/// K = 0, zero specular, all-ones profile, identity bases, R = T = n.
ChannelRecipe marchenko_pastur_recipe(std::size_t n);

/// T = R = 64 (8 x 8), K RIS panels of 144 elements (12 x 12), Haar bases,
/// uniform random profiles, kappa = 1.
ChannelRecipe dense_ris_recipe(std::size_t k, std::uint64_t seed);

/// T = R = n (n = 4: 2 x 2, n = 8: 2 x 4), K = 6 panels of 16 (4 x 4),
/// rho = [0.9, 0.8, 0.7, 0.5, 0.3, 0.1], common kappa on every link.
ChannelRecipe six_panel_recipe(std::size_t n, double kappa, std::uint64_t seed);

/// T = 16 (4 x 4), R = 8 (2 x 4), K panels of 8 (2 x 4), common kappa.
ChannelRecipe kappa_sweep_recipe(std::size_t k, double kappa, std::uint64_t seed);

/// T = 16 (4 x 4), R = 10 (2 x 5), K panels of 8, narrow angle windows (0.05 pi at the
/// transceivers, 0.1 pi at the panels), kappa = 10, rho = 0.5.
ChannelRecipe narrow_angle_recipe(std::size_t k, std::uint64_t seed);

/// Replaces every Rician factor of the recipe.
ChannelRecipe with_kappa(ChannelRecipe recipe, double kappa);

/// Keeps the first k panels.
ChannelRecipe with_ris_count(ChannelRecipe recipe, std::size_t k);

}  // namespace rismi
