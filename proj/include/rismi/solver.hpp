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

// Fixed-point solver for the operator-valued Cauchy transform of B = H H^H.
//
// The linearization of G F F^H G^H has the block layout (C~, D, D~, C) with
// sizes (R, L, T, L):
//
//   [ Psi~    0       0     -Gbar ]
//   [ 0       Phi~   -Fbar   I    ]
//   [ 0      -Fbar^H  Phi    0    ]
//   [-Gbar^H  I       0      Psi  ]
//
// where
//   Psi~ = z I_R - sum_{k>=1} rho_k eta~_k(G_Ck)
//   Psi  = blkdiag(0_R, -rho_1 eta_1(G_C~), ..., -rho_K eta_K(G_C~))
//   Phi~ = blkdiag(-zeta~_0(G_D~), ..., -zeta~_K(G_D~))
//   Phi  = I_T - sum_{k>=0} zeta_k(G_Dk)
// and the G-blocks are the matching diagonal blocks of its inverse.
//
// Every correlation map only reads the diagonal of its argument in a fixed
// eigenbasis, so the whole Psi-family is parameterized by a handful of
// vectors. The iteration runs on those vectors and is optionally accelerated
// with Anderson mixing; without acceleration it is exactly the damped
// G-block iteration (the maps are linear).

#pragma once

#include "rismi/channel.hpp"
#include "rismi/linalg.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace rismi {

enum class Acceleration {
    None,      ///< damped Picard iteration
    Anderson,  ///< Anderson mixing on the subordination vectors
};

struct SolverOptions {
    double tolerance = 1e-10;
    std::size_t max_iterations = 5000;
    double damping = 0.5;
    /// Added to Im z for real, nonnegative points; zero makes such points invalid.
    double epsilon_imag = 0.0;
    Acceleration acceleration = Acceleration::Anderson;
    std::size_t anderson_depth = 8;
    /// Sweeps are split into independent warm-start chains of this length
    /// (0 = one chain). Chunking does not depend on the thread count.
    std::size_t chain_length = 16;

    void validate() const;
};

enum class SolveStatus {
    Converged,
    MaxIterations,
    Singular,
    BranchViolation,
};

const char* to_string(SolveStatus s);

struct SolverState {
    cplx z{0.0, 0.0};
    CMatrix psi_tilde;    ///< R x R
    BlockDiag psi;        ///< first block 0_R
    BlockDiag phi_tilde;  ///< over the partition
    CMatrix phi;          ///< T x T
    CMatrix gc_tilde;     ///< R x R
    BlockDiag gc;         ///< first block pinned to 0_R
    CMatrix gd_tilde;     ///< T x T
    BlockDiag gd;         ///< over the partition
    /// Xi^{-1} with Xi = Psi - (Phi~ - Fbar Phi^{-1} Fbar^H)^{-1}. Xi itself
    /// need not exist (deterministic links make Phi~ singular), its inverse does.
    CMatrix xi_inv;

    double residual = 0.0;
    std::size_t iterations = 0;
    SolveStatus status = SolveStatus::MaxIterations;
    std::string message;

    bool converged() const noexcept { return status == SolveStatus::Converged; }
};

/// Solves the fixed-point system at z (Im z > 0, or z real and negative).
/// init, when given and converged, warm-starts from its G-blocks.
/// Inner singularities and non-convergence are reported through the status;
/// invalid arguments throw.
SolverState solve_fixed_point(const ChannelSpec& spec, cplx z, const SolverState* init, const SolverOptions& opts);

/// (1/R) Tr[(Psi~ - Gbar Xi^{-1} Gbar^H)^{-1}], independent of the stored Gc_tilde.
cplx cauchy_B(const ChannelSpec& spec, const SolverState& state);

/// (1/R) Tr(Gc_tilde).
cplx cauchy_trace(const SolverState& state);

/// Warm-started continuation over points; chains run concurrently.
std::vector<SolverState> sweep(const ChannelSpec& spec, const std::vector<cplx>& points, const SolverOptions& opts);

/// Same chains, executed one after another on the calling thread.
std::vector<SolverState> sweep_serial(const ChannelSpec& spec, const std::vector<cplx>& points,
                                      const SolverOptions& opts);

/// Right-hand sides of the system evaluated at the state's G-blocks: the
/// Psi-family from the G-blocks, then the G-blocks from that Psi-family.
/// A converged state is (to tolerance) a fixed point of this map.
SolverState apply_fixed_point_map(const ChannelSpec& spec, const SolverState& state);

/// Zero G-blocks at z, i.e. the cold-start state before the first cycle.
SolverState initial_state(const ChannelSpec& spec, cplx z);

}  // namespace rismi
