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

// Reference computations for the tests. Nothing here calls into the solver
// or the analysis code; the library is only used for its matrix typedefs and
// the ChannelSpec container.

#pragma once

#include "rismi/channel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using rismi::CMatrix;
using rismi::cplx;
using rismi::RMatrix;

inline CMatrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    CMatrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cplx(n(rng), n(rng));
    }
    return m;
}

/// Diagonally dominated, hence comfortably invertible.
inline CMatrix well_conditioned(std::mt19937_64& rng, Eigen::Index n) {
    return gaussian(rng, n, n, 0.3 / std::sqrt(static_cast<double>(n))) +
           CMatrix::Identity(n, n) * cplx(1.5, 0.2);
}

inline CMatrix lu_inverse(const CMatrix& a) { return a.fullPivLu().inverse(); }

inline double rel_err(const CMatrix& a, const CMatrix& b) { return (a - b).norm() / b.norm(); }

/// (1/n) Tr (z I - B)^{-1} from the eigenvalues of a Hermitian B.
inline cplx resolvent_trace(const CMatrix& b, cplx z) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(b, Eigen::EigenvaluesOnly);
    cplx s = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) s += 1.0 / (z - es.eigenvalues()(i));
    return s / static_cast<double>(b.rows());
}

/// log det(I + gamma H H^H) in nats via the eigenvalues.
inline double log_det(const CMatrix& h, double gamma) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(CMatrix(h * h.adjoint()), Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) s += std::log1p(gamma * std::max(0.0, es.eigenvalues()(i)));
    return s;
}

/// Marchenko-Pastur density of (1/n) X X^H for a square n x n X with unit-variance entries.
inline double mp_density(double t) {
    if (t <= 0.0 || t >= 4.0) return 0.0;
    return std::sqrt(t * (4.0 - t)) / (2.0 * std::numbers::pi * t);
}

/// Deterministic channel of K RIS links: profiles zero, identity bases, the
/// given specular parts. f[0] is R x T, f[k] L_k x T, g[k-1] R x L_k.
inline rismi::ChannelSpec deterministic_spec(const std::vector<CMatrix>& f, const std::vector<CMatrix>& g,
                                             const std::vector<double>& rho) {
    const auto t = f[0].cols();
    const auto r = f[0].rows();
    std::vector<rismi::LinkF> lf;
    for (const CMatrix& s : f) {
        rismi::LinkF l;
        l.specular = s;
        l.rx_basis = CMatrix::Identity(s.rows(), s.rows());
        l.tx_basis = CMatrix::Identity(t, t);
        l.profile = RMatrix::Zero(s.rows(), t);
        lf.push_back(l);
    }
    std::vector<rismi::LinkG> lg;
    for (std::size_t k = 0; k < g.size(); ++k) {
        rismi::LinkG l;
        l.specular = g[k];
        l.rx_basis = CMatrix::Identity(r, r);
        l.tx_basis = CMatrix::Identity(g[k].cols(), g[k].cols());
        l.profile = RMatrix::Zero(r, g[k].cols());
        l.rho = rho[k];
        lg.push_back(l);
    }
    return rismi::ChannelSpec(static_cast<std::size_t>(t), static_cast<std::size_t>(r), lf, lg);
}

inline CMatrix deterministic_h(const std::vector<CMatrix>& f, const std::vector<CMatrix>& g,
                               const std::vector<double>& rho) {
    CMatrix h = f[0];
    for (std::size_t k = 0; k < g.size(); ++k) h += std::sqrt(rho[k]) * g[k] * f[k + 1];
    return h;
}

}  // namespace oracle
