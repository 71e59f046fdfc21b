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

#include "rismi/solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace rismi {

namespace {

using Index = Eigen::Index;

struct LinkData {
    Index size = 0;
    // transmitter side
    bool u_identity = false;
    bool v_identity = false;
    RMatrix m2;  // L_k x T
    CMatrix a;   // Fbar_k^H, T x L_k
    bool a_zero = true;
    // receiver side (k >= 1)
    bool w_identity = false;
    bool s_identity = false;
    RMatrix n2;  // R x L_k
    CMatrix b;   // sqrt(rho_k) Gbar_k, R x L_k; identity for k = 0
    bool b_zero = true;
    double rho = 1.0;
};

/// Offsets of the subordination vectors inside the packed unknown.
///   pit[k] (R)   -> Psi~      for k >= 1
///   pi[k]  (L_k) -> Psi_k     for k >= 1
///   sgt[k] (L_k) -> Phi~_k    for k >= 0
///   sg[k]  (T)   -> Phi       for k >= 0
struct Layout {
    std::vector<Index> pit, pi, sgt, sg;
    Index total = 0;
    /// Sign every entry carries at a real negative z: the Psi~ and Phi~
    /// families (built from G_Ck, G_D~) are nonnegative, the other two
    /// (from G_C~, G_Dk) nonpositive.
    Eigen::VectorXd sign;
};

struct Prepared {
    const ChannelSpec* spec = nullptr;
    Index r = 0, t = 0, l = 0;
    std::vector<LinkData> links;
    Layout layout;
};

Prepared prepare(const ChannelSpec& spec) {
    Prepared p;
    p.spec = &spec;
    p.r = static_cast<Index>(spec.rx());
    p.t = static_cast<Index>(spec.tx());
    p.l = static_cast<Index>(spec.partition().total());
    const std::size_t nl = spec.partition().blocks();
    p.links.resize(nl);
    for (std::size_t k = 0; k < nl; ++k) {
        LinkData& d = p.links[k];
        const LinkF& f = spec.link_f(k);
        d.size = f.specular.rows();
        d.u_identity = is_identity(f.rx_basis);
        d.v_identity = is_identity(f.tx_basis);
        d.m2 = f.profile.array().square();
        d.a = f.specular.adjoint();
        d.a_zero = f.specular.cwiseAbs().maxCoeff() == 0.0;
        if (k == 0) {
            d.b = CMatrix::Identity(p.r, p.r);
            d.b_zero = false;
        } else {
            const LinkG& g = spec.link_g(k);
            d.w_identity = is_identity(g.rx_basis);
            d.s_identity = is_identity(g.tx_basis);
            d.n2 = g.profile.array().square();
            d.rho = g.rho;
            d.b = std::sqrt(g.rho) * g.specular;
            d.b_zero = g.specular.cwiseAbs().maxCoeff() == 0.0;
        }
    }
    Layout& lay = p.layout;
    lay.pit.assign(nl, -1);
    lay.pi.assign(nl, -1);
    lay.sgt.assign(nl, -1);
    lay.sg.assign(nl, -1);
    Index off = 0;
    for (std::size_t k = 1; k < nl; ++k) {
        lay.pit[k] = off;
        off += p.r;
    }
    for (std::size_t k = 1; k < nl; ++k) {
        lay.pi[k] = off;
        off += p.links[k].size;
    }
    for (std::size_t k = 0; k < nl; ++k) {
        lay.sgt[k] = off;
        off += p.links[k].size;
    }
    for (std::size_t k = 0; k < nl; ++k) {
        lay.sg[k] = off;
        off += p.t;
    }
    lay.total = off;
    lay.sign.setOnes(off);
    const Index pi_begin = nl > 1 ? lay.pi[1] : lay.sgt[0];
    lay.sign.segment(pi_begin, lay.sgt[0] - pi_begin).setConstant(-1.0);
    lay.sign.segment(lay.sg[0], off - lay.sg[0]).setConstant(-1.0);
    return p;
}

CVector sandwich_diag(const CMatrix& basis, bool ident, const CMatrix& a) {
    if (ident) {
        return a.diagonal();
    }
    const CMatrix ab = a * basis;
    return (basis.conjugate().array() * ab.array()).colwise().sum().transpose();
}

CMatrix rotate(const CMatrix& basis, bool ident, const CVector& w) {
    if (ident) {
        return w.asDiagonal();
    }
    return (basis * w.asDiagonal()) * basis.adjoint();
}

/// Psi-family, G-blocks and the intermediate per-link blocks at one iterate.
struct Evaluation {
    CMatrix psi_tilde, phi;
    std::vector<CMatrix> psi, phi_tilde;
    CMatrix gc_tilde, gd_tilde;
    std::vector<CMatrix> gc, gd;
    std::vector<CMatrix> y11, y12, y21, y22;
    CVector next;  // subordination vectors recomputed from the G-blocks
};

void build_psi_family(const Prepared& p, cplx z, const CVector& x, Evaluation& e) {
    const ChannelSpec& spec = *p.spec;
    const std::size_t nl = p.links.size();
    const double tt = static_cast<double>(p.t);
    e.psi_tilde = z * CMatrix::Identity(p.r, p.r);
    e.phi = CMatrix::Identity(p.t, p.t);
    e.psi.assign(nl, CMatrix());
    e.phi_tilde.assign(nl, CMatrix());
    e.psi[0] = CMatrix::Zero(p.r, p.r);
    for (std::size_t k = 0; k < nl; ++k) {
        const LinkData& d = p.links[k];
        const LinkF& f = spec.link_f(k);
        e.phi_tilde[k] = -rotate(f.rx_basis, d.u_identity, x.segment(p.layout.sgt[k], d.size)) / tt;
        e.phi -= rotate(f.tx_basis, d.v_identity, x.segment(p.layout.sg[k], p.t)) / tt;
        if (k == 0) {
            continue;
        }
        const LinkG& g = spec.link_g(k);
        const double scale = d.rho / static_cast<double>(d.size);
        e.psi_tilde -= scale * rotate(g.rx_basis, d.w_identity, x.segment(p.layout.pit[k], p.r));
        e.psi[k] = -scale * rotate(g.tx_basis, d.s_identity, x.segment(p.layout.pi[k], d.size));
    }
}

/// G-blocks from the Psi-family through the (R + T) Schur complement obtained
/// by eliminating the (D, C) pair link by link.
void solve_g_blocks(const Prepared& p, Evaluation& e) {
    const std::size_t nl = p.links.size();
    const Index r = p.r;
    const Index t = p.t;
    e.y11.assign(nl, CMatrix());
    e.y12.assign(nl, CMatrix());
    e.y21.assign(nl, CMatrix());
    e.y22.assign(nl, CMatrix());

    CMatrix z_mat(r + t, r + t);
    z_mat.topLeftCorner(r, r) = e.psi_tilde;
    z_mat.topRightCorner(r, t).setZero();
    z_mat.bottomLeftCorner(t, r).setZero();
    z_mat.bottomRightCorner(t, t) = e.phi;

    for (std::size_t k = 0; k < nl; ++k) {
        const LinkData& d = p.links[k];
        const Index n = d.size;
        if (k == 0) {
            e.y11[k] = CMatrix::Zero(n, n);
            e.y12[k] = CMatrix::Identity(n, n);
            e.y21[k] = CMatrix::Identity(n, n);
            e.y22[k] = -e.phi_tilde[k];
        } else {
            const CMatrix q = hermitian_inverse(CMatrix::Identity(n, n) - e.phi_tilde[k] * e.psi[k],
                                                "I - Phi~_k Psi_k");
            const CMatrix psi_q = e.psi[k] * q;
            e.y11[k] = -psi_q;
            e.y12[k] = CMatrix::Identity(n, n) + psi_q * e.phi_tilde[k];
            e.y21[k] = q;
            e.y22[k] = -q * e.phi_tilde[k];
        }
        if (!d.b_zero) {
            z_mat.topLeftCorner(r, r) -= d.b * e.y22[k] * d.b.adjoint();
        }
        if (!d.a_zero) {
            z_mat.bottomRightCorner(t, t) -= d.a * e.y11[k] * d.a.adjoint();
            if (!d.b_zero) {
                z_mat.topRightCorner(r, t) -= d.b * e.y21[k] * d.a.adjoint();
                z_mat.bottomLeftCorner(t, r) -= d.a * e.y12[k] * d.b.adjoint();
            }
        }
    }

    const CMatrix w = hermitian_inverse(z_mat, "reduced linearization (R + T Schur complement)");
    e.gc_tilde = w.topLeftCorner(r, r);
    e.gd_tilde = w.bottomRightCorner(t, t);
    e.gc.assign(nl, CMatrix());
    e.gd.assign(nl, CMatrix());
    e.gc[0] = CMatrix::Zero(r, r);

    for (std::size_t k = 0; k < nl; ++k) {
        const LinkData& d = p.links[k];
        const Index n = d.size;
        // G_Dk = y11 + [y12 B^H, y11 A^H] W [B y21; A y11]
        // G_Ck = y22 + [y22 B^H, y21 A^H] W [B y22; A y12]
        CMatrix left_d = CMatrix::Zero(n, r + t);
        CMatrix right_d = CMatrix::Zero(r + t, n);
        CMatrix left_c = CMatrix::Zero(n, r + t);
        CMatrix right_c = CMatrix::Zero(r + t, n);
        if (!d.b_zero) {
            left_d.leftCols(r) = e.y12[k] * d.b.adjoint();
            right_d.topRows(r) = d.b * e.y21[k];
            left_c.leftCols(r) = e.y22[k] * d.b.adjoint();
            right_c.topRows(r) = d.b * e.y22[k];
        }
        if (!d.a_zero) {
            left_d.rightCols(t) = e.y11[k] * d.a.adjoint();
            right_d.bottomRows(t) = d.a * e.y11[k];
            left_c.rightCols(t) = e.y21[k] * d.a.adjoint();
            right_c.bottomRows(t) = d.a * e.y12[k];
        }
        e.gd[k] = e.y11[k] + left_d * (w * right_d);
        if (k > 0) {
            e.gc[k] = e.y22[k] + left_c * (w * right_c);
        }
    }
}

void recompute_vectors(const Prepared& p, Evaluation& e) {
    const ChannelSpec& spec = *p.spec;
    const std::size_t nl = p.links.size();
    e.next.resize(p.layout.total);
    for (std::size_t k = 0; k < nl; ++k) {
        const LinkData& d = p.links[k];
        const LinkF& f = spec.link_f(k);
        e.next.segment(p.layout.sgt[k], d.size) =
            d.m2.cast<cplx>() * sandwich_diag(f.tx_basis, d.v_identity, e.gd_tilde);
        e.next.segment(p.layout.sg[k], p.t) =
            d.m2.transpose().cast<cplx>() * sandwich_diag(f.rx_basis, d.u_identity, e.gd[k]);
        if (k == 0) {
            continue;
        }
        const LinkG& g = spec.link_g(k);
        e.next.segment(p.layout.pit[k], p.r) = d.n2.cast<cplx>() * sandwich_diag(g.tx_basis, d.s_identity, e.gc[k]);
        e.next.segment(p.layout.pi[k], d.size) =
            d.n2.transpose().cast<cplx>() * sandwich_diag(g.rx_basis, d.w_identity, e.gc_tilde);
    }
}

void hermitize(CMatrix& a) { a = (0.5 * (a + a.adjoint())).eval(); }

void evaluate(const Prepared& p, cplx z, const CVector& x, bool real_axis, Evaluation& e) {
    build_psi_family(p, z, x, e);
    if (real_axis) {
        hermitize(e.psi_tilde);
        hermitize(e.phi);
        for (auto& m : e.psi) hermitize(m);
        for (auto& m : e.phi_tilde) hermitize(m);
    }
    solve_g_blocks(p, e);
    if (real_axis) {
        hermitize(e.gc_tilde);
        hermitize(e.gd_tilde);
        for (auto& m : e.gc) hermitize(m);
        for (auto& m : e.gd) hermitize(m);
    }
    recompute_vectors(p, e);
    if (real_axis) {
        e.next = e.next.real().cast<cplx>();
    }
}

/// Frobenius change normalized by 1 + ||current||_F / sqrt(n). Since the
/// Frobenius norm dominates the spectral norm and ||C||_F / sqrt(n) never
/// exceeds ||C||_2, this bounds the spectral-norm relative change from above.
double scaled_change(double diff_norm, double current_norm, Index n) {
    return diff_norm / (1.0 + current_norm / std::sqrt(static_cast<double>(n)));
}

double block_norm(const std::vector<CMatrix>& blocks, std::size_t first) {
    double sq = 0.0;
    for (std::size_t k = first; k < blocks.size(); ++k) sq += blocks[k].squaredNorm();
    return std::sqrt(sq);
}

double block_diff(const std::vector<CMatrix>& a, const std::vector<CMatrix>& b, std::size_t first) {
    double sq = 0.0;
    for (std::size_t k = first; k < a.size(); ++k) sq += (a[k] - b[k]).squaredNorm();
    return std::sqrt(sq);
}

/// Upper bound on the Psi-family change when the vectors move by dx
/// (rotations are unitary, so each segment contributes its 2-norm).
double psi_family_change(const Prepared& p, const CVector& dx, const Evaluation& e) {
    const std::size_t nl = p.links.size();
    const double tt = static_cast<double>(p.t);
    double d_psit = 0.0, d_phi = 0.0, d_psi_sq = 0.0, d_phit_sq = 0.0;
    for (std::size_t k = 0; k < nl; ++k) {
        const LinkData& d = p.links[k];
        d_phit_sq += dx.segment(p.layout.sgt[k], d.size).squaredNorm() / (tt * tt);
        d_phi += dx.segment(p.layout.sg[k], p.t).norm() / tt;
        if (k == 0) continue;
        const double scale = d.rho / static_cast<double>(d.size);
        d_psit += scale * dx.segment(p.layout.pit[k], p.r).norm();
        d_psi_sq += scale * scale * dx.segment(p.layout.pi[k], d.size).squaredNorm();
    }
    double res = 0.0;
    res = std::max(res, scaled_change(d_psit, e.psi_tilde.norm(), p.r));
    res = std::max(res, scaled_change(d_phi, e.phi.norm(), p.t));
    res = std::max(res, scaled_change(std::sqrt(d_psi_sq), block_norm(e.psi, 0), p.l));
    res = std::max(res, scaled_change(std::sqrt(d_phit_sq), block_norm(e.phi_tilde, 0), p.l));
    return res;
}

double g_family_change(const Prepared& p, const Evaluation& cur, const Evaluation& prev) {
    double res = 0.0;
    res = std::max(res, scaled_change((cur.gc_tilde - prev.gc_tilde).norm(), cur.gc_tilde.norm(), p.r));
    res = std::max(res, scaled_change((cur.gd_tilde - prev.gd_tilde).norm(), cur.gd_tilde.norm(), p.t));
    res = std::max(res, scaled_change(block_diff(cur.gc, prev.gc, 1), block_norm(cur.gc, 1), p.l));
    res = std::max(res, scaled_change(block_diff(cur.gd, prev.gd, 0), block_norm(cur.gd, 0), p.l));
    return res;
}

/// Vectors from G-blocks: the first half-cycle of the iteration.
CVector vectors_from_state(const Prepared& p, const SolverState& s) {
    Evaluation e;
    e.gc_tilde = s.gc_tilde;
    e.gd_tilde = s.gd_tilde;
    e.gc = s.gc.blocks;
    e.gd = s.gd.blocks;
    recompute_vectors(p, e);
    return e.next;
}

/// Herglotz-type sign of the subordination vectors: every entry is a
/// nonnegative combination of diagonal entries of G-blocks, whose imaginary
/// parts are nonpositive on the upper half-plane.
/// Off the axis every entry lies in the closed lower half-plane; on the
/// negative real axis each entry has the sign given by the layout.
bool vectors_admissible(const Layout& lay, const CVector& x, bool real_axis) {
    const double tol = 1e-12 * (1.0 + x.cwiseAbs().maxCoeff());
    for (Index i = 0; i < x.size(); ++i) {
        const double v = real_axis ? -lay.sign(i) * x(i).real() : x(i).imag();
        if (v > tol) return false;
    }
    return true;
}

CMatrix xi_inverse(const Prepared& p, const Evaluation& e) {
    // Xi^{-1} = blkdiag(y22_k) + P V Q,  P = [y21_k A_k^H]_k, Q = [A_l y12_l]_l,
    // V = (Phi - sum_k A_k y11_k A_k^H)^{-1}
    const ChannelSpec& spec = *p.spec;
    const Partition& part = spec.partition();
    const std::size_t nl = p.links.size();
    CMatrix out = CMatrix::Zero(p.l, p.l);
    CMatrix v_inv = e.phi;
    CMatrix pm = CMatrix::Zero(p.l, p.t);
    CMatrix qm = CMatrix::Zero(p.t, p.l);
    for (std::size_t k = 0; k < nl; ++k) {
        const LinkData& d = p.links[k];
        const auto off = static_cast<Index>(part.offset(k));
        out.block(off, off, d.size, d.size) = e.y22[k];
        if (d.a_zero) continue;
        v_inv -= d.a * e.y11[k] * d.a.adjoint();
        pm.middleRows(off, d.size) = e.y21[k] * d.a.adjoint();
        qm.middleCols(off, d.size) = d.a * e.y12[k];
    }
    out += pm * hermitian_inverse(v_inv, "Phi - Fbar^H Y11 Fbar") * qm;
    return out;
}

SolverState make_state(const Prepared& p, cplx z, const Evaluation& e) {
    const Partition& part = p.spec->partition();
    SolverState s;
    s.z = z;
    s.psi_tilde = e.psi_tilde;
    s.phi = e.phi;
    s.psi = BlockDiag(part);
    s.phi_tilde = BlockDiag(part);
    s.gc = BlockDiag(part);
    s.gd = BlockDiag(part);
    s.psi.blocks = e.psi;
    s.phi_tilde.blocks = e.phi_tilde;
    s.gc_tilde = e.gc_tilde;
    s.gd_tilde = e.gd_tilde;
    s.gc.blocks = e.gc;
    s.gd.blocks = e.gd;
    s.xi_inv = xi_inverse(p, e);
    return s;
}

SolveStatus branch_check(const SolverState& s, bool real_axis, std::string& why) {
    const double scale = std::max(s.gc_tilde.norm(), std::numeric_limits<double>::min());
    if (real_axis) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (s.gc_tilde + s.gc_tilde.adjoint()), Eigen::EigenvaluesOnly);
        if (es.eigenvalues().maxCoeff() >= 0.0) {
            why = "Gc_tilde is not negative definite on the negative real axis";
            return SolveStatus::BranchViolation;
        }
        return SolveStatus::Converged;
    }
    const CMatrix im = (s.gc_tilde - s.gc_tilde.adjoint()) / cplx(0.0, 2.0);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (im + im.adjoint()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().maxCoeff() > 1e-8 * scale) {
        why = "Im Gc_tilde is not negative semidefinite";
        return SolveStatus::BranchViolation;
    }
    return SolveStatus::Converged;
}

cplx effective_point(cplx z, const SolverOptions& opts) {
    if (z.imag() == 0.0 && z.real() >= 0.0 && opts.epsilon_imag > 0.0) {
        return {z.real(), opts.epsilon_imag};
    }
    return z;
}

void require_domain(cplx z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw std::invalid_argument("solve_fixed_point: non-finite z");
    }
    if (!(z.imag() > 0.0 || (z.imag() == 0.0 && z.real() < 0.0))) {
        throw std::invalid_argument("solve_fixed_point: z must satisfy Im z > 0 or be real and negative");
    }
}

/// Anderson mixing history (Walker & Ni form, type II).
class AndersonHistory {
public:
    explicit AndersonHistory(std::size_t depth) : depth_(depth) {}

    void clear() {
        dx_.clear();
        df_.clear();
        has_prev_ = false;
    }

    /// Records (x, f) and returns the mixed update.
    CVector step(const CVector& x, const CVector& f, double beta, bool real_only) {
        if (has_prev_) {
            dx_.push_back(x - prev_x_);
            df_.push_back(f - prev_f_);
            if (dx_.size() > depth_) {
                dx_.pop_front();
                df_.pop_front();
            }
        }
        prev_x_ = x;
        prev_f_ = f;
        has_prev_ = true;
        if (dx_.empty()) {
            return x + beta * f;
        }
        const auto m = static_cast<Index>(df_.size());
        CMatrix dfm(f.size(), m), dxm(x.size(), m);
        for (Index j = 0; j < m; ++j) {
            dfm.col(j) = df_[static_cast<std::size_t>(j)];
            dxm.col(j) = dx_[static_cast<std::size_t>(j)];
        }
        CVector gamma;
        if (real_only) {
            const Eigen::MatrixXd a = dfm.real();
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
            cod.setThreshold(1e-12);
            gamma = cod.solve(Eigen::VectorXd(f.real())).cast<cplx>();
        } else {
            Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(dfm);
            cod.setThreshold(1e-12);
            gamma = cod.solve(f);
        }
        return x + beta * f - (dxm + beta * dfm) * gamma;
    }

private:
    std::size_t depth_;
    std::deque<CVector> dx_, df_;
    CVector prev_x_, prev_f_;
    bool has_prev_ = false;
};

constexpr double kRestartFactor = 1e3;

SolverState zero_blocks(const Prepared& p, cplx z) {
    const Partition& part = p.spec->partition();
    SolverState s;
    s.z = z;
    s.psi = BlockDiag(part);
    s.phi_tilde = BlockDiag(part);
    s.gc = BlockDiag(part);
    s.gd = BlockDiag(part);
    s.gc_tilde = CMatrix::Zero(p.r, p.r);
    s.gd_tilde = CMatrix::Zero(p.t, p.t);
    return s;
}

SolverState solve_prepared(const Prepared& p, cplx z_in, const SolverState* init, const SolverOptions& opts) {
    const cplx z = effective_point(z_in, opts);
    require_domain(z);
    const bool real_axis = z.imag() == 0.0;

    CVector x = CVector::Zero(p.layout.total);
    if (init != nullptr && init->converged()) {
        x = vectors_from_state(p, *init);
        if (real_axis) x = x.real().cast<cplx>();
        if (!vectors_admissible(p.layout, x, real_axis)) {
            x.setZero();
        }
    }

    const bool anderson = opts.acceleration == Acceleration::Anderson && opts.anderson_depth > 0;
    AndersonHistory history(opts.anderson_depth);
    double beta = opts.damping;
    const double min_beta = std::min(opts.damping, 1.0 / 16.0);
    std::size_t increases = 0;
    double last_residual = std::numeric_limits<double>::infinity();
    double best_residual = std::numeric_limits<double>::infinity();
    CVector best_x = x;

    // predecessor G-blocks: those of the warm start, zero for a cold start
    Evaluation cur, prev;
    if (init != nullptr && init->converged() && x.squaredNorm() > 0.0) {
        prev.gc_tilde = init->gc_tilde;
        prev.gd_tilde = init->gd_tilde;
        prev.gc = init->gc.blocks;
        prev.gd = init->gd.blocks;
    } else {
        const SolverState zero = zero_blocks(p, z);
        prev.gc_tilde = zero.gc_tilde;
        prev.gd_tilde = zero.gd_tilde;
        prev.gc = zero.gc.blocks;
        prev.gd = zero.gd.blocks;
    }
    SolverState out;
    out.z = z;
    try {
        for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
            evaluate(p, z, x, real_axis, cur);
            const CVector f = cur.next - x;
            const double residual = std::max(psi_family_change(p, f, cur), g_family_change(p, cur, prev));
            if (!std::isfinite(residual)) {
                throw SingularMatrixError("non-finite iterate", 0.0);
            }
            if (residual <= opts.tolerance) {
                out = make_state(p, z, cur);
                out.residual = residual;
                out.iterations = it;
                std::string why;
                out.status = branch_check(out, real_axis, why);
                out.message = why;
                return out;
            }

            if (residual > last_residual) {
                if (++increases >= 10 && beta > min_beta) {
                    beta = std::max(0.5 * beta, min_beta);
                    increases = 0;
                    history.clear();
                }
            } else {
                increases = 0;
            }
            last_residual = residual;

            CVector next;
            if (anderson && residual > kRestartFactor * best_residual) {
                // the extrapolation has run away: go back to the best iterate
                // (the next residual compares against the runaway blocks, so
                // the best value is re-recorded from there)
                history.clear();
                next = best_x;
                best_residual = std::numeric_limits<double>::infinity();
            } else if (anderson) {
                if (residual < best_residual) {
                    best_residual = residual;
                    best_x = x;
                }
                next = history.step(x, f, beta, real_axis);
                if (!vectors_admissible(p.layout, next, real_axis)) {
                    history.clear();
                    next = x + beta * f;
                }
            } else {
                next = x + beta * f;
            }
            if (real_axis) next = next.real().cast<cplx>();
            std::swap(prev, cur);
            x = std::move(next);
            out.residual = residual;
            out.iterations = it;
        }
        Evaluation last;
        evaluate(p, z, x, real_axis, last);
        const double r = out.residual;
        const std::size_t n = out.iterations;
        out = make_state(p, z, last);
        out.residual = r;
        out.iterations = n;
        out.status = SolveStatus::MaxIterations;
        out.message = "residual above tolerance at max_iterations";
    } catch (const SingularMatrixError& err) {
        out = SolverState{};
        out.z = z;
        out.status = SolveStatus::Singular;
        out.message = err.what();
        out.residual = std::numeric_limits<double>::infinity();
    }
    return out;
}

/// Cold start for a chain head. Close to the real axis a cold start can need
/// thousands of cycles, so descend to Im z from a tenth of max(1, |Re z|) in
/// decades, warm-starting each step.
SolverState cold_solve(const Prepared& p, cplx z_in, const SolverOptions& opts) {
    const cplx z = effective_point(z_in, opts);
    const double top = 0.1 * std::max(1.0, std::abs(z.real()));
    if (!(z.imag() > 0.0) || z.imag() * 10.0 >= top) return solve_prepared(p, z_in, nullptr, opts);
    SolverOptions ladder_opts = opts;
    ladder_opts.epsilon_imag = 0.0;
    SolverState warm;
    std::size_t spent = 0;
    for (double eta = top; eta > 10.0 * z.imag(); eta *= 0.1) {
        SolverState next = solve_prepared(p, cplx(z.real(), eta), warm.converged() ? &warm : nullptr, ladder_opts);
        spent += next.iterations;
        if (!next.converged()) break;
        warm = std::move(next);
    }
    SolverState out = solve_prepared(p, z_in, warm.converged() ? &warm : nullptr, opts);
    if (!out.converged() && warm.converged()) {
        spent += out.iterations;
        out = solve_prepared(p, z_in, nullptr, opts);
    }
    out.iterations += spent;
    return out;
}

std::vector<SolverState> run_sweep(const ChannelSpec& spec, const std::vector<cplx>& points,
                                   const SolverOptions& opts, bool parallel) {
    opts.validate();
    const Prepared p = prepare(spec);
    std::vector<SolverState> out(points.size());
    const std::size_t n = points.size();
    const std::size_t len = opts.chain_length == 0 ? std::max<std::size_t>(n, 1) : opts.chain_length;
    const std::size_t chains = (n + len - 1) / len;
    for (const cplx& z : points) {
        require_domain(effective_point(z, opts));
    }

    auto run_chain = [&](std::size_t c) {
        const std::size_t begin = c * len;
        const std::size_t end = std::min(n, begin + len);
        const SolverState* warm = nullptr;
        for (std::size_t i = begin; i < end; ++i) {
            out[i] = warm != nullptr ? solve_prepared(p, points[i], warm, opts) : cold_solve(p, points[i], opts);
            if (!out[i].converged() && warm != nullptr) {
                const std::size_t spent = out[i].iterations;
                out[i] = cold_solve(p, points[i], opts);
                out[i].iterations += spent;
            }
            warm = out[i].converged() ? &out[i] : nullptr;
        }
    };

    if (parallel) {
        const auto nc = static_cast<long long>(chains);
#pragma omp parallel for schedule(dynamic, 1)
        for (long long c = 0; c < nc; ++c) {
            run_chain(static_cast<std::size_t>(c));
        }
    } else {
        for (std::size_t c = 0; c < chains; ++c) {
            run_chain(c);
        }
    }
    return out;
}

}  // namespace

void SolverOptions::validate() const {
    if (!(tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
    if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("solver damping must lie in (0, 1]");
    if (!(epsilon_imag >= 0.0)) throw std::invalid_argument("epsilon_imag must be nonnegative");
    if (max_iterations == 0) throw std::invalid_argument("max_iterations must be positive");
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::MaxIterations: return "max_iterations";
        case SolveStatus::Singular: return "singular";
        case SolveStatus::BranchViolation: return "branch_violation";
    }
    return "unknown";
}

SolverState solve_fixed_point(const ChannelSpec& spec, cplx z, const SolverState* init, const SolverOptions& opts) {
    opts.validate();
    const Prepared p = prepare(spec);
    return solve_prepared(p, z, init, opts);
}

cplx cauchy_B(const ChannelSpec& spec, const SolverState& state) {
    if (state.xi_inv.size() == 0) {
        throw std::invalid_argument("cauchy_B: state carries no solution");
    }
    const CMatrix gbar = stacked_specular_g(spec);
    const CMatrix inner = state.psi_tilde - gbar * state.xi_inv * gbar.adjoint();
    const CMatrix g = hermitian_inverse(inner, "Psi~ - Gbar Xi^-1 Gbar^H");
    return g.trace() / static_cast<double>(spec.rx());
}

cplx cauchy_trace(const SolverState& state) {
    return state.gc_tilde.trace() / static_cast<double>(state.gc_tilde.rows());
}

std::vector<SolverState> sweep(const ChannelSpec& spec, const std::vector<cplx>& points, const SolverOptions& opts) {
    return run_sweep(spec, points, opts, true);
}

std::vector<SolverState> sweep_serial(const ChannelSpec& spec, const std::vector<cplx>& points,
                                      const SolverOptions& opts) {
    return run_sweep(spec, points, opts, false);
}

SolverState apply_fixed_point_map(const ChannelSpec& spec, const SolverState& state) {
    const Prepared p = prepare(spec);
    const bool real_axis = state.z.imag() == 0.0;
    CVector x = vectors_from_state(p, state);
    if (real_axis) x = x.real().cast<cplx>();
    Evaluation e;
    evaluate(p, state.z, x, real_axis, e);
    SolverState s = make_state(p, state.z, e);
    s.status = SolveStatus::Converged;
    return s;
}

SolverState initial_state(const ChannelSpec& spec, cplx z) {
    const Prepared p = prepare(spec);
    Evaluation e;
    build_psi_family(p, z, CVector::Zero(p.layout.total), e);
    SolverState s = zero_blocks(p, z);
    s.psi_tilde = e.psi_tilde;
    s.phi = e.phi;
    s.status = SolveStatus::MaxIterations;
    return s;
}

}  // namespace rismi
