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

#include "rismi/linalg.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace rismi {

namespace {

std::string singular_message(const std::string& which, double rcond) {
    std::ostringstream os;
    os << "singular matrix: " << which << " (rcond estimate " << rcond << " < " << kMinRcond << ")";
    return os.str();
}

void require_square(const CMatrix& a, const char* what) {
    if (a.rows() != a.cols()) {
        throw DimensionError(std::string(what) + " must be square");
    }
}

}  // namespace

SingularMatrixError::SingularMatrixError(std::string which, double rcond)
    : std::runtime_error(singular_message(which, rcond)), which_(std::move(which)), rcond_(rcond) {}

Partition::Partition(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) {
        throw DimensionError("partition needs at least one block");
    }
    offsets_.reserve(sizes_.size());
    for (std::size_t s : sizes_) {
        if (s == 0) {
            throw DimensionError("partition block sizes must be positive");
        }
        offsets_.push_back(total_);
        total_ += s;
    }
}

BlockDiag::BlockDiag(Partition p) : partition(std::move(p)) {
    blocks.reserve(partition.blocks());
    for (std::size_t s : partition.sizes()) {
        blocks.push_back(CMatrix::Zero(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)));
    }
}

BlockDiag BlockDiag::from_dense(const CMatrix& a, const Partition& p) {
    BlockDiag out;
    out.partition = p;
    out.blocks.reserve(p.blocks());
    for (std::size_t k = 0; k < p.blocks(); ++k) {
        out.blocks.push_back(extract_diag_block(a, p, k));
    }
    return out;
}

CMatrix BlockDiag::to_dense() const {
    const auto n = static_cast<Eigen::Index>(partition.total());
    CMatrix out = CMatrix::Zero(n, n);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const auto off = static_cast<Eigen::Index>(partition.offset(k));
        const auto s = static_cast<Eigen::Index>(partition.size(k));
        out.block(off, off, s, s) = blocks[k];
    }
    return out;
}

double BlockDiag::frobenius_norm() const {
    double sq = 0.0;
    for (const auto& b : blocks) {
        sq += b.squaredNorm();
    }
    return std::sqrt(sq);
}

bool BlockDiag::is_hermitian(double rel_tol) const {
    for (const auto& b : blocks) {
        if (!rismi::is_hermitian(b, rel_tol)) {
            return false;
        }
    }
    return true;
}

CMatrix Block2x2::assemble() const {
    CMatrix out(a.rows() + c.rows(), a.cols() + b.cols());
    out << a, b, c, d;
    return out;
}

CMatrix Block3x3::assemble() const {
    CMatrix out(e.rows() + h.rows() + l.rows(), e.cols() + f.cols() + g.cols());
    out << e, f, g, h, j, k, l, m, n;
    return out;
}

void require_valid(const CMatrix& a, const char* what) {
    if (a.rows() == 0 || a.cols() == 0) {
        throw DimensionError(std::string(what) + " has an empty dimension");
    }
    if (!a.allFinite()) {
        throw std::invalid_argument(std::string(what) + " has non-finite entries");
    }
}

CMatrix hermitian_inverse(const CMatrix& a, const char* what) {
    require_square(a, what);
    if (a.rows() == 0) {
        throw DimensionError(std::string(what) + " is empty");
    }
    Eigen::PartialPivLU<CMatrix> lu(a);
    const double rcond = lu.rcond();
    if (!(rcond >= kMinRcond)) {
        throw SingularMatrixError(what, rcond);
    }
    CMatrix inv = lu.inverse();
    if (!inv.allFinite()) {
        throw SingularMatrixError(what, 0.0);
    }
    if (rismi::is_hermitian(a, 1e-12)) {
        inv = (0.5 * (inv + inv.adjoint())).eval();
    }
    return inv;
}

CMatrix woodbury_inverse(const CMatrix& a, const CMatrix& b, const CMatrix& d, const CMatrix& c) {
    require_square(a, "A");
    require_square(d, "D");
    if (b.rows() != a.rows() || b.cols() != d.rows() || c.rows() != d.rows() || c.cols() != a.cols()) {
        throw DimensionError("woodbury_inverse: non-conformable blocks");
    }
    const CMatrix ai = hermitian_inverse(a, "A");
    const CMatrix di = hermitian_inverse(d, "D");
    const CMatrix ai_b = ai * b;
    const CMatrix inner = hermitian_inverse(di + c * ai_b, "D^-1 + C A^-1 B");
    return ai - ai_b * inner * (c * ai);
}

Block2x2 block2x2_inverse(const Block2x2& x) {
    require_square(x.a, "A");
    require_square(x.d, "D");
    if (x.b.rows() != x.a.rows() || x.b.cols() != x.d.cols() || x.c.rows() != x.d.rows() ||
        x.c.cols() != x.a.cols()) {
        throw DimensionError("block2x2_inverse: non-conformable blocks");
    }
    const CMatrix ai = hermitian_inverse(x.a, "A");
    const CMatrix ai_b = ai * x.b;
    const CMatrix c_ai = x.c * ai;
    const CMatrix si = hermitian_inverse(x.d - x.c * ai_b, "Schur complement D - C A^-1 B");
    Block2x2 out;
    out.a = ai + ai_b * si * c_ai;
    out.b = -ai_b * si;
    out.c = -si * c_ai;
    out.d = si;
    return out;
}

Block2x2 block2x2_inverse_via_d(const Block2x2& x) {
    Block2x2 out = block2x2_inverse(x);
    const CMatrix di = hermitian_inverse(x.d, "D");
    out.a = hermitian_inverse(x.a - x.b * di * x.c, "A - B D^-1 C");
    return out;
}

Block3x3 block3x3_inverse(const Block3x3& x) {
    require_square(x.e, "E");
    require_square(x.j, "J");
    require_square(x.n, "N");
    if (x.f.rows() != x.e.rows() || x.g.rows() != x.e.rows() || x.h.rows() != x.j.rows() ||
        x.k.rows() != x.j.rows() || x.l.rows() != x.n.rows() || x.m.rows() != x.n.rows() ||
        x.f.cols() != x.j.cols() || x.g.cols() != x.n.cols() || x.h.cols() != x.e.cols() ||
        x.k.cols() != x.n.cols() || x.l.cols() != x.e.cols() || x.m.cols() != x.j.cols()) {
        throw DimensionError("block3x3_inverse: non-conformable blocks");
    }
    const CMatrix ei = hermitian_inverse(x.e, "E");
    const CMatrix a = x.j - x.h * ei * x.f;
    const CMatrix b = x.k - x.h * ei * x.g;
    const CMatrix c = x.m - x.l * ei * x.f;
    const CMatrix d = x.n - x.l * ei * x.g;
    const CMatrix ai = hermitian_inverse(a, "A = J - H E^-1 F");
    const CMatrix u = x.g - x.f * ai * b;
    const CMatrix v = x.l - c * ai * x.h;
    const CMatrix si = hermitian_inverse(d - c * ai * b, "S = D - C A^-1 B");

    Block3x3 out;
    out.e = ei + ei * (x.f * ai * x.h + u * si * v) * ei;
    out.f = -ei * (x.f - u * si * c) * ai;
    out.g = -ei * u * si;
    out.h = -ai * (x.h - b * si * v) * ei;
    out.j = ai + ai * b * si * c * ai;
    out.k = -ai * b * si;
    out.l = -si * v * ei;
    out.m = -si * c * ai;
    out.n = si;
    return out;
}

CMatrix extract_diag_block(const CMatrix& a, const Partition& p, std::size_t k) {
    if (k >= p.blocks()) {
        throw std::out_of_range("extract_diag_block: block index out of range");
    }
    if (static_cast<std::size_t>(a.rows()) != p.total() || static_cast<std::size_t>(a.cols()) != p.total()) {
        throw DimensionError("extract_diag_block: matrix does not match partition");
    }
    const auto off = static_cast<Eigen::Index>(p.offset(k));
    const auto s = static_cast<Eigen::Index>(p.size(k));
    return a.block(off, off, s, s);
}

CMatrix identity(std::size_t n) {
    const auto m = static_cast<Eigen::Index>(n);
    return CMatrix::Identity(m, m);
}

double spectral_norm(const CMatrix& a) {
    if (a.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<CMatrix> svd(a);
    return svd.singularValues()(0);
}

double relative_frobenius_error(const CMatrix& actual, const CMatrix& expected) {
    if (actual.rows() != expected.rows() || actual.cols() != expected.cols()) {
        throw DimensionError("relative_frobenius_error: shape mismatch");
    }
    const double ref = expected.norm();
    const double diff = (actual - expected).norm();
    return ref > 0.0 ? diff / ref : diff;
}

bool is_hermitian(const CMatrix& a, double rel_tol) {
    if (a.rows() != a.cols()) {
        return false;
    }
    const double scale = a.norm();
    return (a - a.adjoint()).norm() <= rel_tol * (scale > 0.0 ? scale : 1.0);
}

bool is_unitary(const CMatrix& u, double tol) {
    if (u.rows() != u.cols()) {
        return false;
    }
    const CMatrix gram = u.adjoint() * u;
    return (gram - CMatrix::Identity(u.rows(), u.cols())).norm() <= tol * std::sqrt(static_cast<double>(u.rows()));
}

bool is_identity(const CMatrix& u, double tol) {
    if (u.rows() != u.cols()) {
        return false;
    }
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            const cplx expect = (i == j) ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
            if (std::abs(u(i, j) - expect) > tol) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace rismi
