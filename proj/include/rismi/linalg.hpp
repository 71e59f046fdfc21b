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

// Dense complex matrix kernels and block-inversion identities.
//
// Every inverse goes through a partially pivoted LU factorization with a
// reciprocal condition estimate; anything below kMinRcond is reported as
// singular rather than silently producing garbage.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rismi {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kMinRcond = 1e-13;

class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(std::string which, double rcond);
    const std::string& which() const noexcept { return which_; }
    double rcond() const noexcept { return rcond_; }

private:
    std::string which_;
    double rcond_;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ordered block sizes (L_0, L_1, ..., L_K); L_0 is the receive dimension R.
class Partition {
public:
    Partition() = default;
    explicit Partition(std::vector<std::size_t> sizes);

    std::size_t blocks() const noexcept { return sizes_.size(); }
    std::size_t size(std::size_t k) const { return sizes_.at(k); }
    std::size_t offset(std::size_t k) const { return offsets_.at(k); }
    std::size_t total() const noexcept { return total_; }
    const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }

    bool operator==(const Partition& other) const { return sizes_ == other.sizes_; }

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
    std::size_t total_ = 0;
};

/// Block-diagonal matrix over a Partition, one square block per cell.
struct BlockDiag {
    Partition partition;
    std::vector<CMatrix> blocks;

    BlockDiag() = default;
    explicit BlockDiag(Partition p);  // zero blocks

    static BlockDiag from_dense(const CMatrix& a, const Partition& p);

    CMatrix& operator[](std::size_t k) { return blocks[k]; }
    const CMatrix& operator[](std::size_t k) const { return blocks[k]; }

    CMatrix to_dense() const;
    double frobenius_norm() const;
    bool is_hermitian(double rel_tol = 1e-12) const;
};

struct Block2x2 {
    CMatrix a, b, c, d;

    CMatrix assemble() const;
};

/// Row-major 3x3 block layout: e f g / h j k / l m n.
struct Block3x3 {
    CMatrix e, f, g, h, j, k, l, m, n;

    CMatrix assemble() const;
};

/// Throws on non-finite entries or empty dimensions.
void require_valid(const CMatrix& a, const char* what);

/// General inverse via pivoted LU; SingularMatrixError when the reciprocal
/// condition estimate falls below kMinRcond. Output is re-symmetrized when the
/// input is Hermitian.
CMatrix hermitian_inverse(const CMatrix& a, const char* what = "matrix");

/// (A + B D C)^{-1} = A^{-1} - A^{-1} B (D^{-1} + C A^{-1} B)^{-1} C A^{-1}
CMatrix woodbury_inverse(const CMatrix& a, const CMatrix& b, const CMatrix& d, const CMatrix& c);

/// Blocks of [[A, B], [C, D]]^{-1} through the Schur complement of A.
Block2x2 block2x2_inverse(const Block2x2& x);

/// Same inverse but with the upper-left block computed as (A - B D^{-1} C)^{-1};
/// requires D invertible as well.
Block2x2 block2x2_inverse_via_d(const Block2x2& x);

/// Nine blocks of the 3x3 block inverse, pivoting on E then on the Schur
/// complements A = J - H E^{-1} F and S = D - C A^{-1} B.
Block3x3 block3x3_inverse(const Block3x3& x);

/// k-th diagonal block of a square matrix laid out over p.
CMatrix extract_diag_block(const CMatrix& a, const Partition& p, std::size_t k);

CMatrix identity(std::size_t n);
double spectral_norm(const CMatrix& a);
double relative_frobenius_error(const CMatrix& actual, const CMatrix& expected);
bool is_hermitian(const CMatrix& a, double rel_tol = 1e-12);
bool is_unitary(const CMatrix& u, double tol = 1e-12);
bool is_identity(const CMatrix& u, double tol = 0.0);

}  // namespace rismi
