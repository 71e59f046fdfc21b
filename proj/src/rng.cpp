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

#include "rismi/rng.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace rismi {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> indices) {
    std::vector<std::uint32_t> words;
    auto push64 = [&words](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push64(seed);
    push64(static_cast<std::uint64_t>(tag));
    for (std::uint64_t i : indices) {
        push64(i);
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

}  // namespace

KeyedStream::KeyedStream(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> indices)
    : engine_(seeded_engine(seed, tag, indices)) {}

double KeyedStream::uniform() {
    // (k + 0.5) / 2^53 keeps the value strictly inside (0, 1).
    const std::uint64_t k = engine_() >> 11;
    return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

cplx KeyedStream::complex_normal(double variance) {
    // Box-Muller: |z|^2 ~ Exp(1) and a uniform phase give CN(0, 1) exactly.
    const double radius = std::sqrt(-variance * std::log(uniform()));
    const double phase = 2.0 * std::numbers::pi * uniform();
    return {radius * std::cos(phase), radius * std::sin(phase)};
}

CMatrix KeyedStream::complex_normal_matrix(Eigen::Index rows, Eigen::Index cols, double variance) {
    CMatrix out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            out(i, j) = complex_normal(variance);
        }
    }
    return out;
}

CMatrix haar_unitary(Eigen::Index n, KeyedStream& stream) {
    const CMatrix g = stream.complex_normal_matrix(n, n, 1.0);
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
    const CMatrix& r = qr.matrixQR();
    for (Eigen::Index j = 0; j < n; ++j) {
        const cplx d = r(j, j);
        const double mag = std::abs(d);
        if (mag > 0.0) {
            q.col(j) *= d / mag;
        }
    }
    return q;
}

}  // namespace rismi
