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

#pragma once

#include "rismi/linalg.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rismi {

/// Stream tags keep keyed streams for different purposes disjoint.
enum class StreamTag : std::uint64_t {
    ScatterF = 1,
    ScatterG = 2,
    Statistics = 3,
    Angles = 4,
};

/// Random stream keyed by (seed, tag, indices...). Two streams with the same
/// key produce the same sequence no matter which thread or in which order they
/// are created, which is what makes trials reproducible under parallelism.
class KeyedStream {
public:
    KeyedStream(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> indices);

    /// Uniform on (0, 1), 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    cplx complex_normal(double variance = 1.0);

    /// Matrix of i.i.d. CN(0, variance) entries.
    CMatrix complex_normal_matrix(Eigen::Index rows, Eigen::Index cols, double variance);

private:
    std::mt19937_64 engine_;
};

/// Haar-distributed unitary from the QR factorization of a Gaussian matrix,
/// with the phases of R's diagonal folded back into Q.
CMatrix haar_unitary(Eigen::Index n, KeyedStream& stream);

}  // namespace rismi
