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

// Empirical counterparts of the analytic pipeline.
//
// Every trial is keyed by (seed, trial), per-trial results land in fixed
// slots, and reductions run in trial order with pairwise summation, so the
// numbers do not depend on the thread count. The *_serial variants skip
// OpenMP entirely and exist for testing and benchmarking.

#pragma once

#include "rismi/channel.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rismi {

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;  ///< sample standard deviation / sqrt(trials)
    std::size_t trials = 0;
    std::uint64_t seed = 0;
};

/// Pairwise (cascade) summation.
double pairwise_sum(std::span<const double> x);

/// Mean and standard error of per-trial values.
MCEstimate summarize(std::span<const double> values, std::uint64_t seed);

/// Eigenvalues of H H^dagger for trials 0..trials-1, trial-major, each trial
/// ascending. Size trials * R.
std::vector<double> empirical_eigenvalues(const ChannelSpec& spec, std::size_t trials, std::uint64_t seed);
std::vector<double> empirical_eigenvalues_serial(const ChannelSpec& spec, std::size_t trials, std::uint64_t seed);

/// Normalized histogram. Samples outside [edges.front(), edges.back()] are
/// counted in the normalization but not in any bin.
std::vector<double> empirical_density(std::span<const double> samples, std::span<const double> edges);

/// Freedman-Diaconis bin edges over [min, max] with at least min_bins bins.
std::vector<double> freedman_diaconis_edges(std::span<const double> samples, std::size_t min_bins = 40);

/// log det(I + gamma H H^dagger) in nats.
MCEstimate empirical_mutual_information(const ChannelSpec& spec, double gamma, std::size_t trials,
                                        std::uint64_t seed);
MCEstimate empirical_mutual_information_serial(const ChannelSpec& spec, double gamma, std::size_t trials,
                                               std::uint64_t seed);

/// One estimate per linear SNR from a single set of realizations.
std::vector<MCEstimate> empirical_mutual_information_sweep(const ChannelSpec& spec, const std::vector<double>& gammas,
                                                           std::size_t trials, std::uint64_t seed);

/// Per-trial log det values from eigenvalues laid out as empirical_eigenvalues returns them.
std::vector<double> log_det_values(std::span<const double> eigenvalues, std::size_t rx, double gamma);

enum class CorrelationMap { Eta, EtaTilde, Zeta, ZetaTilde };

const char* to_string(CorrelationMap m);

/// Sample mean of the quadratic form matching the map:
///   Eta: G~_k^dagger P G~_k, EtaTilde: G~_k P G~_k^dagger (k >= 1)
///   Zeta: F~_k^dagger P F~_k, ZetaTilde: F~_k P F~_k^dagger (k >= 0)
/// Hermitized before returning.
CMatrix empirical_covariance(const ChannelSpec& spec, CorrelationMap which, std::size_t k, const CMatrix& p,
                             std::size_t trials, std::uint64_t seed);
CMatrix empirical_covariance_serial(const ChannelSpec& spec, CorrelationMap which, std::size_t k, const CMatrix& p,
                                    std::size_t trials, std::uint64_t seed);

/// The analytic map the covariance converges to.
CMatrix analytic_covariance(const ChannelSpec& spec, CorrelationMap which, std::size_t k, const CMatrix& p);

}  // namespace rismi
