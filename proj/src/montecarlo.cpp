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

#include "rismi/montecarlo.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rismi {

namespace {

using Index = Eigen::Index;

// Trials are grouped into fixed chunks; each chunk is summed in order, then
// chunk sums are combined pairwise. Chunking never depends on thread count.
constexpr std::size_t kChunk = 64;

std::vector<double> trial_eigenvalues(const ChannelSpec& spec, std::uint64_t seed, std::uint64_t trial) {
    const ChannelRealization real = sample_realization(spec, seed, trial);
    const CMatrix b = real.h * real.h.adjoint();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(b, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

std::vector<double> eigenvalues_impl(const ChannelSpec& spec, std::size_t trials, std::uint64_t seed,
                                     bool parallel) {
    if (trials == 0) throw std::invalid_argument("empirical_eigenvalues: trials must be >= 1");
    const std::size_t r = spec.rx();
    std::vector<double> out(trials * r);
    const auto n = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(dynamic, 8) if (parallel)
    for (std::int64_t i = 0; i < n; ++i) {
        const std::vector<double> ev = trial_eigenvalues(spec, seed, static_cast<std::uint64_t>(i));
        std::copy(ev.begin(), ev.end(), out.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(i) * r));
    }
    return out;
}

CMatrix quadratic_form(const ChannelSpec& spec, CorrelationMap which, std::size_t k, const CMatrix& p,
                       std::uint64_t seed, std::uint64_t trial) {
    switch (which) {
        case CorrelationMap::Eta: {
            const CMatrix g = sample_scatter_g(spec, k, seed, trial);
            return g.adjoint() * p * g;
        }
        case CorrelationMap::EtaTilde: {
            const CMatrix g = sample_scatter_g(spec, k, seed, trial);
            return g * p * g.adjoint();
        }
        case CorrelationMap::Zeta: {
            const CMatrix f = sample_scatter_f(spec, k, seed, trial);
            return f.adjoint() * p * f;
        }
        case CorrelationMap::ZetaTilde: {
            const CMatrix f = sample_scatter_f(spec, k, seed, trial);
            return f * p * f.adjoint();
        }
    }
    throw std::invalid_argument("unknown correlation map");
}

void check_covariance_args(const ChannelSpec& spec, CorrelationMap which, std::size_t k, const CMatrix& p,
                           std::size_t trials) {
    if (trials == 0) throw std::invalid_argument("empirical_covariance: trials must be >= 1");
    Index expected = 0;
    switch (which) {
        case CorrelationMap::Eta:
            if (k < 1 || k > spec.ris_count()) throw std::out_of_range("empirical_covariance: G-link index");
            expected = static_cast<Index>(spec.rx());
            break;
        case CorrelationMap::EtaTilde:
            if (k < 1 || k > spec.ris_count()) throw std::out_of_range("empirical_covariance: G-link index");
            expected = spec.link_g(k).elements();
            break;
        case CorrelationMap::Zeta:
            if (k >= spec.links_f().size()) throw std::out_of_range("empirical_covariance: F-link index");
            expected = spec.link_f(k).rows();
            break;
        case CorrelationMap::ZetaTilde:
            if (k >= spec.links_f().size()) throw std::out_of_range("empirical_covariance: F-link index");
            expected = static_cast<Index>(spec.tx());
            break;
    }
    if (p.rows() != expected || p.cols() != expected) {
        throw DimensionError("empirical_covariance: parameter must be " + std::to_string(expected) + " x " +
                             std::to_string(expected));
    }
}

CMatrix pairwise_matrix_sum(std::vector<CMatrix>& parts, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return parts[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_matrix_sum(parts, lo, mid) + pairwise_matrix_sum(parts, mid, hi);
}

CMatrix covariance_impl(const ChannelSpec& spec, CorrelationMap which, std::size_t k, const CMatrix& p,
                        std::size_t trials, std::uint64_t seed, bool parallel) {
    check_covariance_args(spec, which, k, p, trials);
    const std::size_t chunks = (trials + kChunk - 1) / kChunk;
    std::vector<CMatrix> sums(chunks);
    const auto n = static_cast<std::int64_t>(chunks);
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
    for (std::int64_t c = 0; c < n; ++c) {
        const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
        const std::size_t end = std::min(trials, begin + kChunk);
        CMatrix acc = quadratic_form(spec, which, k, p, seed, begin);
        for (std::size_t t = begin + 1; t < end; ++t) acc += quadratic_form(spec, which, k, p, seed, t);
        sums[static_cast<std::size_t>(c)] = std::move(acc);
    }
    CMatrix mean = pairwise_matrix_sum(sums, 0, chunks) / static_cast<double>(trials);
    return 0.5 * (mean + mean.adjoint());
}

}  // namespace

double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t mid = x.size() / 2;
    return pairwise_sum(x.subspan(0, mid)) + pairwise_sum(x.subspan(mid));
}

MCEstimate summarize(std::span<const double> values, std::uint64_t seed) {
    MCEstimate out;
    out.trials = values.size();
    out.seed = seed;
    if (values.empty()) return out;
    const double n = static_cast<double>(values.size());
    out.mean = pairwise_sum(values) / n;
    if (values.size() < 2) return out;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*lo == *hi) {
        // constant samples: the rounded mean must not leak into the spread
        out.mean = *lo;
        return out;
    }
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - out.mean;
        sq[i] = d * d;
    }
    out.std_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
    return out;
}

std::vector<double> empirical_eigenvalues(const ChannelSpec& spec, std::size_t trials, std::uint64_t seed) {
    return eigenvalues_impl(spec, trials, seed, true);
}

std::vector<double> empirical_eigenvalues_serial(const ChannelSpec& spec, std::size_t trials, std::uint64_t seed) {
    return eigenvalues_impl(spec, trials, seed, false);
}

std::vector<double> empirical_density(std::span<const double> samples, std::span<const double> edges) {
    if (samples.empty()) throw std::invalid_argument("empirical_density: no samples");
    if (edges.size() < 2) throw std::invalid_argument("empirical_density: need at least two edges");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) throw std::invalid_argument("empirical_density: edges must ascend");
    }
    const std::size_t bins = edges.size() - 1;
    std::vector<double> counts(bins, 0.0);
    for (double x : samples) {
        if (x < edges.front() || x > edges.back()) continue;
        auto it = std::upper_bound(edges.begin(), edges.end(), x);
        std::size_t b = static_cast<std::size_t>(it - edges.begin());
        b = b == 0 ? 0 : b - 1;
        if (b >= bins) b = bins - 1;  // right edge closes the last bin
        counts[b] += 1.0;
    }
    const double n = static_cast<double>(samples.size());
    for (std::size_t b = 0; b < bins; ++b) counts[b] /= n * (edges[b + 1] - edges[b]);
    return counts;
}

std::vector<double> freedman_diaconis_edges(std::span<const double> samples, std::size_t min_bins) {
    if (samples.empty()) throw std::invalid_argument("freedman_diaconis_edges: no samples");
    if (min_bins == 0) throw std::invalid_argument("freedman_diaconis_edges: min_bins must be positive");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(s.size() - 1);
        const auto i = static_cast<std::size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(i);
        return i + 1 < s.size() ? s[i] + frac * (s[i + 1] - s[i]) : s[i];
    };
    double lo = s.front();
    double hi = s.back();
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double iqr = quantile(0.75) - quantile(0.25);
    const double width = 2.0 * iqr / std::cbrt(static_cast<double>(s.size()));
    std::size_t bins = min_bins;
    if (width > 0.0) bins = std::max(min_bins, static_cast<std::size_t>(std::ceil((hi - lo) / width)));
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    }
    edges.back() = hi;
    return edges;
}

std::vector<double> log_det_values(std::span<const double> eigenvalues, std::size_t rx, double gamma) {
    if (rx == 0 || eigenvalues.size() % rx != 0) throw DimensionError("log_det_values: bad eigenvalue layout");
    const std::size_t trials = eigenvalues.size() / rx;
    std::vector<double> out(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        double s = 0.0;
        for (std::size_t i = 0; i < rx; ++i) s += std::log1p(gamma * std::max(0.0, eigenvalues[t * rx + i]));
        out[t] = s;
    }
    return out;
}

namespace {

MCEstimate mi_impl(const ChannelSpec& spec, double gamma, std::size_t trials, std::uint64_t seed, bool parallel) {
    if (trials < 2) throw std::invalid_argument("empirical_mutual_information: trials must be >= 2");
    if (!(gamma >= 0.0)) throw std::invalid_argument("empirical_mutual_information: gamma must be >= 0");
    const std::vector<double> ev = eigenvalues_impl(spec, trials, seed, parallel);
    return summarize(log_det_values(ev, spec.rx(), gamma), seed);
}

}  // namespace

MCEstimate empirical_mutual_information(const ChannelSpec& spec, double gamma, std::size_t trials,
                                        std::uint64_t seed) {
    return mi_impl(spec, gamma, trials, seed, true);
}

MCEstimate empirical_mutual_information_serial(const ChannelSpec& spec, double gamma, std::size_t trials,
                                               std::uint64_t seed) {
    return mi_impl(spec, gamma, trials, seed, false);
}

std::vector<MCEstimate> empirical_mutual_information_sweep(const ChannelSpec& spec, const std::vector<double>& gammas,
                                                           std::size_t trials, std::uint64_t seed) {
    if (trials < 2) throw std::invalid_argument("empirical_mutual_information: trials must be >= 2");
    const std::vector<double> ev = empirical_eigenvalues(spec, trials, seed);
    std::vector<MCEstimate> out;
    out.reserve(gammas.size());
    for (double g : gammas) {
        if (!(g >= 0.0)) throw std::invalid_argument("empirical_mutual_information: gamma must be >= 0");
        out.push_back(summarize(log_det_values(ev, spec.rx(), g), seed));
    }
    return out;
}

const char* to_string(CorrelationMap m) {
    switch (m) {
        case CorrelationMap::Eta: return "eta";
        case CorrelationMap::EtaTilde: return "eta_tilde";
        case CorrelationMap::Zeta: return "zeta";
        case CorrelationMap::ZetaTilde: return "zeta_tilde";
    }
    return "unknown";
}

CMatrix empirical_covariance(const ChannelSpec& spec, CorrelationMap which, std::size_t k, const CMatrix& p,
                             std::size_t trials, std::uint64_t seed) {
    return covariance_impl(spec, which, k, p, trials, seed, true);
}

CMatrix empirical_covariance_serial(const ChannelSpec& spec, CorrelationMap which, std::size_t k, const CMatrix& p,
                                    std::size_t trials, std::uint64_t seed) {
    return covariance_impl(spec, which, k, p, trials, seed, false);
}

CMatrix analytic_covariance(const ChannelSpec& spec, CorrelationMap which, std::size_t k, const CMatrix& p) {
    switch (which) {
        case CorrelationMap::Eta: return eta(spec.link_g(k), p);
        case CorrelationMap::EtaTilde: return eta_tilde(spec.link_g(k), p);
        case CorrelationMap::Zeta: return zeta(spec.link_f(k), p);
        case CorrelationMap::ZetaTilde: return zeta_tilde(spec.link_f(k), p);
    }
    throw std::invalid_argument("unknown correlation map");
}

}  // namespace rismi
