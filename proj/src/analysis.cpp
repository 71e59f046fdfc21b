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

#include "rismi/analysis.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace rismi {

namespace {

struct Rule {
    std::vector<double> x;  // on [-1, 1]
    std::vector<double> w;
};

template <unsigned N>
Rule make_rule() {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    Rule r;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) {
            r.x.push_back(0.0);
            r.w.push_back(w[i]);
            continue;
        }
        r.x.push_back(-a[i]);
        r.w.push_back(w[i]);
        r.x.push_back(a[i]);
        r.w.push_back(w[i]);
    }
    return r;
}

const Rule& rule16() {
    static const Rule r = make_rule<16>();
    return r;
}

const Rule& rule8() {
    static const Rule r = make_rule<8>();
    return r;
}

double map_node(double x, double a, double b) { return 0.5 * (b - a) * x + 0.5 * (a + b); }

std::vector<double> densities_at(const ChannelSpec& spec, const std::vector<double>& t, double eps,
                                 const SolverOptions& opts, std::vector<bool>& ok, std::size_t& iterations) {
    std::vector<cplx> pts;
    pts.reserve(t.size());
    for (double x : t) pts.emplace_back(x, eps);
    std::vector<SolverState> states = sweep(spec, pts, opts);
    for (const SolverState& s : states) iterations += s.iterations;
    // A chain head is a cold start; deep in the bulk with a tiny epsilon that
    // can stall. Retry such points, in order, from a converged neighbour.
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (states[i].converged()) continue;
        for (std::size_t j : {i - 1, i + 1}) {
            if (j >= t.size() || !states[j].converged()) continue;  // i - 1 wraps at i = 0
            SolverState retry = solve_fixed_point(spec, pts[i], &states[j], opts);
            iterations += retry.iterations;
            if (retry.converged()) {
                states[i] = std::move(retry);
                break;
            }
        }
    }
    std::vector<double> f(t.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!states[i].converged()) {
            ok[i] = false;
            continue;
        }
        f[i] = -cauchy_trace(states[i]).imag() / std::numbers::pi;
    }
    return f;
}

}  // namespace

double default_epsilon(const ChannelSpec& spec) { return 1e-4 * support_edge_estimate(spec); }

double trapezoid(const std::vector<double>& x, const std::vector<double>& y, const std::vector<bool>* valid) {
    if (x.size() != y.size()) throw std::invalid_argument("trapezoid: size mismatch");
    double sum = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (valid != nullptr && (!(*valid)[i] || !(*valid)[i - 1])) continue;
        sum += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    }
    return sum;
}

SpectralResult spectral_density(const ChannelSpec& spec, const std::vector<double>& t_grid, double epsilon,
                                const SolverOptions& opts, bool richardson) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("spectral_density: epsilon must be positive");
    if (t_grid.empty()) throw std::invalid_argument("spectral_density: empty grid");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0.0) || (i > 0 && !(t_grid[i] > t_grid[i - 1]))) {
            throw std::invalid_argument("spectral_density: grid must be nonnegative and strictly ascending");
        }
    }
    SpectralResult out;
    out.t = t_grid;
    out.epsilon = epsilon;
    out.richardson = richardson;
    out.valid.assign(t_grid.size(), true);
    out.density = densities_at(spec, t_grid, epsilon, opts, out.valid, out.iterations);
    if (richardson) {
        const std::vector<double> half = densities_at(spec, t_grid, 0.5 * epsilon, opts, out.valid, out.iterations);
        for (std::size_t i = 0; i < t_grid.size(); ++i) {
            out.density[i] = 2.0 * half[i] - out.density[i];
        }
    }
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!out.valid[i]) {
            out.density[i] = std::numeric_limits<double>::quiet_NaN();
            ++out.failures;
        }
    }
    out.mass = trapezoid(out.t, out.density, &out.valid);
    return out;
}

// ---- mutual information -------------------------------------------------------

MutualInformation::MutualInformation(const ChannelSpec& spec, SolverOptions opts, QuadratureOptions q)
    : spec_(&spec), opts_(opts), q_(q) {
    opts_.validate();
    if (q_.panel_split == 0) throw std::invalid_argument("panel_split must be positive");
    const double edge = support_edge_estimate(spec);
    t0_ = edge > 0.0 ? 1.0 / edge : 1.0;
    // real negative points need no imaginary shift
    opts_.epsilon_imag = 0.0;
}

std::vector<MutualInformation::Panel> MutualInformation::panels(double gamma) const {
    std::vector<Panel> coarse;
    double a = 0.0;
    double b = t0_;
    while (a < gamma) {
        coarse.push_back({a, std::min(b, gamma)});
        a = b;
        b = 2.0 * b;
    }
    std::vector<Panel> out;
    for (const Panel& p : coarse) {
        const double h = (p.b - p.a) / static_cast<double>(q_.panel_split);
        for (std::size_t j = 0; j < q_.panel_split; ++j) {
            const double lo = p.a + h * static_cast<double>(j);
            const double hi = (j + 1 == q_.panel_split) ? p.b : lo + h;
            out.push_back({lo, hi});
        }
    }
    return out;
}

void MutualInformation::fill(const std::vector<double>& nodes) {
    std::vector<double> todo;
    for (double t : nodes) {
        if (!cache_.count(t) && !failed_.count(t)) todo.push_back(t);
    }
    if (todo.empty()) return;
    std::sort(todo.begin(), todo.end());
    todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
    std::vector<cplx> pts;
    pts.reserve(todo.size());
    for (double t : todo) pts.emplace_back(-1.0 / t, 0.0);
    const std::vector<SolverState> states = sweep(*spec_, pts, opts_);
    solves_ += todo.size();
    for (std::size_t i = 0; i < todo.size(); ++i) {
        const double t = todo[i];
        if (!states[i].converged()) {
            failed_[t] = std::string(to_string(states[i].status)) + ": " + states[i].message;
            continue;
        }
        const double g = cauchy_trace(states[i]).real();
        cache_[t] = (1.0 + g / t) / t;
    }
}

double MutualInformation::integrand(double t) {
    if (!(t > 0.0)) throw std::invalid_argument("integrand: t must be positive");
    fill({t});
    auto it = cache_.find(t);
    if (it == cache_.end()) throw std::runtime_error("solver failed at t = " + std::to_string(t));
    return it->second;
}

MIResult MutualInformation::operator()(double gamma) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("mutual_information: gamma must be >= 0");
    MIResult out;
    out.gamma = gamma;
    if (gamma == 0.0) return out;

    const std::vector<Panel> ps = panels(gamma);
    std::vector<double> nodes;
    for (const Panel& p : ps) {
        for (double x : rule16().x) nodes.push_back(map_node(x, p.a, p.b));
        if (q_.error_estimate) {
            for (double x : rule8().x) nodes.push_back(map_node(x, p.a, p.b));
        }
    }
    fill(nodes);

    const double r = static_cast<double>(spec_->rx());
    double total = 0.0;
    double err = 0.0;
    for (const Panel& p : ps) {
        auto integrate = [&](const Rule& rule, bool& ok) {
            double s = 0.0;
            for (std::size_t i = 0; i < rule.x.size(); ++i) {
                const double t = map_node(rule.x[i], p.a, p.b);
                auto it = cache_.find(t);
                if (it == cache_.end()) {
                    ok = false;
                    if (out.message.empty()) {
                        out.message = "solver failed at t = " + std::to_string(t) + " (" + failed_[t] + ")";
                    }
                    continue;
                }
                s += rule.w[i] * it->second;
            }
            return 0.5 * (p.b - p.a) * s;
        };
        bool ok = true;
        const double i16 = integrate(rule16(), ok);
        total += i16;
        if (q_.error_estimate) {
            const double i8 = integrate(rule8(), ok);
            err += std::abs(i16 - i8);
        }
        if (!ok) out.ok = false;
    }
    out.value = r * total;
    out.quadrature_error_estimate = r * err;
    if (!out.ok) out.value = std::numeric_limits<double>::quiet_NaN();
    return out;
}

std::vector<MIResult> MutualInformation::sweep_db(const std::vector<double>& gammas_db) {
    for (std::size_t i = 1; i < gammas_db.size(); ++i) {
        if (!(gammas_db[i] > gammas_db[i - 1])) {
            throw std::invalid_argument("mutual_information_sweep: dB grid must be strictly ascending");
        }
    }
    // collect every node first so the whole set is one warm-started sweep
    std::vector<double> nodes;
    for (double db : gammas_db) {
        const double g = db_to_linear(db);
        for (const Panel& p : panels(g)) {
            for (double x : rule16().x) nodes.push_back(map_node(x, p.a, p.b));
            if (q_.error_estimate) {
                for (double x : rule8().x) nodes.push_back(map_node(x, p.a, p.b));
            }
        }
    }
    fill(nodes);
    std::vector<MIResult> out;
    out.reserve(gammas_db.size());
    for (double db : gammas_db) out.push_back((*this)(db_to_linear(db)));
    return out;
}

MIResult mutual_information(const ChannelSpec& spec, double gamma, const SolverOptions& opts,
                            const QuadratureOptions& q) {
    MutualInformation mi(spec, opts, q);
    return mi(gamma);
}

std::vector<MIResult> mutual_information_sweep(const ChannelSpec& spec, const std::vector<double>& gammas_db,
                                               const SolverOptions& opts, const QuadratureOptions& q) {
    MutualInformation mi(spec, opts, q);
    return mi.sweep_db(gammas_db);
}

double high_snr_slope(std::size_t tx, std::size_t rx) {
    if (tx == 0 || rx == 0) throw std::invalid_argument("high_snr_slope: antenna counts must be positive");
    return static_cast<double>(std::min(tx, rx)) / (10.0 * std::log10(std::numbers::e));
}

double db_to_linear(double db) {
    if (std::isinf(db) && db < 0.0) return 0.0;
    return std::pow(10.0, db / 10.0);
}

double linear_to_db(double x) { return 10.0 * std::log10(x); }

double deviation_from_law(MutualInformation& mi, double x_db, double anchor_db, double slope) {
    const MIResult at = mi(db_to_linear(x_db));
    const MIResult anchor = mi(db_to_linear(anchor_db));
    if (!at.ok || !anchor.ok) throw std::runtime_error("deviation_from_law: " + at.message + anchor.message);
    const double law = anchor.value + slope * (x_db - anchor_db);
    return std::abs(at.value - law) / at.value;
}

DeviationResult deviation_snr(const ChannelSpec& spec, double threshold, const SolverOptions& opts, double lo_db,
                              double hi_db, double resolution_db) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("deviation_snr: threshold must lie in (0, 1)");
    if (!(hi_db > lo_db) || !(resolution_db > 0.0)) throw std::invalid_argument("deviation_snr: bad search range");
    MutualInformation mi(spec, opts, QuadratureOptions{1, false});
    const double slope = high_snr_slope(spec.tx(), spec.rx());
    DeviationResult out;
    const MIResult anchor = mi(db_to_linear(hi_db));
    if (!anchor.ok) throw std::runtime_error("deviation_snr: " + anchor.message);
    out.intercept_nats = anchor.value;
    auto dev = [&](double x) {
        ++out.evaluations;
        return deviation_from_law(mi, x, hi_db, slope);
    };
    if (dev(lo_db) < threshold) {
        return out;
    }
    // dev(lo) >= threshold, dev(hi) = 0 < threshold
    double lo = lo_db;
    double hi = hi_db;
    while (hi - lo > resolution_db) {
        const double mid = 0.5 * (lo + hi);
        if (dev(mid) >= threshold) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    out.found = true;
    out.snr_db = lo;
    return out;
}

double mutual_information_from_density(const SpectralResult& density, double gamma, std::size_t rx) {
    std::vector<double> y(density.t.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = std::log1p(gamma * density.t[i]) * density.density[i];
    }
    return static_cast<double>(rx) * trapezoid(density.t, y, &density.valid);
}

}  // namespace rismi
