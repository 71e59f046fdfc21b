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

// Acceptance suite. One criterion per invocation (or "all"); each prints a
// single "PASS <name>: ..." or "FAIL <name>: ..." line and the process exits
// nonzero if any criterion failed. Runtime limits are part of the criteria.
//
//   rismi_acceptance fig3_mutual_information

#include "oracle.hpp"
#include "rismi/analysis.hpp"
#include "rismi/linalg.hpp"
#include "rismi/montecarlo.hpp"
#include "rismi/presets.hpp"
#include "rismi/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

using namespace rismi;

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [violated: " << what << "]";
        }
    }
};

using Check = std::function<void(Verdict&)>;

struct Criterion {
    const char* name;
    double limit_s;
    Check run;
};

// ---- 1: block inversion identities -------------------------------------------

void block_identities(Verdict& v) {
    std::mt19937_64 rng(101);
    double w1 = 0.0, w2 = 0.0, w3 = 0.0;
    for (int i = 0; i < 200; ++i) {
        const Eigen::Index n = 2 + i % 12, m = 1 + i % 6;
        const CMatrix a = oracle::well_conditioned(rng, n), d = oracle::well_conditioned(rng, m);
        const CMatrix b = oracle::gaussian(rng, n, m, 0.3), c = oracle::gaussian(rng, m, n, 0.3);
        w1 = std::max(w1, oracle::rel_err(woodbury_inverse(a, b, d, c), oracle::lu_inverse(a + b * d * c)));
    }
    for (int i = 0; i < 200; ++i) {
        const Eigen::Index p = 1 + i % 8, q = 1 + (i / 8) % 7;
        const Block2x2 x{oracle::well_conditioned(rng, p), oracle::gaussian(rng, p, q, 0.3),
                         oracle::gaussian(rng, q, p, 0.3), oracle::well_conditioned(rng, q)};
        w2 = std::max(w2, oracle::rel_err(block2x2_inverse(x).assemble(), oracle::lu_inverse(x.assemble())));
    }
    for (int i = 0; i < 200; ++i) {
        const Eigen::Index a = 1 + i % 5, b = 1 + (i / 5) % 5, c = 1 + (i / 25) % 5;
        auto off = [&](Eigen::Index r, Eigen::Index s) { return oracle::gaussian(rng, r, s, 0.3); };
        const Block3x3 x{oracle::well_conditioned(rng, a), off(a, b), off(a, c),
                         off(b, a), oracle::well_conditioned(rng, b), off(b, c),
                         off(c, a), off(c, b), oracle::well_conditioned(rng, c)};
        w3 = std::max(w3, oracle::rel_err(block3x3_inverse(x).assemble(), oracle::lu_inverse(x.assemble())));
    }
    v.detail << "max rel Frobenius error woodbury " << w1 << ", 2x2 " << w2 << ", 3x3 " << w3;
    v.require(w1 <= 1e-10 && w2 <= 1e-10 && w3 <= 1e-10, "all <= 1e-10");
}

// ---- 2: deterministic channel ------------------------------------------------

ChannelRecipe deterministic_recipe(std::size_t k) {
    ChannelRecipe r;
    r.tx_upa = {2, 2};
    r.rx_upa = {2, 3};
    r.seed = 202;
    r.direct.profile.kind = ProfileKind::Zeros;
    for (std::size_t i = 0; i < k; ++i) {
        r.ris_upa.push_back({2, 2});
        r.rho.push_back(0.8 - 0.3 * double(i));
        LinkRecipe l;
        l.profile.kind = ProfileKind::Zeros;
        r.ris_f.push_back(l);
        r.ris_g.push_back(l);
    }
    return r;
}

void deterministic_oracle(Verdict& v) {
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_g = 0.0, worst_mi = 0.0;
    std::size_t unconverged = 0;
    for (std::size_t k : {0u, 2u}) {
        const ChannelSpec spec = build_channel(deterministic_recipe(k));
        v.require(spec.deterministic(), "zero profiles");
        CMatrix h = spec.link_f(0).specular;
        for (std::size_t i = 1; i <= k; ++i) h += std::sqrt(spec.link_g(i).rho) * spec.link_g(i).specular * spec.link_f(i).specular;
        const CMatrix b = h * h.adjoint();
        const double edge = b.trace().real();
        for (int i = 0; i < 20; ++i) {
            const cplx z = i < 10 ? cplx(edge * (1.2 * u(rng) - 0.1), 0.01 + edge * u(rng)) : cplx(-edge * (0.01 + u(rng)), 0.0);
            const SolverState s = solve_fixed_point(spec, z, nullptr, SolverOptions{});
            if (!s.converged()) ++unconverged;
            worst_g = std::max(worst_g, std::abs(cauchy_B(spec, s) - oracle::resolvent_trace(b, z)));
        }
        for (double gamma : {1.0, 10.0, 100.0}) {
            const MIResult m = mutual_information(spec, gamma, SolverOptions{});
            const double ref = oracle::log_det(h, gamma);
            worst_mi = std::max(worst_mi, std::abs(m.value - ref) / ref);
            if (!m.ok) ++unconverged;
        }
    }
    v.detail << "K in {0,2}: max |G_B - resolvent trace| " << worst_g << " over 40 points, max rel MI error "
             << worst_mi;
    v.require(unconverged == 0, "every solve converges");
    v.require(worst_g <= 1e-9, "|dG| <= 1e-9");
    v.require(worst_mi <= 1e-8, "MI rel <= 1e-8");
}

// ---- 3: Marchenko-Pastur -----------------------------------------------------

void marchenko_pastur(Verdict& v) {
    const ChannelSpec spec = build_channel(marchenko_pastur_recipe(64));
    std::vector<double> t;
    for (int i = 0; i < 50; ++i) t.push_back(0.05 + 3.9 * i / 49.0);
    const SpectralResult r = spectral_density(spec, t, 1e-4, SolverOptions{});
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) worst = std::max(worst, std::abs(r.density[i] - oracle::mp_density(t[i])));

    // mass over the whole support, denser toward the 1/sqrt(t) singularity at 0
    std::vector<double> full;
    for (int i = 0; i <= 400; ++i) full.push_back(4.2 * std::pow(i / 400.0, 2));
    const SpectralResult m = spectral_density(spec, full, 1e-4, SolverOptions{});
    v.detail << "max |f - f_MP| " << worst << " on 50 points, mass " << m.mass;
    v.require(r.failures == 0 && m.failures == 0, "no failed points");
    v.require(worst <= 1e-2, "max error <= 1e-2");
    v.require(m.mass >= 0.995 && m.mass <= 1.005, "mass in [0.995, 1.005]");
}

// ---- 4: dense RIS density vs histogram ---------------------------------------

/// CDF of the piecewise-linear interpolant of (t, f).
struct LinearCdf {
    std::vector<double> t, f, c;

    LinearCdf(std::vector<double> x, std::vector<double> y) : t(std::move(x)), f(std::move(y)), c{0.0} {
        for (std::size_t i = 1; i < t.size(); ++i) c.push_back(c.back() + 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]));
    }

    double operator()(double x) const {
        if (x <= t.front()) return 0.0;
        if (x >= t.back()) return c.back();
        const std::size_t i = std::size_t(std::upper_bound(t.begin(), t.end(), x) - t.begin()) - 1;
        const double h = x - t[i];
        const double fx = f[i] + (f[i + 1] - f[i]) * h / (t[i + 1] - t[i]);
        return c[i] + 0.5 * h * (f[i] + fx);
    }
};

void fig2_density(Verdict& v) {
    double last_top = 0.0;
    bool monotone = true;
    for (std::size_t k : {0u, 1u, 2u, 4u}) {
        const ChannelSpec spec = build_channel(dense_ris_recipe(k, 2026));
        const std::vector<double> ev = empirical_eigenvalues(spec, 1000, 11);
        const double edge = support_edge_estimate(spec);
        const double x = 1.1 * std::max(*std::max_element(ev.begin(), ev.end()), edge);
        // geometric near 0 (hard edge), quadratic elsewhere
        std::vector<double> grid{0.0};
        for (int i = 0; i < 30; ++i) grid.push_back(x * 1e-7 * std::pow(1e5, i / 30.0));
        for (int i = 1; i <= 300; ++i) {
            const double s = 0.1 + 0.9 * i / 300.0;
            grid.push_back(x * s * s);
        }
        std::sort(grid.begin(), grid.end());
        const SpectralResult r = spectral_density(spec, grid, 1e-6 * edge, SolverOptions{});
        const LinearCdf cdf(r.t, r.density);
        const auto edges = freedman_diaconis_edges(ev);
        const auto hist = empirical_density(ev, edges);
        double l1 = 0.0;
        for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
            l1 += std::abs(hist[b] * (edges[b + 1] - edges[b]) - (cdf(edges[b + 1]) - cdf(edges[b])));
        }
        l1 += std::abs(1.0 - (cdf(edges.back()) - cdf(edges.front())));
        double top = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (r.density[i] > 1e-4) top = grid[i];
        }
        v.detail << "K=" << k << " L1 " << l1 << " top " << top << "; ";
        v.require(r.failures == 0, "K=" + std::to_string(k) + " no failed points");
        v.require(l1 <= 0.05, "K=" + std::to_string(k) + " L1 <= 0.05");
        if (top < last_top) monotone = false;
        last_top = top;
    }
    v.require(monotone, "max support point nondecreasing in K");
}

// ---- 5: six-panel mutual information ------------------------------------------

void fig3_mutual_information(Verdict& v) {
    const std::vector<double> db{0.0, 10.0, 20.0, 30.0};
    std::vector<double> lin;
    for (double d : db) lin.push_back(db_to_linear(d));
    std::vector<double> dev;
    double worst = 0.0;
    for (double kappa : {1.0, 10.0, 100.0}) {
        const ChannelSpec spec = build_channel(six_panel_recipe(8, kappa, 2026));
        const auto asy = mutual_information_sweep(spec, db, SolverOptions{});
        const auto mc = empirical_mutual_information_sweep(spec, lin, 10000, 99);
        for (std::size_t i = 0; i < db.size(); ++i) {
            const double diff = std::abs(asy[i].value - mc[i].mean);
            const double tol = std::max(0.02 * mc[i].mean, 3.0 * mc[i].std_error);
            worst = std::max(worst, diff / tol);
            v.require(asy[i].ok, "asymptotic MI converged");
            v.require(diff <= tol, "kappa=" + fmt(kappa) + " " + fmt(db[i]) + " dB within tolerance");
        }
        const DeviationResult d = deviation_snr(spec, 0.05, SolverOptions{});
        v.require(d.found, "deviation SNR found");
        dev.push_back(d.snr_db);
    }
    v.detail << "worst |I - MC| / tolerance " << worst << "; deviation_snr(5%) " << dev[0] << " / " << dev[1] << " / "
             << dev[2] << " dB";
    v.require(dev[1] - dev[0] >= 3.0 && dev[2] - dev[1] >= 3.0, "increasing in kappa with >= 3 dB spacing");
}

// ---- 6: high-SNR slope --------------------------------------------------------

void high_snr_slope_check(Verdict& v) {
    for (std::size_t n : {4u, 8u}) {
        const ChannelSpec spec = build_channel(six_panel_recipe(n, 1.0, 2026));
        const auto mi = mutual_information_sweep(spec, {35.0, 40.0}, SolverOptions{});
        const double slope = (mi[1].value - mi[0].value) / 5.0;
        const double law = double(n) / (10.0 * std::log10(std::exp(1.0)));
        const double rel = slope / law - 1.0;
        v.detail << "T=R=" << n << " slope " << slope << " vs " << law << " (" << 100.0 * rel << "%); ";
        v.require(mi[0].ok && mi[1].ok, "converged");
        v.require(std::abs(rel) <= 0.05, "within 5%");
    }
}

// ---- 7: Rician factor and RIS count trends ------------------------------------

void fig4_fig5_trends(Verdict& v) {
    const std::vector<double> kappas{1, 2, 5, 10, 20, 50, 100};
    double last_rel = std::numeric_limits<double>::infinity();
    v.detail << "relative degradation over kappa 1..100:";
    for (std::size_t k : {0u, 1u, 2u, 4u}) {
        std::vector<double> i10;
        for (double kap : kappas) {
            const MIResult m = mutual_information(build_channel(kappa_sweep_recipe(k, kap, 2026)), 10.0, SolverOptions{});
            v.require(m.ok, "converged");
            i10.push_back(m.value);
        }
        bool dec = true;
        for (std::size_t i = 1; i < i10.size(); ++i) dec = dec && i10[i] < i10[i - 1];
        v.require(dec, "K=" + std::to_string(k) + " decreasing in kappa");
        const double rel = (i10.front() - i10.back()) / i10.front();
        v.detail << " K=" << k << " " << rel;
        v.require(rel < last_rel, "degradation shrinks with K");
        last_rel = rel;
    }

    // restricted-angle geometry, averaged over eight seeded drawings
    std::vector<double> avg(11, 0.0);
    for (std::uint64_t seed = 1001; seed <= 1008; ++seed) {
        for (std::size_t k = 0; k <= 10; ++k) {
            const MIResult m = mutual_information(build_channel(narrow_angle_recipe(k, seed)), 10.0, SolverOptions{});
            v.require(m.ok, "converged");
            avg[k] += m.value / 8.0;
        }
    }
    std::vector<double> diff;
    for (std::size_t k = 1; k <= 10; ++k) diff.push_back(avg[k] - avg[k - 1]);
    const double before = std::accumulate(diff.begin(), diff.begin() + 5, 0.0) / 5.0;
    const double after = std::accumulate(diff.begin() + 5, diff.end(), 0.0) / 5.0;
    v.detail << "; I(K) " << avg.front() << " .. " << avg.back() << ", mean increment K<=5 " << before << ", K>5 "
             << after;
    v.require(*std::min_element(diff.begin(), diff.end()) >= 0.0, "nondecreasing in K");
    v.require(*std::max_element(diff.begin() + 5, diff.end()) < before, "every increment after K=5 below the early mean");
    v.require(after < before, "mean increment shrinks after K=5");
}

// ---- 8: covariance identity ---------------------------------------------------

ChannelRecipe covariance_recipe() {
    ChannelRecipe r;
    r.tx_upa = {2, 4};
    r.rx_upa = {2, 4};
    r.seed = 808;
    r.direct.profile.kind = ProfileKind::Uniform;
    r.direct.rx_basis.kind = BasisKind::Haar;
    r.direct.tx_basis.kind = BasisKind::Haar;
    for (int i = 0; i < 2; ++i) {
        r.ris_upa.push_back({2, 4});
        r.rho.push_back(0.7);
        r.ris_f.push_back(r.direct);
        r.ris_g.push_back(r.direct);
    }
    return r;
}

void covariance_identity(Verdict& v) {
    const ChannelSpec spec = build_channel(covariance_recipe());
    std::mt19937_64 rng(88);
    auto param = [&](Eigen::Index n) {
        const CMatrix a = oracle::gaussian(rng, n, n);
        return CMatrix(a * a.adjoint() / double(n) + CMatrix::Identity(n, n));
    };
    double worst = 0.0;
    int checks = 0;
    auto one = [&](CorrelationMap m, std::size_t k, Eigen::Index n) {
        const CMatrix p = param(n);
        const double e = relative_frobenius_error(empirical_covariance(spec, m, k, p, 10000, 8),
                                                  analytic_covariance(spec, m, k, p));
        worst = std::max(worst, e);
        ++checks;
    };
    for (std::size_t k = 0; k <= 2; ++k) {
        one(CorrelationMap::Zeta, k, spec.link_f(k).rows());
        one(CorrelationMap::ZetaTilde, k, Eigen::Index(spec.tx()));
    }
    for (std::size_t k = 1; k <= 2; ++k) {
        one(CorrelationMap::Eta, k, Eigen::Index(spec.rx()));
        one(CorrelationMap::EtaTilde, k, spec.link_g(k).elements());
    }
    v.detail << checks << " map/link pairs, worst rel Frobenius error " << worst;
    v.require(checks == 10, "all links covered");
    v.require(worst <= 0.05, "<= 5%");
}

// ---- 9: Herglotz and consistency ----------------------------------------------

void herglotz_consistency(Verdict& v) {
    const ChannelSpec spec = build_channel(six_panel_recipe(4, 1.0, 2026));
    SolverOptions opts;
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double edge = support_edge_estimate(spec);

    double max_im = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 50; ++i) {
        const cplx z(edge * (1.4 * u(rng) - 0.2), std::pow(10.0, -3.0 + 4.0 * u(rng)));
        const SolverState s = solve_fixed_point(spec, z, nullptr, opts);
        v.require(s.converged(), "converged on C+");
        max_im = std::max(max_im, cauchy_B(spec, s).imag());
    }
    v.require(max_im < 0.0, "Im G_B < 0 on C+");

    // z G(z) - 1 = m1 / z + O(z^-2), m1 = (1/R) E tr H H^H
    const double m1 = mean_gram(spec).trace().real() / double(spec.rx());
    double dev_big = 0.0, moment_err = 0.0;
    for (double r : {1e3, 1e5}) {
        const cplx z = r * std::exp(cplx(0.0, 1.0));
        const SolverState s = solve_fixed_point(spec, z, nullptr, opts);
        const cplx zg = z * cauchy_B(spec, s);
        dev_big = std::abs(zg - 1.0);
        moment_err = std::abs((zg - 1.0) * z - m1) / m1;
    }
    v.require(dev_big < 1e-3, "|z G - 1| -> 0");
    v.require(moment_err < 1e-2, "first moment from the 1/z tail");

    // density route against the Shannon-transform route
    std::vector<double> grid{0.0};
    for (int i = 0; i < 30; ++i) grid.push_back(1.1 * edge * 1e-7 * std::pow(1e5, i / 30.0));
    for (int i = 1; i <= 400; ++i) grid.push_back(1.1 * edge * std::pow(0.1 + 0.9 * i / 400.0, 2));
    std::sort(grid.begin(), grid.end());
    const SpectralResult d = spectral_density(spec, grid, 1e-6 * edge, opts);
    double worst_route = 0.0;
    for (double db : {0.0, 10.0, 20.0}) {
        const double g = db_to_linear(db);
        const double a = mutual_information_from_density(d, g, spec.rx());
        const double b = mutual_information(spec, g, opts).value;
        worst_route = std::max(worst_route, std::abs(a - b) / b);
    }
    v.require(d.failures == 0, "density converged");
    v.require(worst_route <= 0.01, "density vs Shannon route <= 1%");

    // the same points swept in opposite orders
    std::vector<cplx> pts;
    for (int i = 0; i < 60; ++i) pts.emplace_back(-std::pow(10.0, -3.0 + 0.1 * i), 0.0);
    for (int i = 0; i < 20; ++i) pts.emplace_back(edge * i / 20.0, 0.05 * edge);
    const auto fwd = sweep(spec, pts, opts);
    const auto bwd = sweep(spec, std::vector<cplx>(pts.rbegin(), pts.rend()), opts);
    double path = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        v.require(fwd[i].converged() && bwd[pts.size() - 1 - i].converged(), "sweeps converge");
        path = std::max(path, std::abs(cauchy_B(spec, fwd[i]) - cauchy_B(spec, bwd[pts.size() - 1 - i])));
    }
    v.require(path <= 1e-8, "path independence <= 1e-8");
    v.detail << "max Im G_B " << max_im << ", |zG-1| at |z|=1e5 " << dev_big << ", tail moment err " << moment_err
             << ", density vs Shannon " << 100.0 * worst_route << "%, forward/backward " << path;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {"block_identities", 10.0, block_identities},
        {"deterministic_oracle", 30.0, deterministic_oracle},
        {"marchenko_pastur", 120.0, marchenko_pastur},
        {"fig2_density", 900.0, fig2_density},
        {"fig3_mutual_information", 600.0, fig3_mutual_information},
        {"high_snr_slope", 300.0, high_snr_slope_check},
        {"fig4_fig5_trends", 900.0, fig4_fig5_trends},
        {"covariance_identity", 120.0, covariance_identity},
        {"herglotz_consistency", 300.0, herglotz_consistency},
    };
    const std::string want = argc > 1 ? argv[1] : "all";
    int failed = 0, ran = 0;
    for (const Criterion& c : all) {
        if (want != "all" && want != c.name) continue;
        ++ran;
        Verdict v;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(v);
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        v.require(secs < c.limit_s, "runtime < " + fmt(c.limit_s) + " s");
        std::printf("%s %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", c.name, v.detail.str().c_str(), secs);
        std::fflush(stdout);
        if (!v.pass) ++failed;
    }
    if (ran == 0) {
        std::fprintf(stderr, "unknown criterion '%s'\n", want.c_str());
        return 2;
    }
    return failed == 0 ? 0 : 1;
}
