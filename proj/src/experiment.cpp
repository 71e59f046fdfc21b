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

#include "rismi/experiment.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace rismi {

namespace fs = std::filesystem;
using nlohmann::json;

ConfigValidationError::ConfigValidationError(std::vector<std::string> violations)
    : std::runtime_error(violations.empty() ? "invalid config" : violations.front()),
      violations_(std::move(violations)) {}

const char* to_string(Mode m) {
    switch (m) {
        case Mode::Density: return "density";
        case Mode::MiSweep: return "mi_sweep";
        case Mode::McCompare: return "mc_compare";
        case Mode::CovarianceCheck: return "covariance_check";
    }
    return "unknown";
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

json load_config_document(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigParseError("cannot open " + path.string());
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigParseError(e.what());
    }
}

// ---- schema parsing -----------------------------------------------------------

namespace {

constexpr double kUnitaryTol = 1e-12;

class Parser {
public:
    explicit Parser(fs::path base) : base_(std::move(base)) {}

    std::vector<std::string> errors;

    void fail(const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); }

    void allow(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
        if (!obj.is_object()) return;
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& item : obj.items()) {
            if (!ok.count(item.key())) fail(join(path, item.key()), "unknown key");
        }
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

    bool object(const json& j, const std::string& path) {
        if (!j.is_object()) {
            fail(path, "expected an object");
            return false;
        }
        return true;
    }

    std::optional<double> number(const json& obj, const char* key, const std::string& path) {
        if (!obj.contains(key)) return std::nullopt;
        const json& v = obj.at(key);
        if (!v.is_number()) {
            fail(join(path, key), "expected a number");
            return std::nullopt;
        }
        const double x = v.get<double>();
        if (!std::isfinite(x)) {
            fail(join(path, key), "must be finite");
            return std::nullopt;
        }
        return x;
    }

    std::optional<std::uint64_t> count(const json& obj, const char* key, const std::string& path) {
        if (!obj.contains(key)) return std::nullopt;
        const json& v = obj.at(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
            fail(join(path, key), "expected a nonnegative integer");
            return std::nullopt;
        }
        return v.get<std::uint64_t>();
    }

    std::optional<bool> boolean(const json& obj, const char* key, const std::string& path) {
        if (!obj.contains(key)) return std::nullopt;
        const json& v = obj.at(key);
        if (!v.is_boolean()) {
            fail(join(path, key), "expected true or false");
            return std::nullopt;
        }
        return v.get<bool>();
    }

    std::optional<std::string> string(const json& obj, const char* key, const std::string& path) {
        if (!obj.contains(key)) return std::nullopt;
        const json& v = obj.at(key);
        if (!v.is_string()) {
            fail(join(path, key), "expected a string");
            return std::nullopt;
        }
        return v.get<std::string>();
    }

    std::optional<std::vector<double>> numbers(const json& v, const std::string& path, bool allow_neg_inf = false) {
        if (!v.is_array()) {
            fail(path, "expected an array of numbers");
            return std::nullopt;
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const json& e = v[i];
            if (allow_neg_inf && e.is_string() && e.get<std::string>() == "-inf") {
                out.push_back(-std::numeric_limits<double>::infinity());
                continue;
            }
            if (!e.is_number() || !std::isfinite(e.get<double>())) {
                fail(path + "[" + std::to_string(i) + "]", "expected a finite number");
                return std::nullopt;
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::optional<RMatrix> real_matrix(const json& v, const std::string& path) {
        if (!v.is_array() || v.empty() || !v[0].is_array() || v[0].empty()) {
            fail(path, "expected a nonempty array of rows");
            return std::nullopt;
        }
        const auto rows = static_cast<Eigen::Index>(v.size());
        const auto cols = static_cast<Eigen::Index>(v[0].size());
        RMatrix m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const json& row = v[static_cast<std::size_t>(i)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
                fail(path, "rows must all have " + std::to_string(cols) + " entries");
                return std::nullopt;
            }
            for (Eigen::Index j = 0; j < cols; ++j) {
                const json& e = row[static_cast<std::size_t>(j)];
                if (!e.is_number() || !std::isfinite(e.get<double>())) {
                    fail(path, "entries must be finite numbers");
                    return std::nullopt;
                }
                m(i, j) = e.get<double>();
            }
        }
        return m;
    }

    std::optional<RMatrix> csv_matrix(const std::string& file, const std::string& path) {
        const fs::path p = fs::path(file).is_absolute() ? fs::path(file) : base_ / file;
        std::ifstream in(p);
        if (!in) {
            fail(path, "cannot open sidecar file " + p.string());
            return std::nullopt;
        }
        std::vector<std::vector<double>> rows;
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            std::vector<double> row;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) {
                double x = 0.0;
                const char* b = cell.data();
                while (*b == ' ') ++b;
                const auto res = std::from_chars(b, cell.data() + cell.size(), x);
                if (res.ec != std::errc() || !std::isfinite(x)) {
                    fail(path, "non-numeric entry '" + cell + "' in " + p.string());
                    return std::nullopt;
                }
                row.push_back(x);
            }
            if (!rows.empty() && row.size() != rows.front().size()) {
                fail(path, "ragged rows in " + p.string());
                return std::nullopt;
            }
            rows.push_back(std::move(row));
        }
        if (rows.empty()) {
            fail(path, "empty sidecar file " + p.string());
            return std::nullopt;
        }
        RMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < rows[i].size(); ++j) {
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
            }
        }
        return m;
    }

    std::optional<UpaShape> upa(const json& obj, const char* key, const std::string& path, bool required) {
        if (!obj.contains(key)) {
            if (required) fail(join(path, key), "missing");
            return std::nullopt;
        }
        const json& v = obj.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer() ||
            v[0].get<std::int64_t>() < 1 || v[1].get<std::int64_t>() < 1) {
            fail(join(path, key), "expected [M, N] with positive integers");
            return std::nullopt;
        }
        return UpaShape{v[0].get<std::size_t>(), v[1].get<std::size_t>()};
    }

    const fs::path& base() const { return base_; }

private:
    fs::path base_;
};

void parse_angles(Parser& ps, const json& obj, const char* key, const std::string& path, AngleRange& out) {
    if (!obj.contains(key)) return;
    const json& a = obj.at(key);
    const std::string p = Parser::join(path, key);
    if (!ps.object(a, p)) return;
    ps.allow(a, p, {"azimuth", "elevation"});
    auto range = [&](const char* name, double& lo, double& hi) {
        if (!a.contains(name)) {
            ps.fail(Parser::join(p, name), "missing");
            return;
        }
        const json& v = a.at(name);
        if (v.is_number()) {
            lo = hi = v.get<double>();
        } else if (auto r = ps.numbers(v, Parser::join(p, name)); r && r->size() == 2 && (*r)[0] <= (*r)[1]) {
            lo = (*r)[0];
            hi = (*r)[1];
        } else if (r) {
            ps.fail(Parser::join(p, name), "expected a number or [lo, hi] with lo <= hi (radians)");
        }
    };
    range("azimuth", out.az_lo, out.az_hi);
    range("elevation", out.el_lo, out.el_hi);
}

void parse_basis(Parser& ps, const json& obj, const char* key, const std::string& path, BasisRecipe& out,
                 Eigen::Index n) {
    if (!obj.contains(key)) return;
    const json& b = obj.at(key);
    const std::string p = Parser::join(path, key);
    if (!ps.object(b, p)) return;
    ps.allow(b, p, {"kind", "real", "imag"});
    const std::string kind = ps.string(b, "kind", p).value_or("identity");
    if (kind == "identity") {
        out.kind = BasisKind::Identity;
    } else if (kind == "haar") {
        out.kind = BasisKind::Haar;
    } else if (kind == "explicit") {
        out.kind = BasisKind::Explicit;
        if (!b.contains("real")) {
            ps.fail(Parser::join(p, "real"), "missing for an explicit basis");
            return;
        }
        auto re = ps.real_matrix(b.at("real"), Parser::join(p, "real"));
        std::optional<RMatrix> im;
        if (b.contains("imag")) im = ps.real_matrix(b.at("imag"), Parser::join(p, "imag"));
        if (!re) return;
        if (re->rows() != n || re->cols() != n) {
            ps.fail(p, "must be " + std::to_string(n) + " x " + std::to_string(n));
            return;
        }
        CMatrix m = re->cast<cplx>();
        if (im) {
            if (im->rows() != n || im->cols() != n) {
                ps.fail(Parser::join(p, "imag"), "must match the real part's shape");
                return;
            }
            m += cplx(0.0, 1.0) * im->cast<cplx>();
        }
        const double dev = (m.adjoint() * m - CMatrix::Identity(n, n)).norm();
        if (!(dev <= kUnitaryTol)) {
            std::ostringstream os;
            os << "not unitary: ||U^H U - I||_F = " << dev << " exceeds the tolerance " << kUnitaryTol;
            ps.fail(p, os.str());
            return;
        }
        out.matrix = std::move(m);
    } else {
        ps.fail(Parser::join(p, "kind"), "expected identity, haar or explicit");
    }
}

void parse_profile(Parser& ps, const json& obj, const std::string& path, ProfileRecipe& out, Eigen::Index rows,
                   Eigen::Index cols) {
    if (!obj.contains("profile")) return;
    const json& pr = obj.at("profile");
    const std::string p = Parser::join(path, "profile");
    if (!ps.object(pr, p)) return;
    ps.allow(pr, p, {"kind", "lo", "hi", "normalize", "values", "path"});
    const std::string kind = ps.string(pr, "kind", p).value_or("ones");
    if (kind == "ones") {
        out.kind = ProfileKind::Ones;
    } else if (kind == "zeros") {
        out.kind = ProfileKind::Zeros;
    } else if (kind == "uniform") {
        out.kind = ProfileKind::Uniform;
        out.lo = ps.number(pr, "lo", p).value_or(0.0);
        out.hi = ps.number(pr, "hi", p).value_or(1.0);
        out.normalize = ps.boolean(pr, "normalize", p).value_or(true);
        if (!(out.lo >= 0.0 && out.hi > out.lo)) ps.fail(p, "uniform bounds must satisfy 0 <= lo < hi");
    } else if (kind == "values" || kind == "csv") {
        out.kind = ProfileKind::Values;
        std::optional<RMatrix> m;
        if (kind == "values") {
            if (!pr.contains("values")) {
                ps.fail(Parser::join(p, "values"), "missing");
                return;
            }
            m = ps.real_matrix(pr.at("values"), Parser::join(p, "values"));
        } else {
            const auto file = ps.string(pr, "path", p);
            if (!file) {
                ps.fail(Parser::join(p, "path"), "missing");
                return;
            }
            m = ps.csv_matrix(*file, Parser::join(p, "path"));
        }
        if (!m) return;
        if (m->rows() != rows || m->cols() != cols) {
            ps.fail(p, "must be " + std::to_string(rows) + " x " + std::to_string(cols));
            return;
        }
        if ((m->array() < 0.0).any()) {
            ps.fail(p, "entries must be nonnegative");
            return;
        }
        out.values = std::move(*m);
    } else {
        ps.fail(Parser::join(p, "kind"), "expected ones, zeros, uniform, values or csv");
    }
}

/// rx x tx: the link's (rows, cols); rx_n, tx_n: eigenbasis sizes.
void parse_link(Parser& ps, const json& obj, const std::string& path, LinkRecipe& out, Eigen::Index rows,
                Eigen::Index cols, bool g_link) {
    if (!ps.object(obj, path)) return;
    if (g_link) {
        ps.allow(obj, path, {"kappa", "profile", "rx_basis", "tx_basis", "departure", "arrival", "phases"});
    } else {
        ps.allow(obj, path, {"kappa", "profile", "rx_basis", "tx_basis", "departure", "arrival"});
    }
    if (auto k = ps.number(obj, "kappa", path)) {
        if (*k < 0.0) ps.fail(Parser::join(path, "kappa"), "Rician factor must be >= 0");
        out.kappa = *k;
    }
    parse_profile(ps, obj, path, out.profile, rows, cols);
    parse_basis(ps, obj, "rx_basis", path, out.rx_basis, rows);
    parse_basis(ps, obj, "tx_basis", path, out.tx_basis, cols);
    parse_angles(ps, obj, "departure", path, out.departure);
    parse_angles(ps, obj, "arrival", path, out.arrival);
    if (g_link && obj.contains("phases")) {
        if (auto ph = ps.numbers(obj.at("phases"), Parser::join(path, "phases"))) {
            if (static_cast<Eigen::Index>(ph->size()) != cols) {
                ps.fail(Parser::join(path, "phases"), "need one phase per RIS element (" + std::to_string(cols) + ")");
            } else {
                out.phases = *ph;
            }
        }
    }
}

void parse_channel(Parser& ps, const json& ch, ChannelRecipe& out) {
    const std::string path = "channel";
    if (!ps.object(ch, path)) return;
    if (ch.contains("preset")) {
        ps.allow(ch, path, {"preset", "n", "ris_count", "kappa", "seed"});
        const std::string preset = ps.string(ch, "preset", path).value_or("");
        const std::uint64_t seed = ps.count(ch, "seed", path).value_or(1);
        const std::size_t k = ps.count(ch, "ris_count", path).value_or(0);
        const double kappa = ps.number(ch, "kappa", path).value_or(1.0);
        const std::size_t n = ps.count(ch, "n", path).value_or(0);
        if (kappa < 0.0) ps.fail(Parser::join(path, "kappa"), "Rician factor must be >= 0");
        if (preset == "marchenko_pastur") {
            if (n == 0) ps.fail(Parser::join(path, "n"), "required and positive");
            out = marchenko_pastur_recipe(std::max<std::size_t>(n, 1));
        } else if (preset == "dense_ris") {
            out = dense_ris_recipe(k, seed);
            if (ch.contains("kappa")) out = with_kappa(out, kappa);
        } else if (preset == "six_panel") {
            if (n == 0) ps.fail(Parser::join(path, "n"), "required and positive");
            out = six_panel_recipe(std::max<std::size_t>(n, 1), kappa, seed);
        } else if (preset == "kappa_sweep") {
            out = kappa_sweep_recipe(k, kappa, seed);
        } else if (preset == "narrow_angle") {
            out = narrow_angle_recipe(k, seed);
            if (ch.contains("kappa")) out = with_kappa(out, kappa);
        } else {
            ps.fail(Parser::join(path, "preset"),
                    "expected marchenko_pastur, dense_ris, six_panel, kappa_sweep or narrow_angle");
        }
        return;
    }

    ps.allow(ch, path, {"tx_upa", "rx_upa", "seed", "convention", "random_phases", "direct", "ris"});
    const auto tx = ps.upa(ch, "tx_upa", path, true);
    const auto rx = ps.upa(ch, "rx_upa", path, true);
    if (!tx || !rx) return;
    out = ChannelRecipe{};
    out.tx_upa = *tx;
    out.rx_upa = *rx;
    out.seed = ps.count(ch, "seed", path).value_or(1);
    out.random_phases = ps.boolean(ch, "random_phases", path).value_or(false);
    const std::string conv = ps.string(ch, "convention", path).value_or("fixed_total");
    if (conv == "fixed_total") {
        out.convention = PowerConvention::FixedTotal;
    } else if (conv == "specular_only") {
        out.convention = PowerConvention::SpecularOnly;
    } else {
        ps.fail(Parser::join(path, "convention"), "expected fixed_total or specular_only");
    }
    const auto t = static_cast<Eigen::Index>(tx->count());
    const auto r = static_cast<Eigen::Index>(rx->count());
    if (ch.contains("direct")) {
        parse_link(ps, ch.at("direct"), "channel.direct", out.direct, r, t, false);
    } else {
        ps.fail("channel.direct", "missing");
    }
    if (!ch.contains("ris")) return;
    const json& ris = ch.at("ris");
    if (!ris.is_array()) {
        ps.fail("channel.ris", "expected an array of panels");
        return;
    }
    for (std::size_t i = 0; i < ris.size(); ++i) {
        const std::string p = "channel.ris[" + std::to_string(i) + "]";
        const json& panel = ris[i];
        if (!ps.object(panel, p)) continue;
        ps.allow(panel, p, {"upa", "rho", "f", "g"});
        const auto shape = ps.upa(panel, "upa", p, true);
        const double rho = ps.number(panel, "rho", p).value_or(1.0);
        if (!(rho > 0.0 && rho <= 1.0)) ps.fail(Parser::join(p, "rho"), "must lie in (0, 1]");
        if (!shape) continue;
        const auto l = static_cast<Eigen::Index>(shape->count());
        LinkRecipe f, g;
        if (panel.contains("f")) {
            parse_link(ps, panel.at("f"), Parser::join(p, "f"), f, l, t, false);
        } else {
            ps.fail(Parser::join(p, "f"), "missing");
        }
        if (panel.contains("g")) {
            parse_link(ps, panel.at("g"), Parser::join(p, "g"), g, r, l, true);
        } else {
            ps.fail(Parser::join(p, "g"), "missing");
        }
        out.ris_upa.push_back(*shape);
        out.rho.push_back(rho);
        out.ris_f.push_back(std::move(f));
        out.ris_g.push_back(std::move(g));
    }
}

std::optional<std::vector<double>> parse_grid(Parser& ps, const json& v, const std::string& path,
                                              bool allow_neg_inf) {
    if (v.is_array()) return ps.numbers(v, path, allow_neg_inf);
    if (!ps.object(v, path)) return std::nullopt;
    ps.allow(v, path, {"start", "stop", "count", "spacing"});
    const auto start = ps.number(v, "start", path);
    const auto stop = ps.number(v, "stop", path);
    const auto n = ps.count(v, "count", path);
    const std::string spacing = ps.string(v, "spacing", path).value_or("linear");
    if (!start || !stop || !n) {
        ps.fail(path, "a range needs start, stop and count");
        return std::nullopt;
    }
    if (*n < 1 || (*n == 1 && *start != *stop) || !(*stop >= *start)) {
        ps.fail(path, "need stop >= start and count >= 1 (count 1 only when start == stop)");
        return std::nullopt;
    }
    std::vector<double> g(*n);
    for (std::size_t i = 0; i < *n; ++i) {
        const double u = *n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(*n - 1);
        if (spacing == "linear") {
            g[i] = *start + (*stop - *start) * u;
        } else if (spacing == "quadratic") {
            // denser near start
            g[i] = *start + (*stop - *start) * u * u;
        } else if (spacing == "geometric") {
            if (!(*start > 0.0)) {
                ps.fail(path, "geometric spacing needs start > 0");
                return std::nullopt;
            }
            g[i] = *start * std::pow(*stop / *start, u);
        } else {
            ps.fail(Parser::join(path, "spacing"), "expected linear, quadratic or geometric");
            return std::nullopt;
        }
    }
    return g;
}

bool strictly_ascending(const std::vector<double>& g) {
    for (std::size_t i = 1; i < g.size(); ++i) {
        if (!(g[i] > g[i - 1])) return false;
    }
    return true;
}

ExperimentConfig parse_into(Parser& ps, const json& doc) {
    ExperimentConfig cfg;
    if (!doc.is_object()) {
        ps.fail("(root)", "expected an object");
        return cfg;
    }
    ps.allow(doc, "", {"name", "mode", "channel", "kappa_values", "ris_counts", "t_grid", "density", "gamma_db",
                       "gamma", "solver", "mc", "output"});
    cfg.name = ps.string(doc, "name", "").value_or("experiment");
    if (cfg.name.empty() || cfg.name.find_first_of("/\\") != std::string::npos) {
        ps.fail("name", "must be a nonempty file-name stem");
    }

    const auto mode = ps.string(doc, "mode", "");
    if (!mode) {
        ps.fail("mode", "missing");
    } else if (*mode == "density") {
        cfg.mode = Mode::Density;
    } else if (*mode == "mi_sweep") {
        cfg.mode = Mode::MiSweep;
    } else if (*mode == "mc_compare") {
        cfg.mode = Mode::McCompare;
    } else if (*mode == "covariance_check") {
        cfg.mode = Mode::CovarianceCheck;
    } else {
        ps.fail("mode", "expected density, mi_sweep, mc_compare or covariance_check");
    }

    if (doc.contains("channel")) {
        parse_channel(ps, doc.at("channel"), cfg.channel);
    } else {
        ps.fail("channel", "missing");
    }

    if (doc.contains("kappa_values")) {
        if (auto k = ps.numbers(doc.at("kappa_values"), "kappa_values")) {
            if (k->empty()) ps.fail("kappa_values", "must not be empty");
            for (double x : *k) {
                if (x < 0.0) ps.fail("kappa_values", "Rician factors must be >= 0");
            }
            cfg.kappa_values = *k;
        }
    }
    if (doc.contains("ris_counts")) {
        const json& v = doc.at("ris_counts");
        if (!v.is_array() || v.empty()) {
            ps.fail("ris_counts", "expected a nonempty array of integers");
        } else {
            for (const json& e : v) {
                if (!e.is_number_integer() || e.get<std::int64_t>() < 0) {
                    ps.fail("ris_counts", "entries must be nonnegative integers");
                    break;
                }
                const auto k = e.get<std::size_t>();
                if (k > cfg.channel.ris_count()) {
                    ps.fail("ris_counts", "entry " + std::to_string(k) + " exceeds the channel's " +
                                              std::to_string(cfg.channel.ris_count()) + " panels");
                }
                cfg.ris_counts.push_back(k);
            }
        }
    }

    if (doc.contains("t_grid")) {
        if (auto g = parse_grid(ps, doc.at("t_grid"), "t_grid", false)) {
            if (g->empty()) ps.fail("t_grid", "must not be empty");
            if (!strictly_ascending(*g)) ps.fail("t_grid", "must be strictly ascending");
            if (!g->empty() && g->front() < 0.0) ps.fail("t_grid", "must be nonnegative");
            cfg.density.t_grid = *g;
        }
    }
    if (doc.contains("density")) {
        const json& d = doc.at("density");
        if (ps.object(d, "density")) {
            ps.allow(d, "density", {"epsilon", "epsilon_relative", "richardson"});
            if (auto e = ps.number(d, "epsilon", "density")) {
                if (!(*e > 0.0)) ps.fail("density.epsilon", "must be > 0");
                cfg.density.epsilon = *e;
            }
            if (auto e = ps.number(d, "epsilon_relative", "density")) {
                if (!(*e > 0.0)) ps.fail("density.epsilon_relative", "must be > 0");
                cfg.density.epsilon_relative = *e;
            }
            cfg.density.richardson = ps.boolean(d, "richardson", "density").value_or(false);
        }
    }
    if (doc.contains("gamma_db") && doc.contains("gamma")) {
        ps.fail("gamma", "give either gamma_db or gamma, not both");
    } else if (doc.contains("gamma_db")) {
        if (auto g = parse_grid(ps, doc.at("gamma_db"), "gamma_db", true)) {
            if (g->empty()) ps.fail("gamma_db", "must not be empty");
            if (!strictly_ascending(*g)) ps.fail("gamma_db", "must be strictly ascending");
            cfg.gamma_db = *g;
        }
    } else if (doc.contains("gamma")) {
        if (auto g = parse_grid(ps, doc.at("gamma"), "gamma", false)) {
            if (g->empty()) ps.fail("gamma", "must not be empty");
            if (!strictly_ascending(*g)) ps.fail("gamma", "must be strictly ascending");
            if (!g->empty() && g->front() < 0.0) ps.fail("gamma", "linear SNR must be >= 0");
            for (double x : *g) cfg.gamma_db.push_back(x == 0.0 ? -std::numeric_limits<double>::infinity()
                                                                : linear_to_db(x));
        }
    }

    if (doc.contains("solver")) {
        const json& s = doc.at("solver");
        if (ps.object(s, "solver")) {
            ps.allow(s, "solver", {"tolerance", "max_iterations", "damping", "epsilon_imag", "acceleration",
                                   "anderson_depth", "chain_length"});
            SolverOptions& o = cfg.solver;
            o.tolerance = ps.number(s, "tolerance", "solver").value_or(o.tolerance);
            o.max_iterations = ps.count(s, "max_iterations", "solver").value_or(o.max_iterations);
            o.damping = ps.number(s, "damping", "solver").value_or(o.damping);
            o.epsilon_imag = ps.number(s, "epsilon_imag", "solver").value_or(o.epsilon_imag);
            o.anderson_depth = ps.count(s, "anderson_depth", "solver").value_or(o.anderson_depth);
            o.chain_length = ps.count(s, "chain_length", "solver").value_or(o.chain_length);
            const std::string acc = ps.string(s, "acceleration", "solver").value_or("anderson");
            if (acc == "anderson") {
                o.acceleration = Acceleration::Anderson;
            } else if (acc == "none") {
                o.acceleration = Acceleration::None;
            } else {
                ps.fail("solver.acceleration", "expected anderson or none");
            }
            try {
                o.validate();
            } catch (const std::exception& e) {
                ps.fail("solver", e.what());
            }
        }
    }

    if (doc.contains("mc")) {
        const json& m = doc.at("mc");
        if (ps.object(m, "mc")) {
            ps.allow(m, "mc", {"trials", "seed"});
            cfg.mc_trials = ps.count(m, "trials", "mc").value_or(0);
            cfg.mc_seed = ps.count(m, "seed", "mc").value_or(1);
        }
    }

    if (doc.contains("output")) {
        const json& o = doc.at("output");
        if (ps.object(o, "output")) {
            ps.allow(o, "output", {"directory"});
            if (auto d = ps.string(o, "directory", "output")) cfg.output_dir = *d;
        }
    }

    // mode requirements
    switch (cfg.mode) {
        case Mode::Density:
            if (cfg.density.t_grid.empty() && !doc.contains("t_grid")) ps.fail("t_grid", "required for mode density");
            break;
        case Mode::MiSweep:
            if (cfg.gamma_db.empty() && !doc.contains("gamma_db") && !doc.contains("gamma")) {
                ps.fail("gamma_db", "required for mode mi_sweep");
            }
            break;
        case Mode::McCompare:
            if (!doc.contains("t_grid") && !doc.contains("gamma_db") && !doc.contains("gamma")) {
                ps.fail("t_grid", "mode mc_compare needs t_grid, gamma_db or both");
            }
            if (cfg.mc_trials < 2) ps.fail("mc.trials", "mode mc_compare needs at least 2 trials");
            break;
        case Mode::CovarianceCheck:
            if (cfg.mc_trials < 1) ps.fail("mc.trials", "mode covariance_check needs at least 1 trial");
            break;
    }
    if (cfg.mode == Mode::Density && cfg.mc_trials == 1) ps.fail("mc.trials", "use 0 (no histogram) or >= 2");

    if (ps.errors.empty()) {
        try {
            cfg.channel.validate();
        } catch (const std::exception& e) {
            ps.fail("channel", e.what());
        }
    }
    cfg.resolved = doc;
    return cfg;
}

}  // namespace

std::vector<std::string> validate_config(const json& doc, const fs::path& base_dir) {
    Parser ps(base_dir);
    const ExperimentConfig cfg = parse_into(ps, doc);
    if (ps.errors.empty()) {
        // building catches what only the assembled channel can tell
        try {
            (void)build_channel(cfg.channel);
        } catch (const std::exception& e) {
            ps.fail("channel", e.what());
        }
    }
    return ps.errors;
}

ExperimentConfig parse_config(const json& doc, const fs::path& base_dir) {
    Parser ps(base_dir);
    ExperimentConfig cfg = parse_into(ps, doc);
    if (!ps.errors.empty()) throw ConfigValidationError(ps.errors);
    return cfg;
}

// ---- running ------------------------------------------------------------------

namespace {

struct Job {
    std::string stem;
    ChannelRecipe recipe;
    std::optional<double> kappa;
    std::optional<std::size_t> ris_count;
};

std::string kappa_tag(double k) {
    std::string s = format_number(k);
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

std::vector<Job> expand_jobs(const ExperimentConfig& cfg) {
    std::vector<std::optional<std::size_t>> ks;
    if (cfg.ris_counts.empty()) {
        ks.push_back(std::nullopt);
    } else {
        for (std::size_t k : cfg.ris_counts) ks.emplace_back(k);
    }
    std::vector<std::optional<double>> kappas;
    if (cfg.kappa_values.empty()) {
        kappas.push_back(std::nullopt);
    } else {
        for (double k : cfg.kappa_values) kappas.emplace_back(k);
    }
    std::vector<Job> jobs;
    for (const auto& k : ks) {
        for (const auto& kap : kappas) {
            Job j;
            j.stem = cfg.name;
            j.recipe = cfg.channel;
            if (k) {
                j.recipe = with_ris_count(j.recipe, *k);
                j.stem += "_K" + std::to_string(*k);
            }
            if (kap) {
                j.recipe = with_kappa(j.recipe, *kap);
                j.stem += "_kappa" + kappa_tag(*kap);
            }
            j.kappa = kap;
            j.ris_count = k;
            jobs.push_back(std::move(j));
        }
    }
    return jobs;
}

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path), path_(path) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    const fs::path& path() const { return path_; }

private:
    std::ofstream out_;
    fs::path path_;
};

struct JobOutcome {
    bool ok = true;
    std::string reason;
    json summary = json::object();
};

double resolve_epsilon(const DensitySettings& d, const ChannelSpec& spec) {
    return d.epsilon ? *d.epsilon : d.epsilon_relative * support_edge_estimate(spec);
}

JobOutcome write_density(const ExperimentConfig& cfg, const ChannelSpec& spec, const fs::path& path,
                         std::vector<fs::path>& outputs) {
    JobOutcome res;
    const double eps = resolve_epsilon(cfg.density, spec);
    const SpectralResult sr = spectral_density(spec, cfg.density.t_grid, eps, cfg.solver, cfg.density.richardson);
    std::vector<double> edges, hist;
    if (cfg.mc_trials >= 2) {
        const std::vector<double> ev = empirical_eigenvalues(spec, cfg.mc_trials, cfg.mc_seed);
        edges = freedman_diaconis_edges(ev);
        hist = empirical_density(ev, edges);
    }
    CsvWriter csv(path, {"t", "f_asymptotic", "f_empirical", "epsilon"});
    for (std::size_t i = 0; i < sr.t.size(); ++i) {
        std::string emp;
        const double t = sr.t[i];
        if (!edges.empty() && t >= edges.front() && t <= edges.back()) {
            auto it = std::upper_bound(edges.begin(), edges.end(), t);
            std::size_t b = static_cast<std::size_t>(it - edges.begin());
            b = b == 0 ? 0 : std::min(b - 1, hist.size() - 1);
            emp = format_number(hist[b]);
        } else if (!edges.empty()) {
            emp = format_number(0.0);
        }
        csv.row({format_number(t), format_number(sr.density[i]), emp, format_number(eps)});
    }
    outputs.push_back(path);
    res.summary["epsilon"] = eps;
    res.summary["mass"] = sr.mass;
    res.summary["failed_points"] = sr.failures;
    res.summary["solver_iterations"] = sr.iterations;
    if (sr.failures > 0) {
        res.ok = false;
        res.reason = std::to_string(sr.failures) + " density point(s) failed to converge in " + path.filename().string();
    }
    return res;
}

struct MiRows {
    std::vector<MIResult> asym;
    std::vector<MCEstimate> mc;
};

JobOutcome write_mi(const ExperimentConfig& cfg, const ChannelSpec& spec, const fs::path& path,
                    std::vector<fs::path>& outputs, MiRows* keep = nullptr) {
    JobOutcome res;
    MutualInformation mi(spec, cfg.solver);
    const std::vector<MIResult> asym = mi.sweep_db(cfg.gamma_db);
    std::vector<MCEstimate> mc;
    if (cfg.mc_trials >= 2) {
        std::vector<double> gammas;
        for (double db : cfg.gamma_db) gammas.push_back(db_to_linear(db));
        mc = empirical_mutual_information_sweep(spec, gammas, cfg.mc_trials, cfg.mc_seed);
    }
    const double slope = high_snr_slope(spec.tx(), spec.rx());
    CsvWriter csv(path, {"gamma_db", "mi_asymptotic_nats", "mi_mc_mean", "mi_mc_stderr", "high_snr_slope_nats_per_db"});
    std::size_t failed = 0;
    for (std::size_t i = 0; i < asym.size(); ++i) {
        if (!asym[i].ok) ++failed;
        csv.row({format_number(cfg.gamma_db[i]), format_number(asym[i].value),
                 mc.empty() ? "" : format_number(mc[i].mean), mc.empty() ? "" : format_number(mc[i].std_error),
                 format_number(slope)});
    }
    outputs.push_back(path);
    double qerr = 0.0;
    for (const MIResult& r : asym) qerr = std::max(qerr, r.quadrature_error_estimate);
    res.summary["max_quadrature_error_estimate"] = qerr;
    res.summary["solves"] = mi.solves();
    if (failed > 0) {
        res.ok = false;
        res.reason = std::to_string(failed) + " SNR point(s) failed in " + path.filename().string();
        for (const MIResult& r : asym) {
            if (!r.ok) {
                res.reason += " (" + r.message + ")";
                break;
            }
        }
    }
    if (keep != nullptr) {
        keep->asym = asym;
        keep->mc = mc;
    }
    return res;
}

JobOutcome write_covariance(const ExperimentConfig& cfg, const ChannelSpec& spec, const fs::path& path,
                            std::vector<fs::path>& outputs) {
    JobOutcome res;
    CsvWriter csv(path, {"map", "link", "rel_frobenius_error"});
    // one seeded Hermitian PSD parameter per (map, link)
    auto parameter = [&](Eigen::Index n, std::uint64_t which, std::uint64_t k) {
        KeyedStream s(cfg.mc_seed, StreamTag::Statistics, {99, which, k});
        const CMatrix a = s.complex_normal_matrix(n, n, 1.0 / static_cast<double>(n));
        return CMatrix(a * a.adjoint() + CMatrix::Identity(n, n));
    };
    double worst = 0.0;
    auto check = [&](CorrelationMap m, std::size_t k, Eigen::Index n) {
        const CMatrix p = parameter(n, static_cast<std::uint64_t>(m), k);
        const CMatrix emp = empirical_covariance(spec, m, k, p, cfg.mc_trials, cfg.mc_seed);
        const CMatrix ana = analytic_covariance(spec, m, k, p);
        const double err = relative_frobenius_error(emp, ana);
        worst = std::max(worst, err);
        csv.row({to_string(m), std::to_string(k), format_number(err)});
    };
    const auto r = static_cast<Eigen::Index>(spec.rx());
    const auto t = static_cast<Eigen::Index>(spec.tx());
    for (std::size_t k = 0; k < spec.links_f().size(); ++k) {
        const RMatrix& prof = spec.link_f(k).profile;
        if (prof.size() == 0 || prof.maxCoeff() == 0.0) continue;  // deterministic link, nothing to sample
        check(CorrelationMap::Zeta, k, spec.link_f(k).rows());
        check(CorrelationMap::ZetaTilde, k, t);
    }
    for (std::size_t k = 1; k <= spec.ris_count(); ++k) {
        const RMatrix& prof = spec.link_g(k).profile;
        if (prof.size() == 0 || prof.maxCoeff() == 0.0) continue;
        check(CorrelationMap::Eta, k, r);
        check(CorrelationMap::EtaTilde, k, spec.link_g(k).elements());
    }
    outputs.push_back(path);
    res.summary["max_rel_frobenius_error"] = worst;
    return res;
}

JobOutcome write_compare(const ExperimentConfig& cfg, const MiRows& rows, const fs::path& path,
                         std::vector<fs::path>& outputs) {
    JobOutcome res;
    CsvWriter csv(path, {"gamma_db", "mi_asymptotic_nats", "mi_mc_mean", "mi_mc_stderr", "rel_diff", "within_tolerance"});
    std::size_t outside = 0;
    for (std::size_t i = 0; i < rows.asym.size(); ++i) {
        const double a = rows.asym[i].value;
        const MCEstimate& m = rows.mc[i];
        const double diff = std::abs(a - m.mean);
        const double rel = m.mean != 0.0 ? diff / std::abs(m.mean) : diff;
        const bool within = diff <= std::max(0.02 * std::abs(m.mean), 3.0 * m.std_error) || diff == 0.0;
        if (!within) ++outside;
        csv.row({format_number(cfg.gamma_db[i]), format_number(a), format_number(m.mean), format_number(m.std_error),
                 format_number(rel), within ? "1" : "0"});
    }
    outputs.push_back(path);
    res.summary["points_outside_tolerance"] = outside;
    return res;
}

std::string iso_time_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config, const RunOptions& opts, const fs::path& config_path) {
    ExperimentConfig cfg = config;
    if (opts.seed_override) {
        cfg.channel.seed = *opts.seed_override;
        cfg.mc_seed = *opts.seed_override;
    }
    if (opts.output_dir) cfg.output_dir = *opts.output_dir;

    RunReport report;
    const auto start = std::chrono::steady_clock::now();
    json manifest;
    manifest["tool"] = "rismi";
    manifest["version"] = kToolVersion;
    manifest["config_path"] = config_path.string();
    manifest["mode"] = to_string(cfg.mode);
    manifest["started_at"] = iso_time_now();
    manifest["resolved_config"] = cfg.resolved;
    manifest["seeds"] = {{"channel", cfg.channel.seed}, {"monte_carlo", cfg.mc_seed}};
    manifest["threads"] = opts.threads;
    manifest["jobs"] = json::array();

    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) {
        report.exit_code = kExitValidation;
        report.reason = "cannot create output directory " + cfg.output_dir.string() + ": " + ec.message();
        return report;
    }

    for (const Job& job : expand_jobs(cfg)) {
        spdlog::info("job {} ({})", job.stem, to_string(cfg.mode));
        json entry;
        entry["stem"] = job.stem;
        if (job.kappa) entry["kappa"] = *job.kappa;
        if (job.ris_count) entry["ris_count"] = *job.ris_count;
        const auto job_start = std::chrono::steady_clock::now();
        std::vector<JobOutcome> outcomes;
        try {
            const ChannelSpec spec = build_channel(job.recipe);
            entry["tx"] = spec.tx();
            entry["rx"] = spec.rx();
            entry["panels"] = spec.ris_count();
            const fs::path dir = cfg.output_dir;
            switch (cfg.mode) {
                case Mode::Density:
                    outcomes.push_back(write_density(cfg, spec, dir / (job.stem + ".csv"), report.outputs));
                    break;
                case Mode::MiSweep:
                    outcomes.push_back(write_mi(cfg, spec, dir / (job.stem + ".csv"), report.outputs));
                    break;
                case Mode::McCompare: {
                    if (!cfg.density.t_grid.empty()) {
                        outcomes.push_back(write_density(cfg, spec, dir / (job.stem + "_density.csv"), report.outputs));
                    }
                    if (!cfg.gamma_db.empty()) {
                        MiRows rows;
                        outcomes.push_back(write_mi(cfg, spec, dir / (job.stem + "_mi.csv"), report.outputs, &rows));
                        outcomes.push_back(write_compare(cfg, rows, dir / (job.stem + "_compare.csv"), report.outputs));
                    }
                    break;
                }
                case Mode::CovarianceCheck:
                    outcomes.push_back(write_covariance(cfg, spec, dir / (job.stem + ".csv"), report.outputs));
                    break;
            }
        } catch (const std::exception& e) {
            JobOutcome bad;
            bad.ok = false;
            bad.reason = job.stem + ": " + e.what();
            outcomes.push_back(bad);
        }
        entry["summary"] = json::array();
        bool ok = true;
        for (const JobOutcome& o : outcomes) {
            entry["summary"].push_back(o.summary);
            if (!o.ok) {
                ok = false;
                if (report.reason.empty()) report.reason = o.reason;
                spdlog::error("{}", o.reason);
            }
        }
        entry["status"] = ok ? "ok" : "failed";
        entry["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - job_start).count();
        manifest["jobs"].push_back(entry);
        if (!ok) report.exit_code = kExitNumerical;
    }

    manifest["outputs"] = json::array();
    for (const fs::path& p : report.outputs) manifest["outputs"].push_back(p.filename().string());
    manifest["status"] = report.exit_code == kExitOk ? "ok" : "failed";
    manifest["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const fs::path mpath = cfg.output_dir / "manifest.json";
    std::ofstream(mpath) << manifest.dump(2) << '\n';
    report.outputs.push_back(mpath);
    return report;
}

RunReport run_config_file(const fs::path& path, const RunOptions& opts) {
    RunReport report;
    json doc;
    try {
        doc = load_config_document(path);
    } catch (const ConfigParseError& e) {
        report.exit_code = kExitParse;
        report.reason = e.what();
        return report;
    }
    ExperimentConfig cfg;
    try {
        cfg = parse_config(doc, path.parent_path());
        (void)build_channel(cfg.channel);
    } catch (const ConfigValidationError& e) {
        report.exit_code = kExitValidation;
        report.reason = e.violations().front();
        if (e.violations().size() > 1) {
            report.reason += " (+" + std::to_string(e.violations().size() - 1) + " more)";
        }
        return report;
    } catch (const std::exception& e) {
        report.exit_code = kExitValidation;
        report.reason = std::string("channel: ") + e.what();
        return report;
    }
    return run_experiment(cfg, opts, path);
}

}  // namespace rismi
