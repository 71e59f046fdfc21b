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

// rismi: run or validate a JSON experiment config.
//
//   rismi run configs/mp_density.json --output-dir out --threads 4
//   rismi validate configs/fig3_mi_sweep.json
//
// Failures print exactly one line on stderr:
//   rismi: exit=<code> kind=<parse|validation|numerical> reason=<text>

#include "rismi/experiment.hpp"

#include <CLI11.hpp>
#include <omp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <iostream>
#include <string>

namespace {

const char* kind_of(int code) {
    switch (code) {
        case rismi::kExitParse: return "parse";
        case rismi::kExitValidation: return "validation";
        case rismi::kExitNumerical: return "numerical";
        default: return "error";
    }
}

int fail(int code, const std::string& reason) {
    std::string oneline = reason;
    for (char& c : oneline) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    std::fprintf(stderr, "rismi: exit=%d kind=%s reason=%s\n", code, kind_of(code), oneline.c_str());
    return code;
}

int do_validate(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = rismi::load_config_document(path);
    } catch (const rismi::ConfigParseError& e) {
        return fail(rismi::kExitParse, e.what());
    }
    const auto violations = rismi::validate_config(doc, std::filesystem::path(path).parent_path());
    for (const auto& v : violations) std::cout << v << '\n';
    if (!violations.empty()) {
        return fail(rismi::kExitValidation, std::to_string(violations.size()) + " violation(s); first: " +
                                                violations.front());
    }
    return rismi::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asymptotic spectra and mutual information of multi-RIS MIMO channels"};
    app.set_version_flag("--version", rismi::kToolVersion);
    app.require_subcommand(1);

    std::string output_dir;
    int threads = 0;
    std::uint64_t seed_override = 0;
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, critical or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

    std::string config;
    auto* run = app.add_subcommand("run", "Run every job of a config and write CSVs plus manifest.json");
    run->add_option("config", config, "JSON config file")->required();
    auto* out_opt = run->add_option("--output-dir", output_dir, "Overrides output.directory");
    run->add_option("--threads", threads, "Caps OpenMP workers (0 = runtime default)")
        ->check(CLI::NonNegativeNumber);
    auto* seed_opt = run->add_option("--seed-override", seed_override, "Replaces channel and Monte Carlo seeds");

    auto* validate = app.add_subcommand("validate", "List schema violations without running");
    validate->add_option("config", config, "JSON config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // usage errors are not config errors; keep CLI11's own codes
        return app.exit(e);
    }

    auto logger = spdlog::stderr_color_mt("rismi");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::from_str(log_level));

    if (validate->parsed()) return do_validate(config);

    if (threads > 0) omp_set_num_threads(threads);
    rismi::RunOptions opts;
    opts.threads = threads > 0 ? threads : omp_get_max_threads();
    if (*out_opt) opts.output_dir = output_dir;
    if (*seed_opt) opts.seed_override = seed_override;

    rismi::RunReport report;
    try {
        report = rismi::run_config_file(config, opts);
    } catch (const std::exception& e) {
        return fail(rismi::kExitNumerical, e.what());
    }
    if (report.exit_code != rismi::kExitOk) return fail(report.exit_code, report.reason);
    for (const auto& p : report.outputs) spdlog::info("wrote {}", p.string());
    return rismi::kExitOk;
}
