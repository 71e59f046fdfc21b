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

// Config-driven experiments: JSON config -> jobs -> CSV files + manifest.
// The key schema is documented in README.md.

#pragma once

#include "rismi/analysis.hpp"
#include "rismi/montecarlo.hpp"
#include "rismi/presets.hpp"
#include "rismi/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rismi {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitParse = 2, kExitValidation = 3, kExitNumerical = 4 };

class ConfigParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigValidationError : public std::runtime_error {
public:
    explicit ConfigValidationError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

enum class Mode { Density, MiSweep, McCompare, CovarianceCheck };

const char* to_string(Mode m);

struct DensitySettings {
    std::vector<double> t_grid;
    std::optional<double> epsilon;  ///< absolute; otherwise relative * support edge
    double epsilon_relative = 1e-4;
    bool richardson = false;
};

struct ExperimentConfig {
    std::string name = "experiment";
    Mode mode = Mode::Density;
    ChannelRecipe channel;
    std::vector<double> kappa_values;     ///< empty: the recipe's own factors
    std::vector<std::size_t> ris_counts;  ///< empty: the recipe's own K
    DensitySettings density;
    std::vector<double> gamma_db;  ///< may hold -inf (gamma = 0)
    SolverOptions solver;
    std::size_t mc_trials = 0;
    std::uint64_t mc_seed = 1;
    std::filesystem::path output_dir = "out";
    nlohmann::json resolved;  ///< normalized echo for the manifest
};

/// Reads and parses JSON; throws ConfigParseError.
nlohmann::json load_config_document(const std::filesystem::path& path);

/// Every schema violation, empty when valid. base_dir resolves sidecar files.
std::vector<std::string> validate_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Throws ConfigValidationError listing every violation.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

struct RunOptions {
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::uint64_t> seed_override;  ///< replaces channel and Monte Carlo seeds
    int threads = 0;                             ///< recorded in the manifest
};

struct RunReport {
    int exit_code = kExitOk;
    std::string reason;  ///< one line, empty on success
    std::vector<std::filesystem::path> outputs;
};

/// Runs every job of a parsed config, writes CSVs and manifest.json.
RunReport run_experiment(const ExperimentConfig& config, const RunOptions& opts,
                         const std::filesystem::path& config_path = {});

/// load + parse + run, mapping errors to exit codes.
RunReport run_config_file(const std::filesystem::path& path, const RunOptions& opts);

/// Fixed 12-significant-digit, locale-independent number formatting.
std::string format_number(double x);

}  // namespace rismi
