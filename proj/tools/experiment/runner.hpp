#pragma once
// Run orchestration: stages, artifacts, manifests.

#include "config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace pqlab::experiment {

enum ExitCode : int { Success = 0, ConfigFailure = 2, NumericFailure = 3 };

struct RunOptions {
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol_el;
    int threads = 1;
    std::ostream* progress = nullptr;
};

struct Artifact {
    std::string path; // relative to the output directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct StageRecord {
    std::string name;
    std::string status; // ok, failed, skipped, not_converged
    double seconds = 0.0;
    std::string message;
};

struct RunManifest {
    std::string verb;
    std::string config_hash;
    nlohmann::json config;
    std::vector<StageRecord> stages;
    std::vector<Artifact> artifacts;
    nlohmann::json versions;
    nlohmann::json summary;

    bool ok() const;
    nlohmann::json to_json() const;
};

/// Hex SHA-256 of a byte string or of a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Applies command-line overrides to a parsed config.
ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& opt);

/// hypotheses -> ladder -> solves -> certificates -> scans -> penalty. Writes manifest.json last.
RunManifest run(const ExperimentConfig& cfg, const RunOptions& opt);

/// Solves at every size, then integrability and V-field scans on the shared ball.
RunManifest refinement_sweep(const ExperimentConfig& cfg, const RunOptions& opt);

/// Prints stage statuses and re-verifies artifact hashes. Returns an exit code.
int report(const std::filesystem::path& manifest, std::ostream& os);

} // namespace pqlab::experiment
