#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhc/labels.hpp"

namespace mhc::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Invalid configuration or flags; reported with exit code 2 and the offending field path.
class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

struct RunManifest {
    std::string run_id;
    std::string timestamp;  // UTC, ISO 8601
    std::string subcommand;
    nlohmann::json config = nlohmann::json::object();  // effective config after flag overrides
    std::map<std::string, std::string> input_hashes;   // path -> sha256
    std::map<std::string, std::uint64_t> seeds;
    std::vector<std::string> artifacts;  // relative to the run directory
    std::string tool_version = kToolVersion;
    std::string status = "running";  // running | completed | failed
    bool nondeterministic = false;
    std::string error;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

/// A fresh directory `<root>/run-<timestamp>-<subcommand>[-N]`; an existing directory is never reused.
class RunDirectory {
public:
    static RunDirectory create(const std::filesystem::path& root, const std::string& subcommand,
                               const nlohmann::json& config);

    const std::filesystem::path& path() const { return path_; }
    RunManifest& manifest() { return manifest_; }
    const RunManifest& manifest() const { return manifest_; }

    /// Hashes a file, or every regular file below a directory.
    void record_input(const std::filesystem::path& input);
    /// Registers an artifact written below the run directory (relative path).
    std::filesystem::path artifact(const std::string& relative);
    void write_manifest() const;
    /// Marks the run completed (or failed) after checking that every listed artifact exists.
    void finalize(bool success, const std::string& error = {});

private:
    std::filesystem::path path_;
    RunManifest manifest_;
};

std::string sha256_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string usage();

/// Entry point shared by the `mhc` executable and the tests. `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mhc::cli
