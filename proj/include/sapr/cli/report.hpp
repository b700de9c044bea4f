#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sapr/cli/config.hpp"

namespace sapr::cli {

/// Locale-independent shortest round-trip formatting.
std::string format_number(double value);

struct Table {
  std::string name;  // file stem
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
};

struct RunReport {
  nlohmann::json config_echo;
  std::vector<Table> tables;
  nlohmann::json summary = nlohmann::json::object();
  nlohmann::json flags = nlohmann::json::object();  // non-convergence, saturation, ...
  nlohmann::json provenance = nlohmann::json::object();
};

/// git-style content hash: sha1("blob <size>\0" + text).
std::string git_blob_sha1(const std::string& text);

RunReport run(const ExperimentConfig& config, int threads = 1);

/// Writes <name>.csv per table and report.json; returns the files written.
std::vector<std::filesystem::path> write_report(const RunReport& report,
                                                const std::filesystem::path& output_dir);

} // namespace sapr::cli
