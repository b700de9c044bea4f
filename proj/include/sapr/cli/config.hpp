#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sapr/error.hpp"

namespace sapr::cli {

inline constexpr int kSchemaVersion = 1;

enum class Command { measure, collide, probe_dim, mra_sim, sweep };

std::string_view to_string(Command command);
Command parse_command(std::string_view text);

struct Diagnostic {
  std::size_t line = 0;  // 1-based line in the config text; 0 when the value came from a preset/default
  std::string field;     // JSON pointer, e.g. /parameters/prior/latent_dim
  std::string message;

  std::string format(const std::string& source) const;
};

class ConfigError : public Error {
public:
  explicit ConfigError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
  std::vector<Diagnostic> diagnostics_;
};

struct ExperimentConfig {
  Command command = Command::measure;
  std::string preset;               // empty when none
  nlohmann::json parameters;        // defaults <- preset <- user, fully validated
  std::filesystem::path output_dir;
  std::filesystem::path base_dir;   // relative paths in parameters resolve against this
  std::string source_text;          // raw config bytes, hashed into provenance
  nlohmann::json echo;              // the config exactly as given
};

/// Built-in defaults for a command's parameters; every tunable knob appears here.
const nlohmann::json& default_parameters(Command command);

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

} // namespace sapr::cli
