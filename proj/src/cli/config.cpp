#include "sapr/cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "sapr/cli/presets.hpp"
#include "sapr/measurements.hpp"
#include "sapr/priors.hpp"

namespace sapr::cli {

using nlohmann::json;

std::string_view to_string(Command command) {
  switch (command) {
  case Command::measure: return "measure";
  case Command::collide: return "collide";
  case Command::probe_dim: return "probe-dim";
  case Command::mra_sim: return "mra-sim";
  case Command::sweep: return "sweep";
  }
  return "?";
}

Command parse_command(std::string_view text) {
  for (auto c : {Command::measure, Command::collide, Command::probe_dim, Command::mra_sim, Command::sweep})
    if (to_string(c) == text) return c;
  throw InvalidInput("unknown command '" + std::string(text) + "'");
}

std::string Diagnostic::format(const std::string& source) const {
  std::ostringstream os;
  os << source;
  if (line > 0) os << ':' << line;
  os << ": ";
  if (!field.empty()) os << field << ": ";
  os << message;
  return os.str();
}

namespace {

std::string join_messages(const std::vector<Diagnostic>& diags) {
  std::string out = "invalid configuration";
  for (const auto& d : diags) out += "\n  " + d.format("config");
  return out;
}

} // namespace

ConfigError::ConfigError(std::vector<Diagnostic> diagnostics)
    : Error(join_messages(diagnostics)), diagnostics_(std::move(diagnostics)) {}

const json& default_parameters(Command command) {
  static const json prior = {
      {"type", "relu"},          {"latent_dim", 2},         {"hidden", {6}},
      {"activation", "relu"},    {"slope", 0.01},           {"sparsity", 2},
      {"basis", "standard-basis"}, {"path", nullptr},       {"seed", 1}};
  static const json mixing = {
      {"source", "random"}, {"kind", "special-orthogonal"}, {"seed", 1}, {"matrix", nullptr}};

  static const json measure = {{"N", nullptr},
                               {"x", nullptr},
                               {"domain", "blocks"},
                               {"blocks", "power-spectrum"},
                               {"mixing", [] {
                                  json m = mixing;
                                  m["source"] = "identity";
                                  return m;
                                }()}};
  static const json collide = {{"N", 10},
                               {"blocks", "power-spectrum"},
                               {"prior", prior},
                               {"mixing", mixing},
                               {"mixings", 1},
                               {"restarts", 200},
                               {"max_iterations", 500},
                               {"residual_tol", 1e-8},
                               {"separation_tol", 1e-3},
                               {"penalty_weight", 100.0},
                               {"anchor", "none"},
                               {"seed", 1},
                               {"controls", false},
                               {"oracle_grid_points", 0}};
  static const json probe = {{"N", 8},
                             {"blocks", "power-spectrum"},
                             {"manifold", "general-linear"},
                             {"pairs", 20},
                             {"seed", 1},
                             {"max_restarts", 50},
                             {"max_newton_iterations", 200},
                             {"target_residual", 1e-13},
                             {"accept_residual", 1e-9},
                             {"rank_tol", 1e-6}};
  static const json mra = {{"mode", "sample-complexity"},
                           {"group", {{"kind", "cyclic"}, {"N", 8}, {"band_limit", 2}}},
                           {"prior", prior},
                           {"mixing", mixing},
                           {"signal", {{"latent_seed", 1}, {"norm", 0.5}, {"x", nullptr}}},
                           {"sigma_list", {0.5, 1.0, 2.0}},
                           {"seeds", 10},
                           {"seed", 1},
                           {"target_error", 0.1},
                           {"n_min", 1},
                           {"n_cap", 10'000'000},
                           {"grid_ratio", 2.0},
                           {"bisection_steps", 8},
                           {"recovery", {{"starts", 16}, {"max_iterations", 200}, {"max_supports", 64}}},
                           {"n", 100'000},
                           {"sigma", 0.0},
                           {"observations_file", "observations.bin"}};
  static const json sweep = {{"family", {{"type", "relu"}, {"hidden_multiplier", 3}, {"hidden_layers", 1}}},
                             {"n_values", {3, 4, 5, 6, 8, 10}},
                             {"m_values", {1, 2}},
                             {"kind", "special-orthogonal"},
                             {"seeds", 5},
                             {"seed", 1},
                             {"restarts", 50},
                             {"max_iterations", 500},
                             {"residual_tol", 1e-8},
                             {"separation_tol", 1e-3},
                             {"penalty_weight", 100.0}};
  switch (command) {
  case Command::measure: return measure;
  case Command::collide: return collide;
  case Command::probe_dim: return probe;
  case Command::mra_sim: return mra;
  case Command::sweep: return sweep;
  }
  return measure;
}

namespace {

// Best-effort line lookup: walk the pointer's object keys through the raw text.
std::size_t line_of(const std::string& text, const std::vector<std::string>& keys) {
  std::size_t pos = 0;
  for (const auto& key : keys) {
    const auto found = text.find('"' + key + '"', pos);
    if (found == std::string::npos) return 0;
    pos = found + key.size() + 2;
  }
  if (keys.empty()) return 0;
  return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n')) + 1;
}

std::vector<std::string> split_pointer(const std::string& pointer) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 1; i <= pointer.size(); ++i) {
    if (i == pointer.size() || pointer[i] == '/') {
      if (!cur.empty() && !std::all_of(cur.begin(), cur.end(), ::isdigit)) out.push_back(cur);
      cur.clear();
    } else {
      cur += pointer[i];
    }
  }
  return out;
}

class Checker {
public:
  Checker(const json& params, const json& user, const std::string& text, std::vector<Diagnostic>& out)
      : params_(params), user_(user), text_(text), out_(out) {}

  void fail(const std::string& path, const std::string& message) {
    const std::string pointer = "/parameters" + path;
    const bool from_user = user_.contains(json::json_pointer(path));
    std::string msg = message;
    if (!from_user) msg += " (value from preset/defaults)";
    out_.push_back({from_user ? line_of(text_, split_pointer(pointer)) : 0, pointer, msg});
  }

  const json& at(const std::string& path) const { return params_.at(json::json_pointer(path)); }
  bool has(const std::string& path) const {
    return params_.contains(json::json_pointer(path)) && !at(path).is_null();
  }

  bool integer(const std::string& path, long long lo, long long hi) {
    const json& v = at(path);
    if (!v.is_number_integer()) {
      fail(path, "expected an integer");
      return false;
    }
    const auto value = v.get<long long>();
    if (value < lo || value > hi) {
      fail(path, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + std::to_string(value));
      return false;
    }
    return true;
  }

  void positive(const std::string& path) {
    const json& v = at(path);
    if (!v.is_number() || !(v.get<double>() > 0.0)) fail(path, "must be a positive number");
  }

  void nonnegative(const std::string& path) {
    const json& v = at(path);
    if (!v.is_number() || !(v.get<double>() >= 0.0)) fail(path, "must be a nonnegative number");
  }

  void one_of(const std::string& path, std::initializer_list<std::string_view> options) {
    const auto& v = at(path);
    if (v.is_string() && std::find(options.begin(), options.end(), v.get<std::string>()) != options.end()) return;
    std::string list;
    for (auto o : options) list += (list.empty() ? "" : ", ") + std::string(o);
    fail(path, "must be one of: " + list);
  }

  bool number_array(const std::string& path, bool allow_empty = false) {
    const auto& v = at(path);
    if (!v.is_array() || (!allow_empty && v.empty()) ||
        !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); })) {
      fail(path, "expected a non-empty array of numbers");
      return false;
    }
    return true;
  }

  bool int_array(const std::string& path, long long lo, long long hi) {
    const auto& v = at(path);
    if (!v.is_array() || v.empty() || !std::all_of(v.begin(), v.end(), [&](const json& e) {
          return e.is_number_integer() && e.get<long long>() >= lo && e.get<long long>() <= hi;
        })) {
      fail(path, "expected a non-empty array of integers in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return false;
    }
    return true;
  }

  const std::string& text() const { return text_; }

private:
  const json& params_;
  const json& user_;
  const std::string& text_;
  std::vector<Diagnostic>& out_;
};

// structural check: every user key must exist in the template, with a compatible type
void check_shape(const json& value, const json& schema, const std::string& path, Checker& c) {
  if (schema.is_null()) return;  // free-form, checked semantically
  const auto kind_name = [](const json& j) -> std::string {
    if (j.is_number_integer()) return "an integer";
    if (j.is_number()) return "a number";
    if (j.is_boolean()) return "a boolean";
    if (j.is_string()) return "a string";
    if (j.is_array()) return "an array";
    return "an object";
  };
  bool ok = false;
  if (schema.is_object()) ok = value.is_object();
  else if (schema.is_array()) ok = value.is_array();
  else if (schema.is_boolean()) ok = value.is_boolean();
  else if (schema.is_number_integer()) ok = value.is_number_integer();
  else if (schema.is_number()) ok = value.is_number();
  else if (schema.is_string()) ok = value.is_string() || (path == "/blocks" && value.is_array());
  if (!ok) {
    c.fail(path, "expected " + kind_name(schema) + (path == "/blocks" ? " or an array of block sizes" : ""));
    return;
  }
  if (!schema.is_object()) return;
  for (const auto& [key, child] : value.items()) {
    if (!schema.contains(key)) {
      c.fail(path + "/" + key, "unknown parameter");
      continue;
    }
    check_shape(child, schema.at(key), path + "/" + key, c);
  }
}

void check_blocks(Checker& c, const std::string& path, Index n) {
  const auto& b = c.at(path);
  if (b.is_string()) {
    c.one_of(path, {"power-spectrum"});
    return;
  }
  if (!c.int_array(path, 1, 1024)) return;
  long long total = 0;
  for (const auto& e : b) total += e.get<long long>();
  if (n > 0 && total != n) c.fail(path, "block sizes sum to " + std::to_string(total) + " but N = " + std::to_string(n));
}

void check_mixing(Checker& c, const std::string& path, Index n) {
  c.one_of(path + "/source", {"random", "identity", "fourier", "matrix"});
  c.one_of(path + "/kind", {"special-orthogonal", "general-linear"});
  c.integer(path + "/seed", 0, std::numeric_limits<long long>::max());
  if (c.at(path + "/source") == "matrix") {
    const auto& m = c.at(path + "/matrix");
    const bool square = m.is_array() && static_cast<Index>(m.size()) == n &&
                        std::all_of(m.begin(), m.end(), [&](const json& row) {
                          return row.is_array() && static_cast<Index>(row.size()) == n &&
                                 std::all_of(row.begin(), row.end(), [](const json& e) { return e.is_number(); });
                        });
    if (!square) c.fail(path + "/matrix", "source=matrix needs an N x N array of numbers (N = " + std::to_string(n) + ")");
  }
}

void check_prior(Checker& c, const std::string& path, Index n, const std::filesystem::path& base) {
  c.one_of(path + "/type", {"relu", "sparse", "file"});
  const auto type = c.at(path + "/type");
  c.integer(path + "/seed", 0, std::numeric_limits<long long>::max());
  if (type == "relu") {
    c.integer(path + "/latent_dim", 1, 64);
    c.int_array(path + "/hidden", 1, 4096);
    try {
      parse_activation(c.at(path + "/activation").get<std::string>());
    } catch (const Error&) {
      c.fail(path + "/activation", "must be one of: relu, leaky-relu, hardtanh, identity");
    }
    c.nonnegative(path + "/slope");
  } else if (type == "sparse") {
    if (c.integer(path + "/sparsity", 1, 1024) && n > 0 && c.at(path + "/sparsity").get<Index>() > n)
      c.fail(path + "/sparsity", "sparsity exceeds N");
    c.one_of(path + "/basis", {"standard-basis", "generic-orthonormal", "generic-linear"});
  } else if (type == "file") {
    const auto& p = c.at(path + "/path");
    if (!p.is_string()) {
      c.fail(path + "/path", "type=file needs a path string");
    } else {
      const std::filesystem::path file = base / p.get<std::string>();
      if (!std::filesystem::exists(file)) c.fail(path + "/path", "file not found: " + file.string());
    }
  }
}

void check_collision_knobs(Checker& c) {
  c.integer("/restarts", 1, 1'000'000);
  c.integer("/max_iterations", 1, 1'000'000);
  c.positive("/residual_tol");
  c.positive("/separation_tol");
  c.nonnegative("/penalty_weight");
  c.integer("/seed", 0, std::numeric_limits<long long>::max());
}

void check_semantics(Command command, Checker& c, const std::filesystem::path& base) {
  switch (command) {
  case Command::measure: {
    Index n = 0;
    const auto& x = c.at("/x");
    const auto is_vec = [](const json& v) {
      return v.is_array() && !v.empty() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
    };
    if (is_vec(x)) {
      n = static_cast<Index>(x.size());
    } else if (x.is_array() && !x.empty() && std::all_of(x.begin(), x.end(), is_vec)) {
      n = static_cast<Index>(x.front().size());
      if (!std::all_of(x.begin(), x.end(), [&](const json& v) { return static_cast<Index>(v.size()) == n; }))
        c.fail("/x", "all signals must have the same length");
    } else {
      c.fail("/x", "expected a signal (array of numbers) or a list of signals");
    }
    if (c.has("/N") && c.integer("/N", 1, 4096) && n > 0 && c.at("/N").get<Index>() != n)
      c.fail("/N", "N = " + std::to_string(c.at("/N").get<Index>()) + " but x has length " + std::to_string(n));
    c.one_of("/domain", {"blocks", "time"});
    check_blocks(c, "/blocks", n);
    check_mixing(c, "/mixing", n);
    break;
  }
  case Command::collide: {
    if (!c.integer("/N", 1, 64)) break;
    const auto n = c.at("/N").get<Index>();
    check_blocks(c, "/blocks", n);
    check_prior(c, "/prior", n, base);
    check_mixing(c, "/mixing", n);
    c.integer("/mixings", 1, 1000);
    check_collision_knobs(c);
    c.one_of("/anchor", {"none", "random"});
    if (c.integer("/oracle_grid_points", 0, 200)) {
      const auto g = c.at("/oracle_grid_points").get<int>();
      if (g == 1) c.fail("/oracle_grid_points", "use 0 (off) or at least 2 grid points");
    }
    break;
  }
  case Command::probe_dim: {
    if (!c.integer("/N", 2, 32)) break;
    check_blocks(c, "/blocks", c.at("/N").get<Index>());
    c.one_of("/manifold", {"general-linear", "special-orthogonal"});
    c.integer("/pairs", 1, 10'000);
    c.integer("/seed", 0, std::numeric_limits<long long>::max());
    c.integer("/max_restarts", 1, 10'000);
    c.integer("/max_newton_iterations", 1, 100'000);
    c.positive("/target_residual");
    c.positive("/accept_residual");
    c.positive("/rank_tol");
    break;
  }
  case Command::mra_sim: {
    c.one_of("/mode", {"sample-complexity", "block-scalar", "recovery", "simulate"});
    c.one_of("/group/kind", {"cyclic", "dihedral", "so3"});
    c.integer("/group/N", 1, 4096);
    c.integer("/group/band_limit", 0, 16);
    Index n = 0;
    if (c.at("/group/kind") == "so3" && c.at("/group/band_limit").is_number_integer()) {
      const auto l = c.at("/group/band_limit").get<Index>();
      n = (l + 1) * (l + 1);
    } else if (c.at("/group/N").is_number_integer()) {
      n = c.at("/group/N").get<Index>();
    }
    check_prior(c, "/prior", n, base);
    check_mixing(c, "/mixing", n);
    c.integer("/signal/latent_seed", 0, std::numeric_limits<long long>::max());
    c.positive("/signal/norm");
    if (c.has("/signal/x") && c.number_array("/signal/x") && static_cast<Index>(c.at("/signal/x").size()) != n)
      c.fail("/signal/x", "signal length must equal the group dimension " + std::to_string(n));
    if (c.number_array("/sigma_list")) {
      const auto& s = c.at("/sigma_list");
      std::vector<double> v;
      for (const auto& e : s) v.push_back(e.get<double>());
      if (!std::is_sorted(v.begin(), v.end()) || v.front() < 0.0)
        c.fail("/sigma_list", "must be nonnegative and ascending");
    }
    c.integer("/seeds", 1, 10'000);
    c.integer("/seed", 0, std::numeric_limits<long long>::max());
    const auto& t = c.at("/target_error");
    if (!t.is_number() || !(t.get<double>() > 0.0 && t.get<double>() < 1.0)) c.fail("/target_error", "must lie in (0, 1)");
    c.integer("/n_min", 1, std::numeric_limits<long long>::max());
    if (c.integer("/n_cap", 1, 1'000'000'000'000LL) && c.at("/n_min").is_number_integer() &&
        c.at("/n_cap").get<long long>() < c.at("/n_min").get<long long>())
      c.fail("/n_cap", "must be >= n_min");
    const auto& r = c.at("/grid_ratio");
    if (!r.is_number() || !(r.get<double>() > 1.0)) c.fail("/grid_ratio", "must exceed 1");
    c.integer("/bisection_steps", 0, 64);
    c.integer("/recovery/starts", 1, 100'000);
    c.integer("/recovery/max_iterations", 1, 100'000);
    c.integer("/recovery/max_supports", 1, 1'000'000);
    c.integer("/n", 1, 1'000'000'000LL);
    c.nonnegative("/sigma");
    if (!c.at("/observations_file").is_string() || c.at("/observations_file").get<std::string>().empty())
      c.fail("/observations_file", "expected a file name");
    break;
  }
  case Command::sweep: {
    c.one_of("/family/type", {"relu", "sparse"});
    c.integer("/family/hidden_multiplier", 1, 64);
    c.integer("/family/hidden_layers", 0, 16);
    c.int_array("/n_values", 1, 32);
    c.int_array("/m_values", 1, 32);
    c.one_of("/kind", {"special-orthogonal", "general-linear"});
    c.integer("/seeds", 1, 10'000);
    check_collision_knobs(c);
    break;
  }
  }
}

void deep_merge(json& target, const json& patch) {
  for (const auto& [key, value] : patch.items()) {
    if (value.is_object() && target.contains(key) && target[key].is_object()) deep_merge(target[key], value);
    else target[key] = value;
  }
}

std::size_t line_at_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n')) + 1;
}

} // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  std::vector<Diagnostic> diags;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    diags.push_back({line_at_offset(text, e.byte > 0 ? e.byte - 1 : 0), "", std::string("JSON syntax error: ") + e.what()});
    throw ConfigError(diags);
  }
  if (!root.is_object()) throw ConfigError({{1, "", "top level must be a JSON object"}});

  const auto top_line = [&](const std::string& key) { return line_of(text, {key}); };
  for (const auto& [key, value] : root.items())
    if (key != "schema_version" && key != "command" && key != "preset" && key != "parameters" && key != "output_dir")
      diags.push_back({top_line(key), "/" + key, "unknown top-level field"});

  if (!root.contains("schema_version")) {
    diags.push_back({0, "/schema_version", "missing (expected " + std::to_string(kSchemaVersion) + ")"});
  } else if (!root["schema_version"].is_number_integer() || root["schema_version"].get<long long>() != kSchemaVersion) {
    diags.push_back({top_line("schema_version"), "/schema_version",
                     "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")"});
  }

  ExperimentConfig cfg;
  cfg.source_text = text;
  cfg.echo = root;
  cfg.base_dir = base_dir;

  const Preset* preset = nullptr;
  if (root.contains("preset")) {
    if (!root["preset"].is_string()) {
      diags.push_back({top_line("preset"), "/preset", "expected a string"});
    } else if (!(preset = find_preset(root["preset"].get<std::string>()))) {
      diags.push_back({top_line("preset"), "/preset", "unknown preset '" + root["preset"].get<std::string>() + "'"});
    } else {
      cfg.preset = preset->name;
    }
  }

  bool have_command = false;
  if (root.contains("command")) {
    try {
      if (!root["command"].is_string()) throw InvalidInput("expected a string");
      cfg.command = parse_command(root["command"].get<std::string>());
      have_command = true;
      if (preset && preset->command != cfg.command)
        diags.push_back({top_line("command"), "/command",
                         "preset '" + preset->name + "' runs '" + std::string(to_string(preset->command)) + "'"});
    } catch (const Error& e) {
      diags.push_back({top_line("command"), "/command",
                       std::string(e.what()) + " (expected measure, collide, probe-dim, mra-sim or sweep)"});
    }
  } else if (preset) {
    cfg.command = preset->command;
    have_command = true;
  } else {
    diags.push_back({0, "/command", "missing (or give a preset)"});
  }

  cfg.output_dir = "out";
  if (root.contains("output_dir")) {
    if (root["output_dir"].is_string()) cfg.output_dir = root["output_dir"].get<std::string>();
    else diags.push_back({top_line("output_dir"), "/output_dir", "expected a string"});
  }

  json user = json::object();
  if (root.contains("parameters")) {
    if (root["parameters"].is_object()) user = root["parameters"];
    else diags.push_back({top_line("parameters"), "/parameters", "expected an object"});
  }
  if (!diags.empty() || !have_command) throw ConfigError(diags);

  const json& defaults = default_parameters(cfg.command);
  json merged = defaults;
  if (preset) deep_merge(merged, preset->parameters);
  deep_merge(merged, user);

  Checker checker(merged, user, text, diags);
  check_shape(merged, defaults, "", checker);
  if (diags.empty()) check_semantics(cfg.command, checker, base_dir);
  if (!diags.empty()) throw ConfigError(diags);

  cfg.parameters = std::move(merged);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({{0, "", "cannot open config file " + path.string()}});
  std::ostringstream ss;
  ss << in.rdbuf();
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(ss.str(), base);
}

} // namespace sapr::cli
