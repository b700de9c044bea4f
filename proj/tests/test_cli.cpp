#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "sapr/cli/config.hpp"
#include "sapr/cli/presets.hpp"
#include "sapr/cli/report.hpp"

using namespace sapr::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<Diagnostic> diagnostics_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.diagnostics();
  }
  return {};
}

const Table& table(const RunReport& r, const std::string& name) {
  for (const auto& t : r.tables)
    if (t.name == name) return t;
  throw std::runtime_error("no table " + name);
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return i;
  throw std::runtime_error("no column " + name);
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sapr_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int exit_code_of(const std::string& args) {
  const std::string cmd = std::string(SAPR_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("diagnostics carry line numbers and field pointers") {
  const auto d = diagnostics_of("{\n  \"schema_version\": 1,\n  \"command\": \"collide\",\n"
                                "  \"parameters\": {\n    \"N\": \"ten\",\n    \"bogus\": 3\n  }\n}\n");
  REQUIRE(d.size() == 2);
  CHECK(d[0].line == 5);
  CHECK(d[0].field == "/parameters/N");
  CHECK(d[1].line == 6);
  CHECK(d[1].field == "/parameters/bogus");
  CHECK(d[1].message.find("unknown") != std::string::npos);

  const auto nested = diagnostics_of("{\n \"schema_version\": 1,\n \"command\": \"collide\",\n"
                                     " \"parameters\": {\n  \"prior\": {\"latent_dim\": 0}\n }\n}");
  REQUIRE(nested.size() == 1);
  CHECK(nested[0].line == 5);
  CHECK(nested[0].field == "/parameters/prior/latent_dim");
  CHECK(nested[0].format("c.json").rfind("c.json:5: /parameters/prior/latent_dim:", 0) == 0);
}

TEST_CASE("every kind of malformed config is rejected") {
  const std::vector<std::pair<std::string, std::string>> bad = {
      {"{\"schema_version\": 1, \"command\": \"collide\", ", ""},
      {"{\"schema_version\": 2, \"command\": \"collide\"}", "/schema_version"},
      {"{\"command\": \"collide\"}", "/schema_version"},
      {"{\"schema_version\": 1, \"command\": \"fly\"}", "/command"},
      {"{\"schema_version\": 1, \"command\": \"collide\", \"preset\": \"nope\"}", "/preset"},
      {"{\"schema_version\": 1, \"command\": \"probe-dim\", \"preset\": \"thm2-so\"}", "/command"},
      {"{\"schema_version\": 1, \"command\": \"collide\", \"extra\": 1}", "/extra"},
      {"{\"schema_version\": 1, \"command\": \"collide\", \"parameters\": {\"N\": 0}}", "/parameters/N"},
      {"{\"schema_version\": 1, \"command\": \"collide\", \"parameters\": {\"mixing\": {\"kind\": \"unitary\"}}}",
       "/parameters/mixing/kind"},
      {"{\"schema_version\": 1, \"command\": \"collide\", \"parameters\": {\"residual_tol\": -1}}",
       "/parameters/residual_tol"},
      {"{\"schema_version\": 1, \"command\": \"mra-sim\", \"parameters\": {\"group\": {\"kind\": \"so3\", "
       "\"band_limit\": 17}}}",
       "/parameters/group/band_limit"},
      {"{\"schema_version\": 1, \"command\": \"probe-dim\", \"parameters\": {\"blocks\": [2, 2]}}",
       "/parameters/blocks"},
      {"[1, 2]", ""},
  };
  for (const auto& [text, field] : bad) {
    CAPTURE(text);
    const auto d = diagnostics_of(text);
    REQUIRE_FALSE(d.empty());
    if (!field.empty()) CHECK(d[0].field == field);
  }
}

TEST_CASE("preset values are merged under user overrides") {
  const auto c = parse_config(R"({"schema_version": 1, "command": "collide", "preset": "thm2-so",
                                  "parameters": {"restarts": 7}})");
  CHECK(c.preset == "thm2-so");
  CHECK(c.parameters["restarts"] == 7);
  CHECK(c.parameters["N"] == find_preset("thm2-so")->parameters["N"]);
  CHECK(c.parameters["mixing"]["kind"] == "special-orthogonal");
  // every default key survives the merge
  for (const auto& [key, _] : default_parameters(Command::collide).items()) CHECK(c.parameters.contains(key));
}

TEST_CASE("binary exit codes") {
  const auto dir = scratch("exit");
  {
    std::ofstream(dir / "bad.json") << "{\"schema_version\": 1, \"command\": \"collide\", \"parameters\": {\"N\": 0}}";
    std::ofstream(dir / "good.json") << "{\"schema_version\": 1, \"command\": \"measure\", \"preset\": \"measure-demo\"}";
  }
  CHECK(exit_code_of("validate --config " + (dir / "bad.json").string()) == 2);
  CHECK(exit_code_of("run --config " + (dir / "bad.json").string()) == 2);
  CHECK(exit_code_of("validate --config " + (dir / "missing.json").string()) == 2);
  CHECK(exit_code_of("run") == 2);
  CHECK(exit_code_of("run --config " + (dir / "good.json").string() + " --threads 0") == 2);
  CHECK(exit_code_of("validate --config " + (dir / "good.json").string()) == 0);
  CHECK(exit_code_of("presets") == 0);
  CHECK(exit_code_of("run --config " + (dir / "good.json").string() + " --out " + (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "measure.csv"));
  CHECK(fs::exists(dir / "out" / "report.json"));
  fs::remove_all(dir);
}

TEST_CASE("measure") {
  const auto c = parse_config(R"({"schema_version": 1, "command": "measure", "preset": "measure-demo"})");
  const auto r = run(c);
  const auto& t = table(r, "measure");
  CHECK(t.header == std::vector<std::string>{"b0", "b1", "b2"});
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0] == std::vector<std::string>{"1", "5", "13"});

  // time-domain input of length 4: a delta has flat power spectrum
  const auto td = run(parse_config(R"({"schema_version": 1, "command": "measure",
      "parameters": {"x": [1, 0, 0, 0], "domain": "time"}})"));
  const auto& row = table(td, "measure").rows.at(0);
  REQUIRE(row.size() == 3);
  CHECK(std::stod(row[0]) == doctest::Approx(0.25));
  CHECK(std::stod(row[1]) == doctest::Approx(0.25));
  CHECK(std::stod(row[2]) == doctest::Approx(0.5));
}

TEST_CASE("probe-dim reports the SO bound") {
  const auto c = parse_config(R"({"schema_version": 1, "command": "probe-dim", "preset": "prop-codim-so",
                                  "parameters": {"pairs": 2}})");
  const auto r = run(c);
  const auto& t = table(r, "probe");
  REQUIRE(t.rows.size() == 2);
  for (const auto& row : t.rows) {
    CHECK(row[column(t, "theoretical_bound")] == "18");
    CHECK(row[column(t, "estimated_solution_dim")] == "18");
  }
}

TEST_CASE("collide above threshold finds nothing") {
  const auto c = parse_config(R"({"schema_version": 1, "command": "collide",
      "parameters": {"N": 9, "prior": {"latent_dim": 2, "hidden": [6]},
                     "mixing": {"kind": "general-linear"}, "restarts": 40}})");
  const auto r = run(c, 2);
  const auto& t = table(r, "collide");
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][column(t, "verdict")] == "no-collision-found");
  CHECK(r.summary["collisions"] == 0);
}

TEST_CASE("runs are deterministic and carry provenance") {
  const std::string text = R"({"schema_version": 1, "command": "mra-sim",
      "parameters": {"mode": "recovery", "seeds": 2, "n": 2000, "sigma": 0.1}})";
  const auto c = parse_config(text);
  const auto a = run(c, 1), b = run(c, 2);
  REQUIRE(a.tables.size() == b.tables.size());
  for (std::size_t i = 0; i < a.tables.size(); ++i) CHECK(a.tables[i].to_csv() == b.tables[i].to_csv());
  const auto& p = a.provenance;
  for (const char* key : {"command", "parameters", "seeds", "config_sha1", "wall_time_seconds", "threads", "kernel_isa"})
    CHECK(p.contains(key));
  CHECK(p["config_sha1"] == git_blob_sha1(text));

  const auto dir = scratch("report");
  const auto files = write_report(a, dir);
  CHECK(files.size() == a.tables.size() + 1);
  const auto j = json::parse(slurp(dir / "report.json"));
  for (const char* key : {"config", "results", "flags", "provenance"}) CHECK(j.contains(key));
  CHECK(j["results"].contains("tables"));
  CHECK(j["results"].contains("summary"));
  fs::remove_all(dir);
}

TEST_CASE("simulate mode writes a loadable observation file") {
  const auto dir = scratch("sim");
  auto c = parse_config(R"({"schema_version": 1, "command": "mra-sim",
      "parameters": {"mode": "simulate", "n": 100, "sigma": 0.5, "observations_file": "obs.bin"}})",
                        dir);
  c.output_dir = dir;
  const auto r = run(c);
  CHECK(fs::exists(dir / "obs.bin"));
  CHECK(fs::file_size(dir / "obs.bin") > 100 * 8 * sizeof(double));
  CHECK_NOTHROW(table(r, "invariants"));
  fs::remove_all(dir);
}

TEST_CASE("preset catalogue") {
  const auto& all = presets();
  CHECK(all.size() >= 9);
  std::set<std::string> names;
  for (const auto& p : all) {
    CHECK(names.insert(p.name).second);
    CHECK_FALSE(p.claim.empty());
    // every preset parses on its own
    CHECK_NOTHROW(parse_config(json{{"schema_version", 1}, {"command", to_string(p.command)}, {"preset", p.name}}.dump()));
  }
  for (const char* n : {"thm1-gl", "thm2-so", "cor-deepnet", "cor-sparse", "lemma-codim-gl", "prop-codim-so",
                        "mra-cyclic-n4", "cor-sphere-so3", "appendixB-blockscalar"})
    CHECK(names.count(n) == 1);
  CHECK(find_preset("cor-sparse")->claim.find("N >= 4M+2") != std::string::npos);
  CHECK(find_preset("mra-cyclic-n4")->claim.find("slope-4") != std::string::npos);
  CHECK(find_preset("nope") == nullptr);
}

TEST_CASE("number formatting and hashing") {
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(1e-300) == "1e-300");
  CHECK(std::stod(format_number(0.1 + 0.2)) == 0.1 + 0.2);
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  Table t{"x", {"a", "b"}, {{"1", "2"}}};
  CHECK(t.to_csv() == "a,b\n1,2\n");
}
