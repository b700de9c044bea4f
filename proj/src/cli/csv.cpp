#include <charconv>
#include <cmath>
#include <fstream>

#include <openssl/evp.h>

#include "sapr/cli/report.hpp"
#include "sapr/error.hpp"

namespace sapr::cli {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) value = 0.0;  // drop the sign of -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return {buf, res.ptr};
}

std::string Table::to_csv() const {
  std::string out;
  const auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

std::string git_blob_sha1(const std::string& text) {
  const std::string blob = "blob " + std::to_string(text.size()) + std::string(1, '\0') + text;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    throw NumericalFailure("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::vector<std::filesystem::path> write_report(const RunReport& report,
                                                const std::filesystem::path& output_dir) {
  std::filesystem::create_directories(output_dir);
  std::vector<std::filesystem::path> written;
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& t : report.tables) {
    const auto path = output_dir / (t.name + ".csv");
    std::ofstream out(path, std::ios::binary);
    out << t.to_csv();
    if (!out) throw FormatError("failed writing " + path.string());
    written.push_back(path);
    tables.push_back({{"name", t.name}, {"file", path.filename().string()}, {"rows", t.rows.size()}});
  }
  nlohmann::json doc = {{"config", report.config_echo},
                        {"results", {{"tables", tables}, {"summary", report.summary}}},
                        {"flags", report.flags},
                        {"provenance", report.provenance}};
  const auto path = output_dir / "report.json";
  std::ofstream out(path, std::ios::binary);
  out << doc.dump(2) << '\n';
  if (!out) throw FormatError("failed writing " + path.string());
  written.push_back(path);
  return written;
}

} // namespace sapr::cli
