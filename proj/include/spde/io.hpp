#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spde/errors.hpp"
#include "spde/field.hpp"
#include "spde/grid.hpp"

namespace spde {

/// FNV-1a 64-bit over raw bytes; used to fingerprint artifacts so reruns
/// can be compared without diffing file contents.
inline std::uint64_t fnv1a64(const void* data, size_t n) {
  const unsigned char* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < n; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ull;
  }
  return hash;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

inline std::string digest_bytes(const std::string& bytes) {
  return hex64(fnv1a64(bytes.data(), bytes.size()));
}

/// Write-then-rename so readers never observe a partial file.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("io: cannot open " + tmp + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ValidationError("io: short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw ValidationError("io: cannot rename " + tmp + " to " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("io: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline bool file_exists(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return static_cast<bool>(in);
}

/// CSV with '#'-prefixed provenance comments ahead of the header row.
class CsvWriter {
 public:
  void comment(const std::string& line) { body_ << "# " << line << "\n"; }

  void header(const std::vector<std::string>& cols) {
    for (size_t i = 0; i < cols.size(); ++i) body_ << (i ? "," : "") << cols[i];
    body_ << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) body_ << (i ? "," : "") << cells[i];
    body_ << "\n";
  }

  std::string str() const { return body_.str(); }

 private:
  std::ostringstream body_;
};

inline std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

/// Raw trajectory dump: <base>.bin holds the field values as flat
/// little-endian f64, <base>.json describes shape, provenance and the
/// payload digest.  load_field round-trips bit-exactly.
inline void dump_field(const SpaceTimeField& field, const std::string& base_path) {
  std::string payload(field.v.size() * sizeof(double), '\0');
  std::memcpy(payload.data(), field.v.data(), payload.size());
  nlohmann::json header{{"format", "spde-field-v1"},
                        {"dtype", "f64"},
                        {"byte_order", "little"},
                        {"d", field.grid.d},
                        {"nx", field.grid.nx},
                        {"dt", field.grid.dt},
                        {"t0", field.grid.t0},
                        {"count", field.v.size()},
                        {"digest", digest_bytes(payload)},
                        {"provenance",
                         {{"operator", field.prov.operator_preset},
                          {"forcing", field.prov.forcing},
                          {"backend", field.prov.backend},
                          {"seed", field.prov.seed},
                          {"sample_index", field.prov.sample_index}}}};
  write_file_atomic(base_path + ".bin", payload);
  write_file_atomic(base_path + ".json", header.dump(2) + "\n");
}

inline SpaceTimeField load_field(const std::string& base_path) {
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(read_file(base_path + ".json"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("io: malformed field header " + base_path + ".json: " + e.what());
  }
  if (header.value("format", "") != std::string("spde-field-v1"))
    throw ValidationError("io: " + base_path + ".json is not a field dump header");
  const SpaceTimeGrid grid = SpaceTimeGrid::make(header.at("d").get<int>(),
                                                 header.at("nx").get<int>(),
                                                 header.at("dt").get<double>(),
                                                 header.at("t0").get<double>());
  const std::string payload = read_file(base_path + ".bin");
  const size_t count = header.at("count").get<size_t>();
  if (payload.size() != count * sizeof(double))
    throw ValidationError("io: field payload size mismatch in " + base_path + ".bin");
  if (digest_bytes(payload) != header.at("digest").get<std::string>())
    throw ValidationError("io: field payload digest mismatch in " + base_path + ".bin");
  SpaceTimeField field = SpaceTimeField::zeros(grid);
  if (field.v.size() != count)
    throw ValidationError("io: field shape/count mismatch in " + base_path + ".json");
  std::memcpy(field.v.data(), payload.data(), payload.size());
  const nlohmann::json& prov = header.at("provenance");
  field.prov.operator_preset = prov.value("operator", "");
  field.prov.forcing = prov.value("forcing", "");
  field.prov.backend = prov.value("backend", "");
  field.prov.seed = prov.value("seed", std::uint64_t{0});
  field.prov.sample_index = prov.value("sample_index", long{-1});
  return field;
}

}  // namespace spde
