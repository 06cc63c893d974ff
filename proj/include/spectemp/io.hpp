#pragma once

// Signal CSV files (`t,u`), the dataset manifest, atomic file output and the
// config hash stamped into every artifact.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectemp/core_signal.hpp"
#include "spectemp/error.hpp"

namespace spectemp::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Shortest round-trip decimal form of v.
inline std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

/// Writes to a sibling temp file and renames it over `path`, so readers never
/// observe a partial file.
inline void atomic_write(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    require(static_cast<bool>(out), ErrorKind::Io, "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::Io, "cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidArgument, "malformed JSON in '" + path.string() + "': " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) { atomic_write(path, j.dump(2) + "\n"); }

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of the compact dump of `j`. nlohmann::json keeps object keys sorted,
/// so equal configs hash equally regardless of key order in the source file.
inline std::string config_hash(const json& j) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

/// `# config_hash=<hex> seed=<n>` line that opens every CSV artifact.
inline std::string stamp_line(const std::string& hash, std::uint64_t seed) {
  return "# config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
}

inline std::string signal_csv(const TimeSeries& s, const std::string& stamp = {}) {
  std::string out = stamp;
  out += "t,u\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += fmt(s.t[i]);
    out += ',';
    out += fmt(s.u[i]);
    out += '\n';
  }
  return out;
}

inline void write_signal_csv(const fs::path& path, const TimeSeries& s, const std::string& stamp = {}) {
  atomic_write(path, signal_csv(s, stamp));
}

/// Parses a `t,u` CSV; lines starting with '#' are skipped.
inline TimeSeries read_signal_csv(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path.string() + "'");
  TimeSeries s;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  auto parse = [&](const char* b, const char* e, double& v) {
    while (b < e && *b == ' ') ++b;
    const auto r = std::from_chars(b, e, v);
    require(r.ec == std::errc{}, ErrorKind::InvalidArgument,
            path.string() + ":" + std::to_string(lineno) + ": not a number");
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      require(line == "t,u", ErrorKind::InvalidArgument, path.string() + ": expected header 't,u'");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    require(comma != std::string::npos, ErrorKind::InvalidArgument,
            path.string() + ":" + std::to_string(lineno) + ": expected two columns");
    double t = 0.0, u = 0.0;
    parse(line.data(), line.data() + comma, t);
    parse(line.data() + comma + 1, line.data() + line.size(), u);
    s.t.push_back(t);
    s.u.push_back(u);
  }
  require(header, ErrorKind::InvalidArgument, path.string() + ": missing header");
  return s;
}

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory unless absolute
  std::optional<int> label;
  std::string source_id;
};

inline json manifest_json(const std::vector<ManifestEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) {
    json j{{"path", e.path}, {"source_id", e.source_id}};
    j["label"] = e.label ? json(*e.label) : json(nullptr);
    arr.push_back(std::move(j));
  }
  return json{{"signals", std::move(arr)}};
}

/// Reads manifest.json (given directly or as its directory) and loads every signal.
inline std::vector<TimeSeries> load_dataset(const fs::path& where) {
  const fs::path manifest = fs::is_directory(where) ? where / "manifest.json" : where;
  const json j = read_json(manifest);
  require(j.contains("signals") && j["signals"].is_array(), ErrorKind::InvalidArgument,
          manifest.string() + ": missing 'signals' array");
  std::vector<TimeSeries> out;
  for (const auto& e : j["signals"]) {
    require(e.contains("path") && e["path"].is_string(), ErrorKind::InvalidArgument,
            manifest.string() + ": signal entry without 'path'");
    fs::path p = e["path"].get<std::string>();
    if (p.is_relative()) p = manifest.parent_path() / p;
    TimeSeries s = read_signal_csv(p);
    if (e.contains("label") && !e["label"].is_null()) s.label = e["label"].get<int>();
    s.source_id = e.value("source_id", p.stem().string());
    s.validate();
    out.push_back(std::move(s));
  }
  require(!out.empty(), ErrorKind::EmptySignal, manifest.string() + ": no signals listed");
  return out;
}

}  // namespace spectemp::io
