#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldamix {

// All floats in emitted CSVs carry 17 significant digits so that a rerun can
// be compared byte-for-byte and downstream tools can recover doubles exactly.
inline std::string format_sig17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Writes content to path via a temp file + rename in the same directory, so
// partial outputs are never left behind on failure.
inline void write_file_atomic(const std::string& path,
                              const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string());
    os << content;
    if (!os.flush())
      throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

// Minimal CSV accumulator: a header row plus typed cell helpers.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& header) { out_ = header + "\n"; }

  CsvWriter& cell(double v) { return raw(format_sig17(v)); }
  CsvWriter& cell(long v) { return raw(std::to_string(v)); }
  CsvWriter& cell(int v) { return raw(std::to_string(v)); }
  CsvWriter& cell(const std::string& v) { return raw(v); }

  void end_row() {
    out_ += row_;
    out_ += "\n";
    row_.clear();
  }

  const std::string& content() const { return out_; }
  void write(const std::string& path) const { write_file_atomic(path, out_); }

 private:
  CsvWriter& raw(const std::string& s) {
    if (!row_.empty()) row_ += ",";
    row_ += s;
    return *this;
  }
  std::string out_;
  std::string row_;
};

}  // namespace ldamix
