#ifndef TAMP2D_METRICS_HPP_
#define TAMP2D_METRICS_HPP_

#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

namespace tamp2d {

// Append-only CSV stream; one writer object per file, safe for many
// producer threads.
class CsvLog {
 public:
  CsvLog() = default;
  CsvLog(const std::string& path, const std::vector<std::string>& header) {
    open(path, header);
  }

  void open(const std::string& path, const std::vector<std::string>& header) {
    std::lock_guard lock(mu_);
    std::filesystem::create_directories(
        std::filesystem::path(path).parent_path());
    out_.open(path);
    path_ = path;
    for (std::size_t i = 0; i < header.size(); ++i)
      out_ << (i ? "," : "") << header[i];
    out_ << "\n";
  }

  bool is_open() const { return out_.is_open(); }
  const std::string& path() const { return path_; }

  void row(const std::vector<std::string>& fields) {
    std::lock_guard lock(mu_);
    if (!out_.is_open()) return;
    for (std::size_t i = 0; i < fields.size(); ++i)
      out_ << (i ? "," : "") << fields[i];
    out_ << "\n";
    out_.flush();
  }

  static std::string num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
  std::string path_;
};

// Parse one CSV file into header + string cells. Malformed rows (wrong
// column count) are skipped and counted.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int skipped = 0;

  static CsvTable load(const std::string& path) {
    CsvTable t;
    std::ifstream in(path);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::istringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (first) {
        t.header = cells;
        first = false;
      } else if (cells.size() == t.header.size()) {
        t.rows.push_back(cells);
      } else {
        ++t.skipped;
      }
    }
    return t;
  }
};

}  // namespace tamp2d

#endif  // TAMP2D_METRICS_HPP_
