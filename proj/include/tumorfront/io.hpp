#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "tumorfront/errors.hpp"

namespace tumorfront {

// Reads optional keys from a JSON object and rejects any key that was not consumed.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError(fmt::format("\"{}\" must be a JSON object", path_));
  }

  template <class T>
  bool get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return false;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(fmt::format("\"{}.{}\": {}", path_, key, e.what()));
    }
    return true;
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw UnknownKey(fmt::format("unknown key \"{}.{}\"", path_, it.key()));
  }

  const std::string& path() const { return path_; }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Round-trip formatting for CSV/JSON numbers.
inline std::string fmt_num(double x) { return fmt::format("{:.17g}", x); }

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void raw(const std::string& line);
  ~CsvWriter();

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace tumorfront
