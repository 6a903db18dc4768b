#pragma once

#include <exception>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tumorfront/config.hpp"

namespace tumorfront {

const std::vector<std::string>& command_names();
std::string usage_text();

struct CommandResult {
  nlohmann::json summary;
  std::vector<std::string> artifacts;  // paths relative to the output directory
  std::string stdout_text;             // printed instead of the summary when set
  bool ok = true;                      // false when verify found regressions
};

// Runs one command and writes its artifacts under out. Library errors propagate.
CommandResult execute(const std::string& command, const RunConfig& cfg, const std::filesystem::path& out);

nlohmann::json manifest_json(const std::string& command, const RunConfig& cfg,
                             const std::vector<std::string>& artifacts);

// {"error": {"kind", "message"}} for library errors, kind "Internal" otherwise.
nlohmann::json error_json(const std::exception& e);

// Exit codes: 0 success, 1 numerical failure or regression, 2 usage error.
int dispatch(const std::string& command, const RunConfig& cfg, const std::filesystem::path& out, std::ostream& os);

// Rewrites the expected values of every golden case from a fresh run.
void update_golden(const std::filesystem::path& golden_dir, const std::filesystem::path& scratch);

std::filesystem::path default_golden_dir();

}  // namespace tumorfront
