#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "expcost/instance.hpp"

namespace expcost {

/// Schema or syntax problems found while loading an instance document.
class InstanceFormatError : public std::runtime_error {
 public:
  explicit InstanceFormatError(std::vector<std::string> diagnostics);
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

/// {"nodes":[{"id":0,"p":0.9},...], "edges":[{"u":0,"v":1,"cost":1.0},...], "start":1}
/// plus optional free-form "metadata" and "derived_from" members.
nlohmann::json instance_to_json(const ProblemInstance& inst);

/// Collects every schema violation before throwing InstanceFormatError.
/// Diagnostics name the JSON pointer of the offending element.
ProblemInstance instance_from_json(const nlohmann::json& doc);

/// Parses text; syntax errors are reported with line and column.
ProblemInstance parse_instance(const std::string& text);

ProblemInstance load_instance(const std::filesystem::path& file);
void save_instance(const ProblemInstance& inst, const std::filesystem::path& file,
                   const nlohmann::json& extra = nlohmann::json::object());

nlohmann::json path_to_json(const Path& path);

}  // namespace expcost
