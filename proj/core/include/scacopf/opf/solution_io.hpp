#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "scacopf/grid/network.hpp"
#include "scacopf/opf/case_model.hpp"
#include "scacopf/opf/score.hpp"

namespace scacopf::opf {

/// Raised when a solution document does not match the schema or the network.
class SolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One case record (see data/schema/solution.schema.json). Only elements in
/// service in the case are written; `penalty` is included when given.
std::string solution_to_json(const grid::Network& net, const OperatingPoint& pt,
                             const CasePenalty* penalty = nullptr);

/// Parses a case record. Elements absent from the record stay 0; unknown ids
/// and unknown case ids are errors.
OperatingPoint parse_solution(const grid::Network& net, std::string_view json_text);
OperatingPoint load_solution(const grid::Network& net, const std::filesystem::path& path);

/// Objective breakdown as a JSON document.
std::string breakdown_to_json(const ScoreBreakdown& s);

/// Writes to a temporary sibling file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// File name used for a case: "solution_<case id>.json".
std::string solution_file_name(std::string_view case_id);

}  // namespace scacopf::opf
