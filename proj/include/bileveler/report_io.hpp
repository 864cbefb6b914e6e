#pragma once

#include <string>
#include <vector>

#include "bileveler/report.hpp"

namespace bileveler {

// One-line JSON record carrying every SolveReport field. Context entries
// (instance name, command) are added as extra string fields.
std::string report_record(const SolveReport& report,
                          const std::vector<std::pair<std::string, std::string>>& context = {});

// Empty when the line is a well-formed record; otherwise the first problem.
std::string check_report_record(const std::string& line);

// Human-readable multi-line rendering. Names label x and y when sizes match.
std::string report_text(const SolveReport& report, const std::vector<std::string>& x_names = {},
                        const std::vector<std::string>& y_names = {});

}  // namespace bileveler
