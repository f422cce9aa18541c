#pragma once

#include <string>

#include "json.hpp"

namespace tans {

/* Minimal TOML reader covering the experiment-spec schema: [table] and
 * [table.sub] headers, [[array-of-tables]] headers, bare keys, and scalar
 * values (basic strings, booleans, integers, floats) plus flat arrays of
 * scalars. Comments run from an unquoted '#' to end of line. Parse errors
 * carry the 1-based line number.
 */
nlohmann::json parse_toml_text(const std::string& text);
nlohmann::json parse_toml_file(const std::string& path);

}  // namespace tans
