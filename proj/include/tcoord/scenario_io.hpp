#ifndef TCOORD_SCENARIO_IO_HPP
#define TCOORD_SCENARIO_IO_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "tcoord/sim.hpp"

namespace tcoord {

// Malformed scenario text; the message names the offending field by its
// dotted path. Semantic problems (values out of range) surface later through
// Scenario::validate instead.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parses a schema-1 scenario document. Overrides are "dotted.path=value"
// assignments applied to the parsed tree before conversion; values are read
// as JSON when possible and as strings otherwise.
Scenario scenario_from_json_text(
    const std::string& text, const std::vector<std::string>& overrides = {});

std::string read_text_file(const std::string& path);

Scenario load_scenario(const std::string& path,
                       const std::vector<std::string>& overrides = {});

// FNV-1a 64-bit hash of the document text, as 16 hex digits.
std::string scenario_digest(const std::string& text);

}  // namespace tcoord

#endif  // TCOORD_SCENARIO_IO_HPP
