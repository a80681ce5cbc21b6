#pragma once

#include <optional>
#include <string>

#include "json.hpp"

namespace agentrt {

using Json = nlohmann::json;

struct StrictParse {
    std::optional<Json> value;   // empty on malformed input
    bool duplicate_key = false;  // some object repeated a key
    bool duplicate_tool = false; // the repeated key was "tool"
};

// Parse arbitrary bytes. nlohmann silently keeps the last duplicate key, so a
// parser callback tracks the key set per object level to detect repeats.
StrictParse parse_strict(const std::string& text);

// Deterministic serialization: sorted keys (nlohmann object order), no
// indentation, LF-free by construction.
std::string canonical_dump(const Json& value);

}  // namespace agentrt
