#include "agentrt/json_util.hpp"

#include <set>
#include <vector>

namespace agentrt {

StrictParse parse_strict(const std::string& text) {
    StrictParse result;
    std::vector<std::set<std::string>> key_stack;

    nlohmann::json::parser_callback_t cb =
        [&](int /*depth*/, nlohmann::json::parse_event_t event, Json& parsed) {
            switch (event) {
                case nlohmann::json::parse_event_t::object_start:
                    key_stack.emplace_back();
                    break;
                case nlohmann::json::parse_event_t::object_end:
                    if (!key_stack.empty()) key_stack.pop_back();
                    break;
                case nlohmann::json::parse_event_t::key: {
                    const auto key = parsed.get<std::string>();
                    if (!key_stack.empty() && !key_stack.back().insert(key).second) {
                        result.duplicate_key = true;
                        if (key == "tool") result.duplicate_tool = true;
                    }
                    break;
                }
                default:
                    break;
            }
            return true;
        };

    Json value = Json::parse(text, cb, /*allow_exceptions=*/false);
    if (value.is_discarded()) return result;
    result.value = std::move(value);
    return result;
}

std::string canonical_dump(const Json& value) {
    return value.dump();
}

}  // namespace agentrt
