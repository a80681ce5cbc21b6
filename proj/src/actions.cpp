#include "agentrt/actions.hpp"

#include <algorithm>

namespace agentrt::actions {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const std::vector<std::string> kToolNames = {
    "open_file",  "edit",       "create_node", "run_cell",
    "run_script", "poll",       "interrupt",   "deep_think",
    "compact",    "wait",       "submit_final_answer", "submit_for_scoring"};

void add(ValidationVerdict& verdict, const std::string& code, const std::string& message) {
    verdict.violations.push_back({code, message});
}

bool want_string(const Json& obj, const char* key, ValidationVerdict& verdict,
                 std::string* out, bool required = true) {
    if (!obj.contains(key)) {
        if (required) add(verdict, "missing_field", std::string("missing field '") + key + "'");
        return false;
    }
    if (!obj.at(key).is_string()) {
        add(verdict, "wrong_type", std::string("field '") + key + "' must be a string");
        return false;
    }
    *out = obj.at(key).get<std::string>();
    return true;
}

bool want_int(const Json& obj, const char* key, ValidationVerdict& verdict,
              std::int64_t* out, bool required = true) {
    if (!obj.contains(key)) {
        if (required) add(verdict, "missing_field", std::string("missing field '") + key + "'");
        return false;
    }
    if (!obj.at(key).is_number_integer()) {
        add(verdict, "wrong_type", std::string("field '") + key + "' must be an integer");
        return false;
    }
    *out = obj.at(key).get<std::int64_t>();
    return true;
}

bool want_string_array(const Json& obj, const char* key, ValidationVerdict& verdict,
                       std::vector<std::string>* out, bool required = true) {
    if (!obj.contains(key)) {
        if (required) add(verdict, "missing_field", std::string("missing field '") + key + "'");
        return false;
    }
    const Json& arr = obj.at(key);
    if (!arr.is_array()) {
        add(verdict, "wrong_type", std::string("field '") + key + "' must be an array");
        return false;
    }
    for (const Json& item : arr) {
        if (!item.is_string()) {
            add(verdict, "wrong_type",
                std::string("field '") + key + "' must contain only strings");
            return false;
        }
        out->push_back(item.get<std::string>());
    }
    return true;
}

void check_unknown_keys(const Json& obj, const std::vector<std::string>& allowed,
                        ValidationVerdict& verdict, const std::string& prefix = "") {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            add(verdict, "unknown_key", "unknown key '" + prefix + it.key() + "'");
        }
    }
}

std::optional<workspace::EditSpec> parse_edit_spec(const Json& obj, ValidationVerdict& verdict) {
    if (!obj.is_object()) {
        add(verdict, "wrong_type", "field 'edit' must be an object");
        return std::nullopt;
    }
    workspace::EditSpec spec;
    std::string op_name;
    if (!want_string(obj, "op", verdict, &op_name)) return std::nullopt;
    auto op = workspace::edit_op_from_name(op_name);
    if (!op) {
        add(verdict, "bad_value", "unknown edit op '" + op_name + "'");
        return std::nullopt;
    }
    spec.op = *op;

    std::vector<std::string> allowed = {"op"};
    using Op = workspace::EditSpec::Op;
    const bool has_content = spec.op == Op::create || spec.op == Op::write ||
                             spec.op == Op::append || spec.op == Op::insert_cell ||
                             spec.op == Op::replace_cell;
    if (has_content) {
        allowed.push_back("content");
        std::string content;
        const bool required = spec.op != Op::create;
        if (want_string(obj, "content", verdict, &content, required)) {
            spec.content = content;
        } else if (required) {
            return std::nullopt;
        }
    }
    if (spec.op == Op::create) {
        allowed.push_back("kind");
        std::string kind_name;
        if (want_string(obj, "kind", verdict, &kind_name, false)) {
            auto kind = workspace::node_kind_from_name(kind_name);
            if (!kind) {
                add(verdict, "bad_value", "unknown node kind '" + kind_name + "'");
                return std::nullopt;
            }
            spec.kind = *kind;
        }
    }
    if (spec.op == Op::insert_cell || spec.op == Op::replace_cell) {
        allowed.push_back("cell_index");
        std::int64_t index = 0;
        if (!want_int(obj, "cell_index", verdict, &index)) return std::nullopt;
        spec.cell_index = static_cast<int>(index);
    }
    check_unknown_keys(obj, allowed, verdict, "edit.");
    return spec;
}

Json edit_spec_to_json(const workspace::EditSpec& spec) {
    using Op = workspace::EditSpec::Op;
    Json j;
    j["op"] = workspace::edit_op_name(spec.op);
    if (spec.op == Op::create) {
        j["kind"] = workspace::node_kind_name(spec.kind);
        j["content"] = spec.content;
    } else if (spec.op == Op::write || spec.op == Op::append) {
        j["content"] = spec.content;
    } else if (spec.op == Op::insert_cell || spec.op == Op::replace_cell) {
        j["content"] = spec.content;
        j["cell_index"] = spec.cell_index;
    }
    return j;
}

}  // namespace

const char* Action::tool_name() const {
    return std::visit(
        overloaded{[](const OpenFile&) { return "open_file"; },
                   [](const Edit&) { return "edit"; },
                   [](const CreateNode&) { return "create_node"; },
                   [](const RunCell&) { return "run_cell"; },
                   [](const RunScript&) { return "run_script"; },
                   [](const Poll&) { return "poll"; },
                   [](const Interrupt&) { return "interrupt"; },
                   [](const DeepThink&) { return "deep_think"; },
                   [](const Compact&) { return "compact"; },
                   [](const Wait&) { return "wait"; },
                   [](const SubmitFinalAnswer&) { return "submit_final_answer"; },
                   [](const SubmitForScoring&) { return "submit_for_scoring"; }},
        payload);
}

Json ValidationVerdict::to_json() const {
    Json j;
    j["accepted"] = accepted;
    Json arr = Json::array();
    for (const Violation& v : violations) {
        arr.push_back(Json{{"code", v.code}, {"message", v.message}});
    }
    j["violations"] = arr;
    return j;
}

ValidationVerdict ValidationVerdict::from_json(const Json& j) {
    ValidationVerdict verdict;
    verdict.accepted = j.value("accepted", false);
    for (const Json& v : j.value("violations", Json::array())) {
        verdict.violations.push_back({v.value("code", ""), v.value("message", "")});
    }
    return verdict;
}

const std::vector<std::string>& tool_names() { return kToolNames; }

ValidationResult validate(const std::string& raw_json, std::int64_t expected_turn) {
    ValidationResult result;
    ValidationVerdict& verdict = result.verdict;

    StrictParse parsed = parse_strict(raw_json);
    if (!parsed.value) {
        add(verdict, "malformed_json", "input is not well-formed JSON");
        return result;
    }
    const Json& root = *parsed.value;

    if (root.is_array()) {
        if (root.size() > 1) {
            add(verdict, "multiple_tools",
                "payload contains " + std::to_string(root.size()) + " tool objects");
        } else {
            add(verdict, "not_an_object", "top level must be a single action object");
        }
        return result;
    }
    if (!root.is_object()) {
        add(verdict, "not_an_object", "top level must be a single action object");
        return result;
    }
    if (parsed.duplicate_tool) {
        add(verdict, "multiple_tools", "payload declares 'tool' more than once");
    } else if (parsed.duplicate_key) {
        add(verdict, "duplicate_key", "payload repeats an object key");
    }

    std::string tool;
    if (!root.contains("tool")) {
        add(verdict, "missing_tool", "missing 'tool' key");
        return result;
    }
    if (!root.at("tool").is_string()) {
        add(verdict, "wrong_type", "field 'tool' must be a string");
        return result;
    }
    tool = root.at("tool").get<std::string>();
    if (std::find(kToolNames.begin(), kToolNames.end(), tool) == kToolNames.end()) {
        add(verdict, "unknown_tool", "unknown tool '" + tool + "'");
        return result;
    }

    Action action;
    std::int64_t turn_index = 0;
    if (want_int(root, "turn_index", verdict, &turn_index)) {
        action.turn_index = turn_index;
        if (turn_index != expected_turn) {
            add(verdict, "turn_mismatch",
                "turn_index " + std::to_string(turn_index) + " != expected " +
                    std::to_string(expected_turn));
        }
    }
    std::string rationale;
    if (want_string(root, "rationale", verdict, &rationale, false)) {
        action.rationale = rationale;
    }

    std::vector<std::string> allowed = {"tool", "turn_index", "rationale"};
    bool payload_ok = true;

    if (tool == "open_file") {
        allowed.push_back("path");
        OpenFile p;
        payload_ok = want_string(root, "path", verdict, &p.path);
        action.payload = std::move(p);
    } else if (tool == "edit") {
        allowed.insert(allowed.end(), {"path", "edit"});
        Edit p;
        payload_ok = want_string(root, "path", verdict, &p.path);
        if (!root.contains("edit")) {
            add(verdict, "missing_field", "missing field 'edit'");
            payload_ok = false;
        } else {
            auto spec = parse_edit_spec(root.at("edit"), verdict);
            if (spec) {
                p.edit = *spec;
            } else {
                payload_ok = false;
            }
        }
        action.payload = std::move(p);
    } else if (tool == "create_node") {
        allowed.insert(allowed.end(), {"path", "kind"});
        CreateNode p;
        payload_ok = want_string(root, "path", verdict, &p.path);
        std::string kind_name;
        if (want_string(root, "kind", verdict, &kind_name)) {
            auto kind = workspace::node_kind_from_name(kind_name);
            if (kind) {
                p.kind = *kind;
            } else {
                add(verdict, "bad_value", "unknown node kind '" + kind_name + "'");
                payload_ok = false;
            }
        } else {
            payload_ok = false;
        }
        action.payload = std::move(p);
    } else if (tool == "run_cell") {
        allowed.insert(allowed.end(), {"notebook", "cell_index"});
        RunCell p;
        payload_ok = want_string(root, "notebook", verdict, &p.notebook);
        std::int64_t index = 0;
        if (want_int(root, "cell_index", verdict, &index)) {
            if (index < 0) {
                add(verdict, "bad_value", "cell_index must be >= 0");
                payload_ok = false;
            }
            p.cell_index = static_cast<int>(index);
        } else {
            payload_ok = false;
        }
        action.payload = std::move(p);
    } else if (tool == "run_script") {
        allowed.insert(allowed.end(), {"path", "args"});
        RunScript p;
        payload_ok = want_string(root, "path", verdict, &p.path);
        if (root.contains("args") && !want_string_array(root, "args", verdict, &p.args, false)) {
            payload_ok = false;
        }
        action.payload = std::move(p);
    } else if (tool == "poll") {
        allowed.push_back("process_id");
        Poll p;
        payload_ok = want_string(root, "process_id", verdict, &p.process_id);
        action.payload = std::move(p);
    } else if (tool == "interrupt") {
        allowed.insert(allowed.end(), {"process_id", "reason"});
        Interrupt p;
        payload_ok = want_string(root, "process_id", verdict, &p.process_id);
        if (!want_string(root, "reason", verdict, &p.reason)) payload_ok = false;
        action.payload = std::move(p);
    } else if (tool == "deep_think") {
        allowed.insert(allowed.end(), {"question", "context_refs"});
        DeepThink p;
        payload_ok = want_string(root, "question", verdict, &p.question);
        if (root.contains("context_refs") &&
            !want_string_array(root, "context_refs", verdict, &p.context_refs, false)) {
            payload_ok = false;
        }
        action.payload = std::move(p);
    } else if (tool == "compact") {
        action.payload = Compact{};
    } else if (tool == "wait") {
        allowed.push_back("ticks");
        Wait p;
        std::int64_t ticks = 0;
        if (want_int(root, "ticks", verdict, &ticks)) {
            if (ticks < 0) {
                add(verdict, "bad_value", "ticks must be >= 0");
                payload_ok = false;
            }
            p.ticks = ticks;
        } else {
            payload_ok = false;
        }
        action.payload = std::move(p);
    } else if (tool == "submit_final_answer" || tool == "submit_for_scoring") {
        allowed.push_back("artifact_paths");
        std::vector<std::string> paths;
        payload_ok = want_string_array(root, "artifact_paths", verdict, &paths);
        if (tool == "submit_final_answer") {
            action.payload = SubmitFinalAnswer{std::move(paths)};
        } else {
            action.payload = SubmitForScoring{std::move(paths)};
        }
    }

    check_unknown_keys(root, allowed, verdict);
    (void)payload_ok;

    verdict.accepted = verdict.violations.empty();
    if (verdict.accepted) result.action = std::move(action);
    return result;
}

std::string canonicalize(const Action& action) {
    Json j;
    j["tool"] = action.tool_name();
    j["turn_index"] = action.turn_index;
    j["rationale"] = action.rationale;
    std::visit(overloaded{
                   [&](const OpenFile& p) { j["path"] = p.path; },
                   [&](const Edit& p) {
                       j["path"] = p.path;
                       j["edit"] = edit_spec_to_json(p.edit);
                   },
                   [&](const CreateNode& p) {
                       j["path"] = p.path;
                       j["kind"] = workspace::node_kind_name(p.kind);
                   },
                   [&](const RunCell& p) {
                       j["notebook"] = p.notebook;
                       j["cell_index"] = p.cell_index;
                   },
                   [&](const RunScript& p) {
                       j["path"] = p.path;
                       j["args"] = p.args;
                   },
                   [&](const Poll& p) { j["process_id"] = p.process_id; },
                   [&](const Interrupt& p) {
                       j["process_id"] = p.process_id;
                       j["reason"] = p.reason;
                   },
                   [&](const DeepThink& p) {
                       j["question"] = p.question;
                       j["context_refs"] = p.context_refs;
                   },
                   [&](const Compact&) {},
                   [&](const Wait& p) { j["ticks"] = p.ticks; },
                   [&](const SubmitFinalAnswer& p) { j["artifact_paths"] = p.artifact_paths; },
                   [&](const SubmitForScoring& p) { j["artifact_paths"] = p.artifact_paths; }},
               action.payload);
    return canonical_dump(j);
}

Json action_schema() {
    auto base_props = [](Json extra) {
        Json props = {{"tool", {{"type", "string"}}},
                      {"turn_index", {{"type", "integer"}}},
                      {"rationale", {{"type", "string"}}}};
        for (auto it = extra.begin(); it != extra.end(); ++it) props[it.key()] = it.value();
        return props;
    };
    auto variant = [&](const std::string& tool, Json extra_props, Json required_extra) {
        Json required = Json::array({"tool", "turn_index"});
        for (const auto& r : required_extra) required.push_back(r);
        Json v = {{"type", "object"},
                  {"properties", base_props(std::move(extra_props))},
                  {"required", required},
                  {"additionalProperties", false}};
        v["properties"]["tool"]["const"] = tool;
        return v;
    };
    const Json str = {{"type", "string"}};
    const Json str_array = {{"type", "array"}, {"items", {{"type", "string"}}}};
    const Json nonneg_int = {{"type", "integer"}, {"minimum", 0}};

    Json edit_spec = {
        {"type", "object"},
        {"properties",
         {{"op",
           {{"type", "string"},
            {"enum", {"create", "write", "append", "delete", "insert_cell", "replace_cell"}}}},
          {"kind",
           {{"type", "string"}, {"enum", {"file", "directory", "notebook", "script", "log"}}}},
          {"content", str},
          {"cell_index", nonneg_int}}},
        {"required", Json::array({"op"})},
        {"additionalProperties", false}};

    Json schema = {
        {"$schema", "http://json-schema.org/draft-07/schema#"},
        {"title", "Action"},
        {"description",
         "One structured command per turn. Exactly one tool object; unknown keys are rejected."},
        {"oneOf",
         Json::array(
             {variant("open_file", {{"path", str}}, Json::array({"path"})),
              variant("edit", {{"path", str}, {"edit", edit_spec}},
                      Json::array({"path", "edit"})),
              variant("create_node",
                      {{"path", str},
                       {"kind",
                        {{"type", "string"},
                         {"enum", {"file", "directory", "notebook", "script", "log"}}}}},
                      Json::array({"path", "kind"})),
              variant("run_cell", {{"notebook", str}, {"cell_index", nonneg_int}},
                      Json::array({"notebook", "cell_index"})),
              variant("run_script", {{"path", str}, {"args", str_array}},
                      Json::array({"path"})),
              variant("poll", {{"process_id", str}}, Json::array({"process_id"})),
              variant("interrupt", {{"process_id", str}, {"reason", str}},
                      Json::array({"process_id", "reason"})),
              variant("deep_think", {{"question", str}, {"context_refs", str_array}},
                      Json::array({"question"})),
              variant("compact", Json::object(), Json::array()),
              variant("wait", {{"ticks", nonneg_int}}, Json::array({"ticks"})),
              variant("submit_final_answer", {{"artifact_paths", str_array}},
                      Json::array({"artifact_paths"})),
              variant("submit_for_scoring", {{"artifact_paths", str_array}},
                      Json::array({"artifact_paths"}))})}};
    return schema;
}

}  // namespace agentrt::actions
