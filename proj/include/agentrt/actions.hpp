#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "agentrt/json_util.hpp"
#include "agentrt/workspace.hpp"

namespace agentrt::actions {

struct OpenFile {
    std::string path;
};
struct Edit {
    std::string path;
    workspace::EditSpec edit;
};
struct CreateNode {
    std::string path;
    workspace::NodeKind kind = workspace::NodeKind::file;
};
struct RunCell {
    std::string notebook;
    int cell_index = 0;
};
struct RunScript {
    std::string path;
    std::vector<std::string> args;
};
struct Poll {
    std::string process_id;
};
struct Interrupt {
    std::string process_id;
    std::string reason;
};
struct DeepThink {
    std::string question;
    std::vector<std::string> context_refs;
};
struct Compact {};
struct Wait {
    std::int64_t ticks = 0;
};
struct SubmitFinalAnswer {
    std::vector<std::string> artifact_paths;
};
// Legacy alias of submit_final_answer; accepted and logged but never scores.
struct SubmitForScoring {
    std::vector<std::string> artifact_paths;
};

using Payload = std::variant<OpenFile, Edit, CreateNode, RunCell, RunScript, Poll,
                             Interrupt, DeepThink, Compact, Wait, SubmitFinalAnswer,
                             SubmitForScoring>;

struct Action {
    std::int64_t turn_index = 0;
    std::string rationale;
    Payload payload;

    const char* tool_name() const;
};

struct Violation {
    std::string code;
    std::string message;
};

struct ValidationVerdict {
    bool accepted = false;
    std::vector<Violation> violations;

    Json to_json() const;
    static ValidationVerdict from_json(const Json& j);
};

struct ValidationResult {
    ValidationVerdict verdict;
    std::optional<Action> action;  // present iff verdict.accepted
};

// Total over arbitrary bytes: every failure is a verdict, never a fault. Lists
// every violation found. Unknown top-level keys are rejected.
ValidationResult validate(const std::string& raw_json, std::int64_t expected_turn);

// Deterministic serialization: sorted keys, integer-only numbers, LF-free.
// canonicalize(parse(canonicalize(a))) == canonicalize(a).
std::string canonicalize(const Action& action);

// The closed tool vocabulary, in schema order.
const std::vector<std::string>& tool_names();

// Machine-readable JSON Schema for the wire format (shipped in schemas/).
Json action_schema();

}  // namespace agentrt::actions
