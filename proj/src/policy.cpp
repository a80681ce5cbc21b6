#include "agentrt/policy.hpp"

#include "agentrt/actions.hpp"

namespace agentrt::policy {

namespace {

std::int64_t current_turn(const PolicyInput& input) {
    return input.snapshot ? input.snapshot->turn_index : 0;
}

}  // namespace

ScriptedPolicy::ScriptedPolicy(std::vector<std::string> steps,
                               std::vector<std::string> fallback_artifacts)
    : steps_(std::move(steps)), fallback_artifacts_(std::move(fallback_artifacts)) {}

std::string ScriptedPolicy::decide(const PolicyInput& input) {
    if (position_ < steps_.size()) {
        return steps_[position_++];
    }
    actions::Action fallback;
    fallback.turn_index = current_turn(input);
    fallback.rationale = "script exhausted; submitting final answer";
    fallback.payload = actions::SubmitFinalAnswer{fallback_artifacts_};
    return actions::canonicalize(fallback);
}

MockLlmPolicy::MockLlmPolicy(std::uint64_t seed, bool include_terminal)
    : rng_(seed), include_terminal_(include_terminal) {}

std::string MockLlmPolicy::decide(const PolicyInput& input) {
    static const std::vector<std::string> paths = {"notes.txt", "train.py", "model.ipynb",
                                                   "data.csv", "run.log"};
    auto pick_path = [&]() { return paths[rng_() % paths.size()]; };

    actions::Action action;
    action.turn_index = current_turn(input);
    action.rationale = "mock decision " + std::to_string(action.turn_index);

    const int variant_count = include_terminal_ ? 12 : 10;
    switch (rng_() % static_cast<std::uint64_t>(variant_count)) {
        case 0:
            action.payload = actions::OpenFile{pick_path()};
            break;
        case 1: {
            workspace::EditSpec spec;
            spec.op = workspace::EditSpec::Op::append;
            spec.content = "x" + std::to_string(rng_() % 1000) + "\n";
            action.payload = actions::Edit{pick_path(), spec};
            break;
        }
        case 2:
            action.payload = actions::CreateNode{
                "gen_" + std::to_string(rng_() % 10000) + ".txt", workspace::NodeKind::file};
            break;
        case 3:
            action.payload =
                actions::RunCell{"model.ipynb", static_cast<int>(rng_() % 4)};
            break;
        case 4:
            action.payload = actions::RunScript{"train.py", {}};
            break;
        case 5:
            action.payload = actions::Poll{"p" + std::to_string(1 + rng_() % 8)};
            break;
        case 6:
            action.payload =
                actions::Interrupt{"p" + std::to_string(1 + rng_() % 8), "convergence"};
            break;
        case 7:
            action.payload = actions::DeepThink{
                "how to improve the validation metric", {pick_path()}};
            break;
        case 8:
            action.payload = actions::Compact{};
            break;
        case 9:
            action.payload = actions::Wait{static_cast<std::int64_t>(rng_() % 3)};
            break;
        case 10:
            action.payload = actions::SubmitForScoring{{"submission.csv"}};
            break;
        default:
            action.payload = actions::SubmitFinalAnswer{{"submission.csv"}};
            break;
    }
    return actions::canonicalize(action);
}

ReplayPolicy::ReplayPolicy(std::vector<std::string> recorded_outputs)
    : recorded_outputs_(std::move(recorded_outputs)) {}

std::string ReplayPolicy::decide(const PolicyInput&) {
    if (position_ < recorded_outputs_.size()) {
        return recorded_outputs_[position_++];
    }
    return "";  // past the recorded run; the loop rejects and the driver stops
}

}  // namespace agentrt::policy
