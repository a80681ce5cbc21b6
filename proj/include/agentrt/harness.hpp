#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "agentrt/actions.hpp"
#include "agentrt/advisors.hpp"
#include "agentrt/compaction.hpp"
#include "agentrt/config.hpp"
#include "agentrt/executor.hpp"
#include "agentrt/history.hpp"
#include "agentrt/policy.hpp"
#include "agentrt/workspace.hpp"

namespace agentrt::harness {

class GovernanceRefusal : public std::runtime_error {
public:
    explicit GovernanceRefusal(const std::string& message) : std::runtime_error(message) {}
};

enum class SubmissionPhase { none, submitted, validated, rejected };

std::string submission_phase_name(SubmissionPhase phase);

struct SubmissionState {
    SubmissionPhase phase = SubmissionPhase::none;
    std::vector<std::string> artifact_paths;
    std::int64_t turn = -1;
    std::string reject_reason;
};

struct RunOutcome {
    std::string task_id;
    std::uint64_t seed = 0;
    bool medal = false;
    std::string reason;
    std::int64_t turns_used = 0;
    Tick ticks_used = 0;

    Json to_json() const;
    static RunOutcome from_json(const Json& j);
};

// Pluggable submission validator; benchmark graders are unavailable, so the
// default checks artifact existence and CSV well-formedness.
class SubmissionValidator {
public:
    virtual ~SubmissionValidator() = default;
    // (passed, reason-on-failure)
    virtual std::pair<bool, std::string> validate(
        const std::vector<std::filesystem::path>& artifacts) = 0;
};

class ExistsValidator : public SubmissionValidator {
public:
    std::pair<bool, std::string> validate(
        const std::vector<std::filesystem::path>& artifacts) override;
};

class CsvFormatValidator : public SubmissionValidator {
public:
    std::pair<bool, std::string> validate(
        const std::vector<std::filesystem::path>& artifacts) override;
};

// Startup governance guard: in benchmark mode any network-requiring component
// (remote advisor endpoint, networked backend) is refused before the loop
// starts. Throws GovernanceRefusal; the refusal is recorded in the run dir.
void enforce_offline(const RunConfig& config, const policy::AdvisorConfig& advisors);

// The run driver. One turn = observe -> decide -> validate -> execute exactly
// one action (or record the rejection) -> evaluate interruptions -> persist ->
// compact if triggered.
class Runner {
public:
    Runner(RunConfig config, std::filesystem::path out_dir,
           std::unique_ptr<policy::Policy> policy_override = nullptr);
    ~Runner();

    bool done() const;
    const history::TurnRecord& step();
    RunOutcome finish();

    // The standardized submission endpoint; the submit_final_answer action
    // routes here. Direct calls after validation are refused like any other
    // double submission.
    Json submit_final_answer(const std::vector<std::string>& artifact_paths);

    const workspace::Workspace& workspace() const { return workspace_; }
    executor::Executor& executor_ref() { return *executor_; }
    const compaction::ContextView& context() const { return context_; }
    const history::HistoryLog& log() const { return *log_; }
    const SubmissionState& submission() const { return submission_; }
    Tick now() const;
    std::int64_t turn_index() const { return turn_index_; }

private:
    std::string execute_action(const actions::Action& action,
                               std::vector<std::string>& events);
    Json do_submission(const std::vector<std::string>& artifact_paths, bool scoring_alias,
                       std::vector<std::string>& events);
    void supervise(history::TurnRecord& record);
    void mirror_processes();
    bool maybe_compact(std::vector<std::string>& events);
    void shutdown();
    Tick budget_remaining() const;

    RunConfig config_;
    std::filesystem::path out_dir_;
    std::unique_ptr<Clock> clock_;
    workspace::Workspace workspace_;
    std::unique_ptr<executor::Executor> executor_;
    std::unique_ptr<policy::Policy> policy_;
    policy::AdvisorConfig advisors_;
    std::unique_ptr<SubmissionValidator> validator_;
    std::unique_ptr<history::HistoryLog> log_;
    compaction::ContextView context_;
    std::vector<policy::AdvisoryReview> advisories_;
    SubmissionState submission_;
    std::int64_t turn_index_ = 0;
    int compaction_seq_ = 0;
    bool deep_think_enabled_ = true;
    bool finished_ = false;
    std::string end_reason_;
    std::set<std::string> governance_flagged_;
};

// Full run: returns the outcome and leaves the run directory populated
// (full_history.json, IDE_state/, agent_metadata/, submission/, outcome.json,
// config.json, workspace/, workspace_seed/).
RunOutcome run(const RunConfig& config, const std::filesystem::path& out_dir);

struct ReplayReport {
    bool ok = false;
    std::int64_t turns_compared = 0;
    std::optional<history::Divergence> divergence;
};

// Re-drives a recorded run from its log, feeding recorded policy outputs back
// verbatim, and compares per-turn digests, results, and decisions.
ReplayReport replay_run(const std::filesystem::path& run_dir,
                        const std::filesystem::path& scratch_dir);

}  // namespace agentrt::harness
