#include "agentrt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "agentrt/hash.hpp"
#include "agentrt/snapshot.hpp"

namespace fs = std::filesystem;

namespace agentrt::harness {

std::string submission_phase_name(SubmissionPhase phase) {
    switch (phase) {
        case SubmissionPhase::none: return "none";
        case SubmissionPhase::submitted: return "submitted";
        case SubmissionPhase::validated: return "validated";
        case SubmissionPhase::rejected: return "rejected";
    }
    return "none";
}

Json RunOutcome::to_json() const {
    Json j;
    j["task_id"] = task_id;
    j["seed"] = seed;
    j["medal"] = medal;
    j["reason"] = reason;
    j["turns_used"] = turns_used;
    j["ticks_used"] = ticks_used;
    return j;
}

RunOutcome RunOutcome::from_json(const Json& j) {
    RunOutcome o;
    o.task_id = j.value("task_id", "");
    o.seed = j.value("seed", std::uint64_t{0});
    o.medal = j.value("medal", false);
    o.reason = j.value("reason", "");
    o.turns_used = j.value("turns_used", std::int64_t{0});
    o.ticks_used = j.value("ticks_used", std::int64_t{0});
    return o;
}

std::pair<bool, std::string> ExistsValidator::validate(const std::vector<fs::path>& artifacts) {
    for (const fs::path& p : artifacts) {
        if (!fs::exists(p)) return {false, "missing artifact " + p.filename().string()};
    }
    return {true, ""};
}

std::pair<bool, std::string> CsvFormatValidator::validate(
    const std::vector<fs::path>& artifacts) {
    for (const fs::path& p : artifacts) {
        if (!fs::exists(p)) return {false, "missing artifact " + p.filename().string()};
        if (p.extension() != ".csv") continue;
        std::ifstream in(p, std::ios::binary);
        std::string line;
        std::int64_t columns = -1;
        std::int64_t rows = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const std::int64_t count = std::count(line.begin(), line.end(), ',') + 1;
            if (columns < 0) {
                columns = count;
            } else if (count != columns) {
                return {false, "csv_malformed: inconsistent column count in " +
                                   p.filename().string()};
            }
            ++rows;
        }
        if (rows == 0) return {false, "csv_malformed: empty " + p.filename().string()};
    }
    return {true, ""};
}

void enforce_offline(const RunConfig& config, const policy::AdvisorConfig& advisors) {
    if (!config.offline) return;
    const policy::IsolationVerdict verdict = policy::verify_isolation(advisors);
    if (!verdict.pass) {
        std::string detail;
        for (const auto& v : verdict.violations) detail += v + "; ";
        throw GovernanceRefusal("remote advisor endpoint in offline mode: " + detail);
    }
    if (config.backend_networked) {
        throw GovernanceRefusal("execution backend declares network access in offline mode");
    }
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string wallclock_now_string() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

workspace::CellState to_cell_state(const std::string& status) {
    if (status == "executing") return workspace::CellState::executing;
    if (status == "completed") return workspace::CellState::completed;
    if (status == "failed") return workspace::CellState::failed;
    return workspace::CellState::interrupted;
}

void copy_tree(const fs::path& from, const fs::path& to) {
    fs::create_directories(to);
    fs::copy(from, to, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
}

std::unique_ptr<policy::Policy> build_policy(const PolicySpec& spec) {
    if (spec.kind == PolicySpec::Kind::mock_llm) {
        return std::make_unique<policy::MockLlmPolicy>(spec.seed, spec.include_terminal);
    }
    return std::make_unique<policy::ScriptedPolicy>(spec.steps, spec.fallback_artifacts);
}

}  // namespace

Runner::Runner(RunConfig config, fs::path out_dir,
               std::unique_ptr<policy::Policy> policy_override)
    : config_(std::move(config)), out_dir_(std::move(out_dir)) {
    if (!config_.budget.valid()) throw ConfigError("budget must be positive");
    if (!config_.interruption.valid()) {
        throw ConfigError("interruption policy out of range (window_w >= 2, "
                          "rel_epsilon > 0, error_repeat_k >= 2)");
    }
    if (!config_.limits.valid()) throw ConfigError("resource limits must be positive");

    for (const AdvisorSpec& spec : config_.advisors) {
        advisors_.advisors.push_back(std::make_shared<policy::MockAdvisor>(
            spec.id, spec.fixed_text, spec.delay_ticks, spec.endpoint));
    }
    advisors_.per_advisor_timeout = config_.advisor_timeout;
    advisors_.offline_required = config_.offline;

    enforce_offline(config_, advisors_);

    fs::create_directories(out_dir_);
    save_config(config_, out_dir_ / "config.json");

    // Pristine seed copy first, then the live tree the run mutates.
    if (!config_.workspace_seed.empty() && fs::exists(config_.workspace_seed)) {
        if (!fs::exists(out_dir_ / "workspace_seed")) {
            copy_tree(config_.workspace_seed, out_dir_ / "workspace_seed");
        }
        workspace_.load_tree(out_dir_ / "workspace_seed");
    }
    workspace_.save_tree(out_dir_ / "workspace");

    clock_ = config_.backend == executor::BackendKind::simulated
                 ? std::unique_ptr<Clock>(std::make_unique<SimClock>())
                 : std::unique_ptr<Clock>(std::make_unique<WallClock>());
    executor_ = std::make_unique<executor::Executor>(*clock_, config_.backend,
                                                     out_dir_ / "workspace");

    policy_ = policy_override ? std::move(policy_override) : build_policy(config_.policy);

    if (config_.validator == "exists") {
        validator_ = std::make_unique<ExistsValidator>();
    } else {
        validator_ = std::make_unique<CsvFormatValidator>();
    }

    history::RunMetadata metadata;
    metadata.task_id = config_.task_id;
    metadata.seed = config_.seed;
    metadata.config_digest = config_.digest();
    metadata.budget_max_ticks = config_.budget.max_ticks;
    metadata.budget_max_wall_seconds = config_.budget.max_wall_seconds;
    metadata.started_at_wallclock = wallclock_now_string();
    if (config_.offline || !advisors_.advisors.empty()) {
        const auto verdict = policy::verify_isolation(advisors_);
        metadata.isolation_verdict = verdict.pass ? "pass" : "fail";
        if (!verdict.pass) deep_think_enabled_ = false;
    }
    log_ = std::make_unique<history::HistoryLog>(
        history::HistoryLog::create(out_dir_, std::move(metadata), config_.fsync_log));
}

Runner::~Runner() = default;

Tick Runner::now() const { return clock_->now(); }

Tick Runner::budget_remaining() const {
    return std::max<Tick>(0, config_.budget.max_ticks - clock_->now());
}

bool Runner::done() const {
    if (finished_) return true;
    if (submission_.phase == SubmissionPhase::validated) return true;
    if (clock_->now() >= config_.budget.max_ticks) return true;
    if (config_.backend == executor::BackendKind::subprocess &&
        clock_->now() >= config_.budget.max_wall_seconds) {
        return true;
    }
    return false;
}

void Runner::mirror_processes() {
    for (const auto& view : executor_->view()) {
        if (!view.is_cell) continue;
        if (view.live) {
            workspace_.set_cell_state(view.path, view.cell_index,
                                      workspace::CellState::executing, std::nullopt);
        } else {
            const executor::PollResult result = executor_->poll(view.process_id);
            workspace_.set_cell_state(view.path, view.cell_index,
                                      to_cell_state(view.status), result.output);
        }
    }
}

const history::TurnRecord& Runner::step() {
    if (done()) throw std::logic_error("step() after the run ended");

    history::TurnRecord record;
    record.index = turn_index_;
    record.tick_start = clock_->now();
    if (config_.backend == executor::BackendKind::simulated) {
        clock_->advance(1);  // fixed per-turn cost; real runs pay wall time instead
    }

    mirror_processes();
    const workspace::IDESnapshot snapshot =
        workspace::render_snapshot(workspace_, executor_->view(), turn_index_);
    log_->write_snapshot_file(turn_index_, snapshot.rendered_text);
    record.snapshot_digest = content_digest(snapshot.rendered_text);

    policy::PolicyInput input;
    input.context = context_.text();
    input.snapshot = &snapshot;
    input.advisories = &advisories_;
    input.budget_remaining = budget_remaining();

    std::string raw;
    bool timed_out = false;
    try {
        raw = policy_->decide(input);
    } catch (const policy::PolicyTimeout&) {
        timed_out = true;
    }
    record.raw_policy_output = raw;

    std::string context_body;
    std::string context_verbose;
    if (timed_out) {
        record.validation.accepted = false;
        record.validation.violations.push_back(
            {"policy_timeout", "policy did not answer within its deadline"});
        context_body = "policy timeout; turn rejected";
    } else {
        actions::ValidationResult validated = actions::validate(raw, turn_index_);
        record.validation = validated.verdict;
        if (validated.verdict.accepted) {
            record.action_canonical = actions::canonicalize(*validated.action);
            const std::string result = execute_action(*validated.action, record.events);
            record.result_canonical = result;

            Json result_json = Json::parse(result, nullptr, false);
            context_body = std::string(validated.action->tool_name()) + " -> " +
                           (result_json.is_object() ? result_json.value("status", "ok")
                                                    : std::string("ok"));
            if (result_json.is_object()) {
                if (result_json.contains("process_id")) {
                    context_body +=
                        " process " + result_json["process_id"].get<std::string>();
                }
                if (result_json.contains("path")) {
                    context_body += " path " + result_json["path"].get<std::string>();
                }
                if (result_json.contains("submission")) {
                    context_body += "; submission status: " +
                                    result_json["submission"].get<std::string>();
                }
                if (result_json.contains("error_code")) {
                    context_body +=
                        " (" + result_json["error_code"].get<std::string>() + ")";
                }
                if (result_json.contains("poll")) {
                    const Json& poll = result_json["poll"];
                    context_body += " status " + poll.value("status", "");
                    context_verbose = poll.value("output", poll.value("current_output", ""));
                }
            }
        } else {
            // Rejected: nothing executed, nothing mutated; the rejection itself
            // is the only thing recorded.
            std::string codes;
            for (const auto& v : record.validation.violations) {
                codes += (codes.empty() ? "" : ",") + v.code;
            }
            context_body = "rejected action (" + codes + ")";
        }
    }

    supervise(record);

    record.tick_end = clock_->now();
    log_->append(record);

    compaction::ContextEntry entry;
    entry.turn_index = turn_index_;
    entry.body = context_body;
    for (const auto& d : record.decisions) {
        entry.body += "\nadvisory: " + interruption::reason_name(d.reason) + " (" +
                      d.evidence + ")";
    }
    for (const auto& e : record.events) entry.body += "\nevent: " + e;
    entry.verbose_output = context_verbose;
    context_.append(std::move(entry));

    maybe_compact(record.events);

    ++turn_index_;
    return log_->records().back();
}

void Runner::supervise(history::TurnRecord& record) {
    // Resource limits are enforced automatically (the violation interrupts the
    // process); convergence and non-convergence decisions are advisory and
    // surfaced to the policy through the context.
    const std::vector<executor::LimitViolation> violations = executor_->enforce_limits();
    for (const auto& violation : violations) {
        interruption::InterruptDecision decision;
        decision.fire = true;
        decision.reason = interruption::Reason::resource_limit;
        decision.evidence = violation.limit + " limit: " + violation.evidence;
        record.decisions.push_back(decision);
        record.events.push_back("resource_limit_interrupt process=" + violation.process_id);
    }

    for (const std::string& id : executor_->live_process_ids()) {
        const executor::PollResult poll = executor_->poll(id);
        const std::vector<std::string> lines =
            split_lines(poll.current_output.value_or(""));
        const interruption::InterruptDecision decision =
            interruption::evaluate(poll, std::nullopt, lines, config_.interruption);
        if (decision.fire) record.decisions.push_back(decision);
    }

    if (config_.offline) {
        for (const auto& view : executor_->view()) {
            if (!executor_->net_attempted(view.process_id)) continue;
            if (governance_flagged_.count(view.process_id)) continue;
            governance_flagged_.insert(view.process_id);
            executor_->interrupt(view.process_id, "governance");
            record.events.push_back("governance_interrupt process=" + view.process_id +
                                    " reason=net_access_attempt");
        }
    }
}

std::string Runner::execute_action(const actions::Action& action,
                                   std::vector<std::string>& events) {
    Json result;
    result["tool"] = action.tool_name();
    try {
        std::visit(
            overloaded{
                [&](const actions::OpenFile& p) {
                    workspace_.open_file(p.path);
                    result["status"] = "ok";
                    result["path"] = p.path;
                },
                [&](const actions::Edit& p) {
                    workspace_.apply_edit(p.path, p.edit, clock_->now());
                    result["status"] = "ok";
                    result["path"] = p.path;
                    result["op"] = workspace::edit_op_name(p.edit.op);
                },
                [&](const actions::CreateNode& p) {
                    workspace::EditSpec spec;
                    spec.op = workspace::EditSpec::Op::create;
                    spec.kind = p.kind;
                    workspace_.apply_edit(p.path, spec, clock_->now());
                    result["status"] = "ok";
                    result["path"] = p.path;
                    result["kind"] = workspace::node_kind_name(p.kind);
                },
                [&](const actions::RunCell& p) {
                    executor::Origin origin;
                    origin.is_cell = true;
                    origin.path = p.notebook;
                    origin.cell_index = p.cell_index;
                    const auto handle =
                        executor_->start(workspace_, origin, config_.limits);
                    workspace_.set_cell_state(p.notebook, p.cell_index,
                                              workspace::CellState::executing, std::nullopt);
                    result["status"] = "ok";
                    result["process_id"] = handle.process_id;
                    result["path"] = p.notebook;
                    result["cell_index"] = p.cell_index;
                },
                [&](const actions::RunScript& p) {
                    if (config_.backend == executor::BackendKind::subprocess) {
                        workspace_.save_tree(out_dir_ / "workspace");
                    }
                    executor::Origin origin;
                    origin.path = p.path;
                    const auto handle =
                        executor_->start(workspace_, origin, config_.limits, p.args);
                    result["status"] = "ok";
                    result["process_id"] = handle.process_id;
                    result["path"] = p.path;
                },
                [&](const actions::Poll& p) {
                    const executor::PollResult poll = executor_->poll(p.process_id);
                    result["status"] = "ok";
                    result["process_id"] = p.process_id;
                    result["poll"] = poll.to_json();
                },
                [&](const actions::Interrupt& p) {
                    const executor::ExecutionStatus status =
                        executor_->interrupt(p.process_id, p.reason);
                    result["status"] = "ok";
                    result["process_id"] = p.process_id;
                    result["result_status"] = executor::status_kind_name(status.kind);
                },
                [&](const actions::DeepThink& p) {
                    if (!deep_think_enabled_) {
                        result["status"] = "error";
                        result["error_code"] = "deep_think_disabled";
                        result["error"] = "isolation verdict failed; deep_think disabled";
                        return;
                    }
                    if (advisors_.advisors.empty()) {
                        result["status"] = "error";
                        result["error_code"] = "no_advisors";
                        result["error"] = "no advisors configured";
                        return;
                    }
                    const auto review =
                        policy::deep_think(p.question, p.context_refs, advisors_,
                                           turn_index_, out_dir_ / "agent_metadata");
                    advisories_.push_back(review);
                    result["status"] = "ok";
                    result["advisors"] =
                        static_cast<std::int64_t>(review.advisor_outputs.size());
                    result["archive"] =
                        "agent_metadata/deep_think_" + std::to_string(turn_index_) + ".txt";
                },
                [&](const actions::Compact&) {
                    if (context_.measure() < config_.context_budget.trigger_threshold()) {
                        result["status"] = "ok";
                        result["applied"] = false;
                        result["skipped"] = "below_threshold";
                        return;
                    }
                    const bool applied = maybe_compact(events);
                    result["status"] = "ok";
                    result["applied"] = applied;
                },
                [&](const actions::Wait& p) {
                    clock_->advance(p.ticks);
                    result["status"] = "ok";
                    result["ticks"] = p.ticks;
                },
                [&](const actions::SubmitFinalAnswer& p) {
                    result = do_submission(p.artifact_paths, false, events);
                },
                [&](const actions::SubmitForScoring& p) {
                    result = do_submission(p.artifact_paths, true, events);
                }},
            action.payload);
    } catch (const workspace::WorkspaceError& e) {
        result["status"] = "error";
        result["error_code"] = e.code();
        result["error"] = e.what();
    } catch (const executor::ExecError& e) {
        result["status"] = "error";
        result["error_code"] = e.code();
        result["error"] = e.what();
    } catch (const history::HistoryError&) {
        throw;  // persistence faults are fatal for the run
    } catch (const std::exception& e) {
        result["status"] = "error";
        result["error_code"] = "internal";
        result["error"] = e.what();
    }
    return canonical_dump(result);
}

Json Runner::submit_final_answer(const std::vector<std::string>& artifact_paths) {
    std::vector<std::string> events;
    return do_submission(artifact_paths, false, events);
}

Json Runner::do_submission(const std::vector<std::string>& artifact_paths,
                           bool scoring_alias, std::vector<std::string>& events) {
    Json result;
    result["tool"] = scoring_alias ? "submit_for_scoring" : "submit_final_answer";

    if (scoring_alias) {
        // Legacy endpoint: accepted, logged, and deliberately non-functional.
        // It neither stages artifacts nor yields any score feedback.
        result["status"] = "ok";
        result["note"] = "non-scoring no-op";
        events.push_back("submit_for_scoring alias invoked (non-scoring no-op)");
        return result;
    }

    if (submission_.phase == SubmissionPhase::validated) {
        result["status"] = "error";
        result["error_code"] = "already_validated";
        result["submission"] = "refused";
        events.push_back("submission_refused: already validated");
        return result;
    }

    submission_.phase = SubmissionPhase::submitted;
    submission_.artifact_paths = artifact_paths;
    submission_.turn = turn_index_;
    events.push_back("submission_submitted turn=" + std::to_string(turn_index_));

    // Stage artifacts out of the workspace into the run's submission dir.
    std::vector<fs::path> staged;
    std::string missing;
    for (const std::string& raw : artifact_paths) {
        const auto normalized = workspace::normalize_path(raw);
        const workspace::WorkspaceNode* node =
            normalized ? workspace_.find(*normalized) : nullptr;
        if (!node) {
            missing = raw;
            break;
        }
        const fs::path target = out_dir_ / "submission" / *normalized;
        fs::create_directories(target.parent_path());
        std::ofstream out(target, std::ios::binary | std::ios::trunc);
        if (node->kind == workspace::NodeKind::notebook) {
            out << workspace::serialize_notebook(node->cells);
        } else {
            out << node->content;
        }
        staged.push_back(target);
    }

    if (!missing.empty()) {
        submission_.phase = SubmissionPhase::rejected;
        submission_.reject_reason = "missing_artifact";
        result["status"] = "ok";
        result["submission"] = "rejected";
        result["reason"] = "missing_artifact: " + missing;
        events.push_back("submission_rejected reason=missing_artifact");
        return result;
    }

    const auto [passed, why] = validator_->validate(staged);
    if (passed) {
        submission_.phase = SubmissionPhase::validated;
        result["status"] = "ok";
        result["submission"] = "validated";
        events.push_back("submission_validated turn=" + std::to_string(turn_index_));
    } else {
        submission_.phase = SubmissionPhase::rejected;
        submission_.reject_reason = why;
        result["status"] = "ok";
        result["submission"] = "rejected";
        result["reason"] = why;
        events.push_back("submission_rejected reason=" + why);
    }
    return result;
}

bool Runner::maybe_compact(std::vector<std::string>&) {
    if (context_.measure() < config_.context_budget.trigger_threshold()) return false;
    const std::int64_t last = log_->records().empty()
                                  ? -1
                                  : log_->records().back().index;
    const compaction::HistoryFacts facts = history::collect_facts(*log_, 0, last);
    compaction::ExtractiveSummarizer summarizer;
    compaction::CompactionRecord rec =
        compaction::compact(context_, config_.context_budget, config_.compaction,
                            summarizer, facts, compaction_seq_++,
                            out_dir_ / "agent_metadata");
    const bool applied = rec.applied;
    log_->append_compaction(std::move(rec));
    return applied;
}

void Runner::shutdown() {
    executor_->interrupt_all("shutdown");
    mirror_processes();
    const workspace::IDESnapshot final_snapshot =
        workspace::render_snapshot(workspace_, executor_->view(), turn_index_);
    log_->write_snapshot_file(turn_index_, final_snapshot.rendered_text);
    log_->finalize();
    workspace_.save_tree(out_dir_ / "workspace");
}

RunOutcome Runner::finish() {
    if (finished_) throw std::logic_error("finish() called twice");
    finished_ = true;

    if (submission_.phase == SubmissionPhase::validated) {
        end_reason_ = "validated submission";
    } else if (clock_->now() >= config_.budget.max_ticks) {
        end_reason_ = "budget";
    } else {
        end_reason_ = "stopped";
    }

    shutdown();

    RunOutcome outcome;
    outcome.task_id = config_.task_id;
    outcome.seed = config_.seed;
    outcome.medal = submission_.phase == SubmissionPhase::validated;
    outcome.reason = end_reason_;
    outcome.turns_used = static_cast<std::int64_t>(log_->records().size());
    outcome.ticks_used = clock_->now();

    std::ofstream out(out_dir_ / "outcome.json", std::ios::binary | std::ios::trunc);
    out << outcome.to_json().dump(2) << "\n";
    return outcome;
}

RunOutcome run(const RunConfig& config, const fs::path& out_dir) {
    try {
        Runner runner(config, out_dir);
        while (!runner.done()) runner.step();
        return runner.finish();
    } catch (const GovernanceRefusal& e) {
        fs::create_directories(out_dir);
        RunOutcome outcome;
        outcome.task_id = config.task_id;
        outcome.seed = config.seed;
        outcome.medal = false;
        outcome.reason = std::string("governance_refusal: ") + e.what();
        std::ofstream out(out_dir / "outcome.json", std::ios::binary | std::ios::trunc);
        out << outcome.to_json().dump(2) << "\n";
        std::ofstream refusal(out_dir / "refusal.txt", std::ios::binary | std::ios::trunc);
        refusal << e.what() << "\n";
        return outcome;
    }
}

ReplayReport replay_run(const fs::path& run_dir, const fs::path& scratch_dir) {
    ReplayReport report;

    RunConfig config = load_config(run_dir / "config.json");
    const history::HistoryLog original = history::HistoryLog::load(run_dir);

    std::vector<std::string> recorded;
    recorded.reserve(original.records().size());
    for (const auto& r : original.records()) recorded.push_back(r.raw_policy_output);

    if (fs::exists(run_dir / "workspace_seed")) {
        config.workspace_seed = run_dir / "workspace_seed";
    }
    config.fsync_log = false;  // scratch rerun; durability is the original's job

    Runner runner(config, scratch_dir,
                  std::make_unique<policy::ReplayPolicy>(std::move(recorded)));
    while (!runner.done() &&
           runner.turn_index() < static_cast<std::int64_t>(original.records().size())) {
        runner.step();
    }
    runner.finish();

    const history::HistoryLog rerun = history::HistoryLog::load(scratch_dir);
    report.turns_compared = static_cast<std::int64_t>(
        std::min(original.records().size(), rerun.records().size()));
    report.divergence = history::find_divergence(original, rerun);
    report.ok = !report.divergence.has_value();
    return report;
}

}  // namespace agentrt::harness
