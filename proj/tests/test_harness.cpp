#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "agentrt/harness.hpp"

using namespace agentrt;
using namespace agentrt::harness;

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

std::string act(std::int64_t turn, Json fields) {
    fields["turn_index"] = turn;
    return fields.dump();
}

Json edit_create(const std::string& path, const std::string& content,
                 const std::string& kind = "file") {
    return Json{{"tool", "edit"},
                {"path", path},
                {"edit", Json{{"op", "create"}, {"kind", kind}, {"content", content}}}};
}

RunConfig base_config() {
    RunConfig config;
    config.task_id = "fixture-task";
    config.budget.max_ticks = 200;
    config.offline = true;
    config.fsync_log = false;  // unit tests favor speed; durability is covered separately
    config.advisors = {{"adv-1", "", "Check the data split.", 0},
                       {"adv-2", "", "Check the data split.", 0}};
    return config;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("scripted run ending in a validated submission earns the medal") {
    RunConfig config = base_config();
    std::vector<std::string> steps;
    steps.push_back(act(0, edit_create("submission.csv", "id,score\n1,0.5\n2,0.7\n")));
    for (int i = 1; i < 9; ++i) {
        steps.push_back(act(i, Json{{"tool", "edit"},
                                    {"path", "submission.csv"},
                                    {"edit", Json{{"op", "append"}, {"content", ""}}}}));
    }
    steps.push_back(act(9, Json{{"tool", "submit_final_answer"},
                                {"artifact_paths", Json::array({"submission.csv"})}}));
    config.policy.steps = steps;

    const fs::path dir = fresh_dir("agentrt_run_medal");
    const RunOutcome outcome = run(config, dir);

    CHECK(outcome.medal);
    CHECK(outcome.reason == "validated submission");
    CHECK(outcome.turns_used == 10);

    const auto log = history::HistoryLog::load(dir);
    REQUIRE(log.records().size() == 10);
    for (const auto& r : log.records()) {
        CHECK(r.validation.accepted);  // every scripted step validated
    }
    CHECK(fs::exists(dir / "submission" / "submission.csv"));
    CHECK(fs::exists(dir / "IDE_state.txt"));
    CHECK(fs::exists(dir / "outcome.json"));

    // Submission gate, grep-level: the medal iff a validated event in the log.
    CHECK(slurp(dir / "full_history.json").find("submission_validated") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("budget exhaustion interrupts training with reason shutdown") {
    RunConfig config = base_config();
    config.budget.max_ticks = 6;
    std::vector<std::string> steps;
    steps.push_back(act(0, edit_create("train.py", "sleep 100\nprint done\n", "script")));
    steps.push_back(act(1, Json{{"tool", "run_script"}, {"path", "train.py"}}));
    for (int i = 2; i < 12; ++i) {
        steps.push_back(act(i, Json{{"tool", "wait"}, {"ticks", 0}}));
    }
    config.policy.steps = steps;

    const fs::path dir = fresh_dir("agentrt_run_budget");
    const RunOutcome outcome = run(config, dir);
    CHECK_FALSE(outcome.medal);
    CHECK(outcome.reason == "budget");
    CHECK(outcome.ticks_used >= 6);

    // Shutdown hygiene: the final snapshot shows nothing still executing.
    const std::string final_state = slurp(dir / "IDE_state.txt");
    CHECK(final_state.find("running") == std::string::npos);
    CHECK(final_state.find("executing") == std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("empty scripted policy falls back to an immediate submission attempt") {
    RunConfig config = base_config();
    config.policy.steps = {};
    config.policy.fallback_artifacts = {"missing.csv"};
    config.budget.max_ticks = 3;

    const fs::path dir = fresh_dir("agentrt_run_empty");
    const RunOutcome outcome = run(config, dir);
    CHECK_FALSE(outcome.medal);

    const auto log = history::HistoryLog::load(dir);
    REQUIRE(!log.records().empty());
    const Json result = Json::parse(log.records()[0].result_canonical);
    CHECK(result["tool"] == "submit_final_answer");
    CHECK(result["submission"] == "rejected");
    CHECK(result["reason"].get<std::string>().find("missing_artifact") == 0);
    fs::remove_all(dir);
}

TEST_CASE("submission lifecycle: reject, retry, validate, refuse double") {
    RunConfig config = base_config();
    config.budget.max_ticks = 50;
    config.policy.steps = {
        act(0, Json{{"tool", "submit_final_answer"},
                    {"artifact_paths", Json::array({"absent.csv"})}}),
        act(1, edit_create("good.csv", "a,b\n1,2\n")),
        act(2, Json{{"tool", "submit_for_scoring"},
                    {"artifact_paths", Json::array({"good.csv"})}}),
        act(3, Json{{"tool", "submit_final_answer"},
                    {"artifact_paths", Json::array({"good.csv"})}}),
    };

    const fs::path dir = fresh_dir("agentrt_run_lifecycle");
    Runner runner(config, dir);

    const auto& rejected = runner.step();
    CHECK(Json::parse(rejected.result_canonical)["submission"] == "rejected");
    CHECK_FALSE(runner.done());  // run continues after rejection

    runner.step();  // create the artifact

    const auto& alias = runner.step();
    const Json alias_result = Json::parse(alias.result_canonical);
    CHECK(alias_result["tool"] == "submit_for_scoring");
    CHECK(alias_result["note"] == "non-scoring no-op");
    CHECK_FALSE(alias_result.contains("submission"));  // no score feedback, no state change
    CHECK(runner.submission().phase == SubmissionPhase::rejected);

    const auto& validated = runner.step();
    CHECK(Json::parse(validated.result_canonical)["submission"] == "validated");
    CHECK(runner.done());

    // The endpoint refuses anything after validation.
    const Json refused = runner.submit_final_answer({"good.csv"});
    CHECK(refused["submission"] == "refused");
    CHECK(refused["error_code"] == "already_validated");

    const RunOutcome outcome = runner.finish();
    CHECK(outcome.medal);
    fs::remove_all(dir);
}

TEST_CASE("csv validator rejects malformed artifacts and the run continues") {
    RunConfig config = base_config();
    config.budget.max_ticks = 10;
    config.policy.steps = {
        act(0, edit_create("bad.csv", "a,b\n1,2,3\n")),  // inconsistent columns
        act(1, Json{{"tool", "submit_final_answer"},
                    {"artifact_paths", Json::array({"bad.csv"})}}),
        act(2, Json{{"tool", "wait"}, {"ticks", 0}}),
    };

    const fs::path dir = fresh_dir("agentrt_run_badcsv");
    Runner runner(config, dir);
    runner.step();
    const auto& rejected = runner.step();
    const Json result = Json::parse(rejected.result_canonical);
    CHECK(result["submission"] == "rejected");
    CHECK(result["reason"].get<std::string>().find("csv_malformed") == 0);
    CHECK_FALSE(runner.done());
    runner.step();
    runner.finish();
    fs::remove_all(dir);
}

TEST_CASE("remote advisor endpoints are refused at startup") {
    RunConfig config = base_config();
    config.advisors.push_back({"cloud", "https://api.example.com/v1", "", 0});

    const fs::path dir = fresh_dir("agentrt_run_refusal");
    CHECK_THROWS_AS(Runner(config, dir), GovernanceRefusal);

    const RunOutcome outcome = run(config, dir);
    CHECK_FALSE(outcome.medal);
    CHECK(outcome.reason.rfind("governance_refusal", 0) == 0);
    CHECK(fs::exists(dir / "refusal.txt"));
    fs::remove_all(dir);

    RunConfig networked = base_config();
    networked.backend_networked = true;
    CHECK_THROWS_AS(Runner(networked, fresh_dir("agentrt_run_refusal2")), GovernanceRefusal);

    // The same config is fine outside benchmark mode.
    config.offline = false;
    const fs::path dir2 = fresh_dir("agentrt_run_refusal3");
    config.policy.steps = {};
    config.policy.fallback_artifacts = {};
    config.budget.max_ticks = 2;
    CHECK_NOTHROW(Runner(config, dir2));
    fs::remove_all(dir2);
}

TEST_CASE("a net directive gets the process interrupted with reason governance") {
    RunConfig config = base_config();
    config.budget.max_ticks = 20;
    config.policy.steps = {
        act(0, edit_create("sneaky.py", "sleep 2\nnet\nsleep 60\n", "script")),
        act(1, Json{{"tool", "run_script"}, {"path", "sneaky.py"}}),
        act(2, Json{{"tool", "wait"}, {"ticks", 2}}),
        act(3, Json{{"tool", "poll"}, {"process_id", "p1"}}),
        act(4, Json{{"tool", "wait"}, {"ticks", 0}}),
    };

    const fs::path dir = fresh_dir("agentrt_run_net");
    Runner runner(config, dir);
    runner.step();
    runner.step();
    runner.step();  // wait 2: the net directive fires during this window

    bool flagged = false;
    for (const auto& r : runner.log().records()) {
        for (const auto& e : r.events) {
            if (e.find("governance_interrupt process=p1") != std::string::npos) flagged = true;
        }
    }
    CHECK(flagged);

    const auto& polled = runner.step();
    const Json result = Json::parse(polled.result_canonical);
    CHECK(result["poll"]["status"] == "interrupted");
    CHECK(runner.executor_ref().interrupt_reason("p1") == "governance");

    runner.step();
    const RunOutcome outcome = runner.finish();
    CHECK_FALSE(outcome.medal);
    CHECK(slurp(dir / "full_history.json").find("governance_interrupt") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("non-blocking: edits proceed while a sleeper runs") {
    RunConfig config = base_config();
    config.budget.max_ticks = 150;
    std::vector<std::string> steps;
    steps.push_back(act(0, edit_create("sleeper.py", "sleep 100\n", "script")));
    steps.push_back(act(1, Json{{"tool", "run_script"}, {"path", "sleeper.py"}}));
    steps.push_back(act(2, edit_create("notes.txt", "plan\n")));
    for (int i = 3; i < 28; ++i) {
        steps.push_back(act(i, Json{{"tool", "edit"},
                                    {"path", "notes.txt"},
                                    {"edit", Json{{"op", "append"},
                                                  {"content", "step " + std::to_string(i) + "\n"}}}}));
    }
    steps.push_back(act(28, Json{{"tool", "poll"}, {"process_id", "p1"}}));
    config.policy.steps = steps;
    config.policy.fallback_artifacts = {"notes.txt"};
    config.validator = "exists";

    const fs::path dir = fresh_dir("agentrt_run_nonblocking");
    const RunOutcome outcome = run(config, dir);
    CHECK(outcome.medal);  // fallback submission of notes.txt validates via exists

    const auto log = history::HistoryLog::load(dir);
    // Sleeper started on turn 1; count executed turns that completed before it
    // could have finished (start tick + 100).
    const Json start_result = Json::parse(log.records()[1].result_canonical);
    REQUIRE(start_result["tool"] == "run_script");
    const Tick started = log.records()[1].tick_end;
    int interleaved = 0;
    for (const auto& r : log.records()) {
        if (r.index <= 1) continue;
        if (r.action_canonical && r.tick_end < started + 100) ++interleaved;
    }
    CHECK(interleaved >= 20);

    // The poll at turn 28 still sees it executing.
    const Json poll_result = Json::parse(log.records()[28].result_canonical);
    CHECK(poll_result["poll"]["status"] == "still_executing");
    fs::remove_all(dir);
}

TEST_CASE("one executed action per accepted turn, none per rejected turn") {
    RunConfig config = base_config();
    config.budget.max_ticks = 20;
    config.policy.steps = {
        act(0, Json{{"tool", "wait"}, {"ticks", 0}}),
        "{not json",
        act(2, Json{{"tool", "wait"}, {"ticks", 0}}),
        R"([{"tool":"wait","ticks":0,"turn_index":3},{"tool":"compact","turn_index":3}])",
        act(4, Json{{"tool", "wait"}, {"ticks", 0}}),
    };
    config.policy.fallback_artifacts = {};

    const fs::path dir = fresh_dir("agentrt_run_oneaction");
    Runner runner(config, dir);
    for (int i = 0; i < 5; ++i) runner.step();

    const auto& records = runner.log().records();
    REQUIRE(records.size() == 5);
    CHECK(records[0].action_canonical.has_value());
    CHECK_FALSE(records[1].action_canonical.has_value());
    CHECK(records[1].result_canonical.empty());
    CHECK(records[2].action_canonical.has_value());
    CHECK_FALSE(records[3].action_canonical.has_value());
    CHECK(records[4].action_canonical.has_value());
    runner.finish();
    fs::remove_all(dir);
}

TEST_CASE("context compaction triggers during a run and archives its files") {
    RunConfig config = base_config();
    config.budget.max_ticks = 60;
    config.context_budget.max_units = 150;
    config.context_budget.trigger_fraction = 0.8;
    config.compaction.summary_cap_units = 100;
    config.compaction.output_tail_units = 10;
    std::vector<std::string> steps;
    for (int i = 0; i < 24; ++i) {
        steps.push_back(act(i, Json{{"tool", "wait"}, {"ticks", 0},
                                    {"rationale", std::string(40, 'r')}}));
    }
    config.policy.steps = steps;

    const fs::path dir = fresh_dir("agentrt_run_compact");
    Runner runner(config, dir);
    for (int i = 0; i < 24 && !runner.done(); ++i) runner.step();

    const auto& compactions = runner.log().compactions();
    REQUIRE(!compactions.empty());
    CHECK(compactions[0].applied);
    CHECK(runner.context().measure() <
          config.context_budget.trigger_threshold());
    CHECK(fs::exists(dir / "agent_metadata" / "compaction_0_prompt.txt"));
    CHECK(fs::exists(dir / "agent_metadata" / "compaction_0_summary.txt"));
    runner.finish();
    fs::remove_all(dir);
}

TEST_CASE("deep_think action archives a review and reaches the advisories") {
    RunConfig config = base_config();
    config.budget.max_ticks = 10;
    config.policy.steps = {
        act(0, Json{{"tool", "deep_think"},
                    {"question", "is the validation split leaking?"}}),
        act(1, Json{{"tool", "wait"}, {"ticks", 0}}),
    };

    const fs::path dir = fresh_dir("agentrt_run_deepthink");
    Runner runner(config, dir);
    const auto& record = runner.step();
    const Json result = Json::parse(record.result_canonical);
    CHECK(result["status"] == "ok");
    CHECK(result["advisors"] == 2);
    CHECK(fs::exists(dir / "agent_metadata" / "deep_think_0.txt"));

    // isolation verdict lands in run metadata and on disk
    CHECK(runner.log().metadata().isolation_verdict == "pass");
    CHECK(slurp(dir / "full_history.json").find("\"isolation_verdict\": \"pass\"") !=
          std::string::npos);
    runner.step();
    runner.finish();
    fs::remove_all(dir);
}

TEST_CASE("record-then-replay reproduces the run; a flipped byte is caught") {
    RunConfig config = base_config();
    config.budget.max_ticks = 60;
    std::vector<std::string> steps;
    steps.push_back(act(0, edit_create("train.py", "print start\nloss 1.0\nsleep 4\nloss 0.5\nsleep 4\nloss 0.4999\nsleep 20\nexit 0\n", "script")));
    steps.push_back(act(1, Json{{"tool", "run_script"}, {"path", "train.py"}}));
    steps.push_back(act(2, Json{{"tool", "wait"}, {"ticks", 5}}));
    steps.push_back(act(3, Json{{"tool", "poll"}, {"process_id", "p1"}}));
    steps.push_back(act(4, edit_create("submission.csv", "id,y\n1,2\n")));
    steps.push_back(act(5, Json{{"tool", "interrupt"},
                                {"process_id", "p1"},
                                {"reason", "convergence"}}));
    steps.push_back(act(6, Json{{"tool", "poll"}, {"process_id", "p1"}}));
    steps.push_back(act(7, Json{{"tool", "submit_final_answer"},
                                {"artifact_paths", Json::array({"submission.csv"})}}));
    config.policy.steps = steps;

    const fs::path dir = fresh_dir("agentrt_run_replay");
    const RunOutcome outcome = run(config, dir);
    CHECK(outcome.medal);

    const fs::path scratch = fresh_dir("agentrt_run_replay_scratch");
    const ReplayReport report = replay_run(dir, scratch);
    CHECK(report.ok);
    CHECK_FALSE(report.divergence.has_value());
    CHECK(report.turns_compared == 8);

    // Inject a single flipped digest byte at turn 5 and expect detection there.
    Json doc = Json::parse(slurp(dir / "full_history.json"));
    std::string digest = doc["records"][5]["snapshot_digest"];
    digest[0] = digest[0] == 'a' ? 'b' : 'a';
    doc["records"][5]["snapshot_digest"] = digest;
    {
        std::ofstream out(dir / "full_history.json", std::ios::binary | std::ios::trunc);
        out << doc.dump(2);
    }
    const fs::path scratch2 = fresh_dir("agentrt_run_replay_scratch2");
    const ReplayReport tampered = replay_run(dir, scratch2);
    CHECK_FALSE(tampered.ok);
    REQUIRE(tampered.divergence.has_value());
    CHECK(tampered.divergence->turn == 5);
    CHECK(tampered.divergence->field == "snapshot_digest");

    fs::remove_all(dir);
    fs::remove_all(scratch);
    fs::remove_all(scratch2);
}

namespace {

class TimeoutPolicy : public policy::Policy {
public:
    std::string decide(const policy::PolicyInput&) override { throw policy::PolicyTimeout(); }
};

}  // namespace

TEST_CASE("a policy timeout records a rejected turn and the run continues") {
    RunConfig config = base_config();
    config.budget.max_ticks = 3;
    const fs::path dir = fresh_dir("agentrt_run_timeout");
    Runner runner(config, dir, std::make_unique<TimeoutPolicy>());

    const auto& record = runner.step();
    CHECK_FALSE(record.validation.accepted);
    REQUIRE(record.validation.violations.size() == 1);
    CHECK(record.validation.violations[0].code == "policy_timeout");
    CHECK_FALSE(runner.done());
    runner.step();
    runner.step();
    CHECK(runner.done());  // ended by budget, not by the timeouts
    const RunOutcome outcome = runner.finish();
    CHECK(outcome.reason == "budget");
    fs::remove_all(dir);
}

TEST_CASE("subprocess backend drives real scripts through the same loop") {
    RunConfig config = base_config();
    config.backend = executor::BackendKind::subprocess;
    config.budget.max_ticks = 30;
    config.validator = "exists";
    config.policy.steps = {
        act(0, edit_create("hello.sh", "echo hi from the shell\n", "script")),
        act(1, Json{{"tool", "run_script"}, {"path", "hello.sh"}}),
        act(2, Json{{"tool", "wait"}, {"ticks", 1}}),  // real one-second wait
        act(3, Json{{"tool", "poll"}, {"process_id", "p1"}}),
    };
    config.policy.fallback_artifacts = {"hello.sh"};

    const fs::path dir = fresh_dir("agentrt_run_subprocess");
    const RunOutcome outcome = run(config, dir);
    CHECK(outcome.medal);

    const auto log = history::HistoryLog::load(dir);
    const Json poll_result = Json::parse(log.records()[3].result_canonical);
    CHECK(poll_result["poll"]["status"] == "completed");
    CHECK(poll_result["poll"]["output"] == "hi from the shell\n");
    fs::remove_all(dir);
}

TEST_CASE("workspace seed directory is copied and loaded") {
    const fs::path seed = fresh_dir("agentrt_seed_src");
    fs::create_directories(seed / "data");
    {
        std::ofstream out(seed / "data" / "train.csv");
        out << "x,y\n1,2\n";
    }
    RunConfig config = base_config();
    config.workspace_seed = seed;
    config.budget.max_ticks = 4;
    config.policy.steps = {act(0, Json{{"tool", "open_file"}, {"path", "data/train.csv"}})};
    config.policy.fallback_artifacts = {"data/train.csv"};
    config.validator = "exists";

    const fs::path dir = fresh_dir("agentrt_run_seeded");
    const RunOutcome outcome = run(config, dir);
    CHECK(outcome.medal);
    CHECK(fs::exists(dir / "workspace_seed" / "data" / "train.csv"));
    CHECK(fs::exists(dir / "workspace" / "data" / "train.csv"));

    const auto log = history::HistoryLog::load(dir);
    const Json opened = Json::parse(log.records()[0].result_canonical);
    CHECK(opened["status"] == "ok");
    fs::remove_all(dir);
    fs::remove_all(seed);
}
