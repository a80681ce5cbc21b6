#include "agentrt/history.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace agentrt::history {

Json RunMetadata::to_json() const {
    Json j;
    j["task_id"] = task_id;
    j["seed"] = seed;
    j["config_digest"] = config_digest;
    j["budget"] = Json{{"max_ticks", budget_max_ticks},
                       {"max_wall_seconds", budget_max_wall_seconds}};
    j["isolation_verdict"] = isolation_verdict;
    j["started_at_wallclock"] = started_at_wallclock;
    return j;
}

RunMetadata RunMetadata::from_json(const Json& j) {
    RunMetadata m;
    m.task_id = j.value("task_id", "");
    m.seed = j.value("seed", std::uint64_t{0});
    m.config_digest = j.value("config_digest", "");
    if (j.contains("budget")) {
        m.budget_max_ticks = j["budget"].value("max_ticks", std::int64_t{0});
        m.budget_max_wall_seconds = j["budget"].value("max_wall_seconds", std::int64_t{86400});
    }
    m.isolation_verdict = j.value("isolation_verdict", "");
    m.started_at_wallclock = j.value("started_at_wallclock", "");
    return m;
}

Json TurnRecord::to_json() const {
    Json j;
    j["index"] = index;
    j["snapshot_digest"] = snapshot_digest;
    j["raw_policy_output"] = raw_policy_output;
    j["validation"] = validation.to_json();
    if (action_canonical) j["action"] = *action_canonical;
    j["result"] = result_canonical;
    Json ds = Json::array();
    for (const auto& d : decisions) ds.push_back(d.to_json());
    j["decisions"] = ds;
    j["events"] = events;
    j["tick_start"] = tick_start;
    j["tick_end"] = tick_end;
    return j;
}

TurnRecord TurnRecord::from_json(const Json& j) {
    TurnRecord r;
    r.index = j.value("index", std::int64_t{0});
    r.snapshot_digest = j.value("snapshot_digest", "");
    r.raw_policy_output = j.value("raw_policy_output", "");
    if (j.contains("validation")) {
        r.validation = actions::ValidationVerdict::from_json(j["validation"]);
    }
    if (j.contains("action")) r.action_canonical = j["action"].get<std::string>();
    r.result_canonical = j.value("result", "");
    for (const Json& d : j.value("decisions", Json::array())) {
        interruption::InterruptDecision decision;
        decision.fire = d.value("fire", false);
        const std::string reason = d.value("reason", "none");
        if (reason == "convergence") decision.reason = interruption::Reason::convergence;
        else if (reason == "resource_limit") decision.reason = interruption::Reason::resource_limit;
        else if (reason == "non_convergent") decision.reason = interruption::Reason::non_convergent;
        decision.evidence = d.value("evidence", "");
        r.decisions.push_back(std::move(decision));
    }
    for (const Json& e : j.value("events", Json::array())) {
        r.events.push_back(e.get<std::string>());
    }
    r.tick_start = j.value("tick_start", std::int64_t{0});
    r.tick_end = j.value("tick_end", std::int64_t{0});
    return r;
}

namespace {

void write_file_durably(const fs::path& target, const std::string& bytes, bool do_fsync) {
    const fs::path tmp = target.string() + ".tmp";
    {
        const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd < 0) throw HistoryError("disk_write", "cannot open " + tmp.string());
        size_t written = 0;
        while (written < bytes.size()) {
            const ssize_t n = ::write(fd, bytes.data() + written, bytes.size() - written);
            if (n <= 0) {
                ::close(fd);
                throw HistoryError("disk_write", "write failed for " + tmp.string());
            }
            written += static_cast<size_t>(n);
        }
        if (do_fsync && ::fsync(fd) != 0) {
            ::close(fd);
            throw HistoryError("disk_write", "fsync failed for " + tmp.string());
        }
        ::close(fd);
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw HistoryError("disk_write", "rename failed for " + target.string());
    if (do_fsync) {
        const int dfd = ::open(target.parent_path().c_str(), O_RDONLY | O_DIRECTORY);
        if (dfd >= 0) {
            ::fsync(dfd);
            ::close(dfd);
        }
    }
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw HistoryError("disk_read", "cannot read " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

HistoryLog HistoryLog::create(const fs::path& run_dir, RunMetadata metadata,
                              bool fsync_writes) {
    HistoryLog log;
    log.metadata_ = std::move(metadata);
    log.run_dir_ = run_dir;
    log.fsync_writes_ = fsync_writes;
    fs::create_directories(run_dir);
    fs::create_directories(run_dir / "IDE_state");
    fs::create_directories(run_dir / "agent_metadata");
    log.persist();
    return log;
}

HistoryLog HistoryLog::load(const fs::path& run_dir) {
    HistoryLog log;
    log.run_dir_ = run_dir;
    const Json doc = Json::parse(read_file(run_dir / "full_history.json"));
    log.metadata_ = RunMetadata::from_json(doc.value("metadata", Json::object()));
    for (const Json& r : doc.value("records", Json::array())) {
        log.records_.push_back(TurnRecord::from_json(r));
    }
    for (const Json& c : doc.value("compactions", Json::array())) {
        log.compactions_.push_back(compaction::CompactionRecord::from_json(c));
    }
    return log;
}

void HistoryLog::set_isolation_verdict(const std::string& verdict) {
    metadata_.isolation_verdict = verdict;
    persist();
}

void HistoryLog::append(TurnRecord record) {
    if (record.index != static_cast<std::int64_t>(records_.size())) {
        throw HistoryError("index_gap",
                           "append index " + std::to_string(record.index) + " != expected " +
                               std::to_string(records_.size()));
    }
    records_.push_back(std::move(record));
    persist();
}

void HistoryLog::append_compaction(compaction::CompactionRecord record) {
    compactions_.push_back(std::move(record));
    persist();
}

Json HistoryLog::to_json() const {
    Json doc;
    doc["metadata"] = metadata_.to_json();
    Json records = Json::array();
    for (const auto& r : records_) records.push_back(r.to_json());
    doc["records"] = records;
    Json compactions = Json::array();
    for (const auto& c : compactions_) compactions.push_back(c.to_json());
    doc["compactions"] = compactions;
    return doc;
}

void HistoryLog::persist() {
    if (run_dir_.empty()) return;
    write_file_durably(run_dir_ / "full_history.json", to_json().dump(2) + "\n", fsync_writes_);
}

fs::path HistoryLog::snapshot_path(std::int64_t turn_index) const {
    char name[32];
    std::snprintf(name, sizeof(name), "turn_%04lld.txt",
                  static_cast<long long>(turn_index));
    return run_dir_ / "IDE_state" / name;
}

void HistoryLog::write_snapshot_file(std::int64_t turn_index, const std::string& rendered_text) {
    const fs::path target = snapshot_path(turn_index);
    if (fs::exists(target)) {
        throw HistoryError("snapshot_exists",
                           "snapshot for turn " + std::to_string(turn_index) +
                               " already written");
    }
    write_file_durably(target, rendered_text, fsync_writes_);
}

std::string HistoryLog::read_snapshot_file(std::int64_t turn_index) const {
    return read_file(snapshot_path(turn_index));
}

void HistoryLog::finalize() {
    // Copy the highest-numbered per-turn snapshot to the flat final-state file.
    const fs::path dir = run_dir_ / "IDE_state";
    if (!fs::exists(dir)) return;
    fs::path last;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (last.empty() || entry.path().filename() > last.filename()) {
            last = entry.path();
        }
    }
    if (!last.empty()) {
        write_file_durably(run_dir_ / "IDE_state.txt", read_file(last), fsync_writes_);
    }
}

namespace {

std::string decisions_digest(const std::vector<interruption::InterruptDecision>& ds) {
    Json arr = Json::array();
    for (const auto& d : ds) arr.push_back(d.to_json());
    return arr.dump();
}

}  // namespace

std::optional<Divergence> find_divergence(const HistoryLog& original, const HistoryLog& rerun) {
    const auto& a = original.records();
    const auto& b = rerun.records();
    const size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) {
        const auto turn = static_cast<std::int64_t>(i);
        if (a[i].snapshot_digest != b[i].snapshot_digest) {
            return Divergence{turn, "snapshot_digest"};
        }
        if (a[i].validation.accepted != b[i].validation.accepted) {
            return Divergence{turn, "validation"};
        }
        if (a[i].action_canonical != b[i].action_canonical) return Divergence{turn, "action"};
        if (a[i].result_canonical != b[i].result_canonical) return Divergence{turn, "result"};
        if (decisions_digest(a[i].decisions) != decisions_digest(b[i].decisions)) {
            return Divergence{turn, "decisions"};
        }
        if (a[i].events != b[i].events) return Divergence{turn, "events"};
        if (a[i].tick_start != b[i].tick_start || a[i].tick_end != b[i].tick_end) {
            return Divergence{turn, "ticks"};
        }
    }
    if (a.size() != b.size()) {
        return Divergence{static_cast<std::int64_t>(n), "record_count"};
    }
    if (original.compactions().size() != rerun.compactions().size()) {
        return Divergence{-1, "compactions"};
    }
    for (size_t i = 0; i < original.compactions().size(); ++i) {
        const auto& ca = original.compactions()[i];
        const auto& cb = rerun.compactions()[i];
        if (ca.applied != cb.applied || ca.summary != cb.summary || ca.prompt != cb.prompt) {
            return Divergence{-1, "compactions"};
        }
    }
    return std::nullopt;
}

compaction::HistoryFacts collect_facts(const HistoryLog& log, std::int64_t first,
                                       std::int64_t last) {
    compaction::HistoryFacts facts;
    std::vector<std::string> started_order;
    std::set<std::string> started;
    std::set<std::string> terminal;
    std::set<std::string> edited_seen;

    for (const auto& record : log.records()) {
        if (record.index < first || record.index > last) continue;
        if (record.result_canonical.empty()) continue;
        Json result = Json::parse(record.result_canonical, nullptr, false);
        if (result.is_discarded() || !result.is_object()) continue;
        const std::string tool = result.value("tool", "");
        if ((tool == "run_cell" || tool == "run_script") &&
            result.value("status", "") == "ok" && result.contains("process_id")) {
            const auto id = result["process_id"].get<std::string>();
            if (started.insert(id).second) started_order.push_back(id);
        }
        if (tool == "poll" && result.contains("poll")) {
            const std::string status = result["poll"].value("status", "");
            if (status == "completed" || status == "failed" || status == "interrupted") {
                terminal.insert(result.value("process_id", ""));
            }
        }
        if (tool == "interrupt" && result.value("status", "") == "ok") {
            terminal.insert(result.value("process_id", ""));
        }
        if ((tool == "edit" || tool == "create_node") && result.value("status", "") == "ok") {
            const std::string path = result.value("path", "");
            if (!path.empty() && edited_seen.insert(path).second) {
                facts.edited_paths.push_back(path);
            }
        }
        if ((tool == "submit_final_answer" || tool == "submit_for_scoring") &&
            result.contains("submission")) {
            facts.submission_status = result["submission"].get<std::string>();
        }
    }
    for (const auto& id : started_order) {
        if (!terminal.count(id)) facts.live_process_ids.push_back(id);
    }
    return facts;
}

}  // namespace agentrt::history
