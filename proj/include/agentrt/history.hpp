#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "agentrt/actions.hpp"
#include "agentrt/compaction.hpp"
#include "agentrt/interruption.hpp"
#include "agentrt/json_util.hpp"

namespace agentrt::history {

class HistoryError : public std::runtime_error {
public:
    HistoryError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

struct RunMetadata {
    std::string task_id;
    std::uint64_t seed = 0;
    std::string config_digest;
    std::int64_t budget_max_ticks = 0;
    std::int64_t budget_max_wall_seconds = 86400;
    std::string isolation_verdict;    // "pass" | "fail" | ""
    std::string started_at_wallclock; // stored, excluded from replay comparison

    Json to_json() const;
    static RunMetadata from_json(const Json& j);
};

struct TurnRecord {
    std::int64_t index = 0;
    std::string snapshot_digest;
    std::string raw_policy_output;
    actions::ValidationVerdict validation;
    std::optional<std::string> action_canonical;  // accepted turns only
    std::string result_canonical;                 // empty on rejected turns
    std::vector<interruption::InterruptDecision> decisions;
    std::vector<std::string> events;
    Tick tick_start = 0;
    Tick tick_end = 0;

    Json to_json() const;
    static TurnRecord from_json(const Json& j);
};

// Event-sourced, append-only run log. Every append atomically rewrites
// full_history.json (tmp + rename) and flushes before returning, so a kill at
// any point reloads to exactly the appended prefix.
class HistoryLog {
public:
    HistoryLog() = default;
    static HistoryLog create(const std::filesystem::path& run_dir, RunMetadata metadata,
                             bool fsync_writes = true);
    static HistoryLog load(const std::filesystem::path& run_dir);

    const RunMetadata& metadata() const { return metadata_; }
    void set_isolation_verdict(const std::string& verdict);
    const std::vector<TurnRecord>& records() const { return records_; }
    const std::vector<compaction::CompactionRecord>& compactions() const { return compactions_; }
    const std::filesystem::path& run_dir() const { return run_dir_; }

    // Requires record.index == records().size(); flushes before returning.
    void append(TurnRecord record);
    void append_compaction(compaction::CompactionRecord record);

    // Writes IDE_state/turn_NNNN.txt with exactly the rendered bytes; a second
    // write for the same turn is refused.
    void write_snapshot_file(std::int64_t turn_index, const std::string& rendered_text);
    std::filesystem::path snapshot_path(std::int64_t turn_index) const;
    std::string read_snapshot_file(std::int64_t turn_index) const;

    // Copies the final turn's snapshot to IDE_state.txt.
    void finalize();

    Json to_json() const;

private:
    void persist();

    RunMetadata metadata_;
    std::vector<TurnRecord> records_;
    std::vector<compaction::CompactionRecord> compactions_;
    std::filesystem::path run_dir_;
    bool fsync_writes_ = true;
};

struct Divergence {
    std::int64_t turn = -1;
    std::string field;
};

// First per-turn difference between two logs over replay-relevant fields
// (digests, actions, results, decisions, ticks); wall-clock metadata is
// excluded. nullopt when equivalent.
std::optional<Divergence> find_divergence(const HistoryLog& original, const HistoryLog& rerun);

// Entity extraction over a turn range for compaction validation: processes
// started but not terminal, paths edited, latest submission status.
compaction::HistoryFacts collect_facts(const HistoryLog& log, std::int64_t first,
                                       std::int64_t last);

}  // namespace agentrt::history
