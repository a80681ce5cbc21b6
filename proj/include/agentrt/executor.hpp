#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "agentrt/clock.hpp"
#include "agentrt/json_util.hpp"
#include "agentrt/snapshot.hpp"
#include "agentrt/workspace.hpp"

namespace agentrt::executor {

class ExecError : public std::runtime_error {
public:
    ExecError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

struct ResourceLimits {
    std::int64_t max_memory_bytes = 1ll << 30;
    std::int64_t max_runtime_seconds = 3600;
    std::int64_t max_output_bytes = 1 << 20;

    bool valid() const {
        return max_memory_bytes > 0 && max_runtime_seconds > 0 && max_output_bytes > 0;
    }
};

struct Origin {
    bool is_cell = false;
    std::string path;
    int cell_index = -1;

    std::string describe() const;
};

enum class StatusKind { idle, executing, completed, failed, interrupted };

std::string status_kind_name(StatusKind kind);

struct ExecutionStatus {
    StatusKind kind = StatusKind::idle;
    std::string detail;  // error text (failed) or reason (interrupted)
};

inline constexpr const char* kNoOutputSentinel = "[No Output]";
inline constexpr const char* kTruncationMarker = "\xE2\x80\xA6[truncated]";  // "…[truncated]"

struct PollResult {
    std::string status;  // completed | still_executing | failed | interrupted
    std::optional<std::string> output;          // terminal only
    std::optional<std::string> current_output;  // live only
    std::int64_t execution_duration_seconds = 0;

    Json to_json() const;
    bool operator==(const PollResult&) const = default;
};

struct ProcessHandle {
    std::string process_id;
    Origin origin;
    Tick started_at = 0;
    ResourceLimits limits;
};

struct LimitViolation {
    std::string process_id;
    std::string limit;  // "runtime" | "memory"
    std::string evidence;
};

// Per-process execution engine behind the executor. Implementations must make
// refresh() safe to call repeatedly and status publication tear-free.
class ProcessRuntime {
public:
    virtual ~ProcessRuntime() = default;
    virtual void refresh(Tick now) = 0;
    virtual StatusKind status() const = 0;
    virtual const std::string& output() const = 0;  // captured bytes so far
    virtual std::string error() const = 0;
    virtual std::int64_t memory_bytes() const = 0;
    virtual bool net_attempted() const = 0;
    virtual Tick terminal_elapsed() const = 0;  // process-relative seconds, terminal only
    virtual void request_stop(const std::string& reason, Tick now) = 0;
};

enum class BackendKind { simulated, subprocess };

// Asynchronous cell/script execution with a non-blocking poll contract.
// start() returns immediately; poll() never blocks and reports a consistent
// point-in-time result; terminal results are frozen so repeated polls are
// byte-identical.
class Executor {
public:
    Executor(Clock& clock, BackendKind backend, std::filesystem::path workspace_root = {});

    // Preconditions checked here: origin exists, limits valid, and for cells
    // the target cell is idle with no sibling cell executing.
    ProcessHandle start(const workspace::Workspace& ws, const Origin& origin,
                        const ResourceLimits& limits,
                        const std::vector<std::string>& args = {});

    PollResult poll(const std::string& process_id);

    ExecutionStatus interrupt(const std::string& process_id, const std::string& reason);

    // At most one violation per handle per limit kind; a violation interrupts
    // the process with reason resource_limit. Memory/runtime use strict '>'.
    std::optional<LimitViolation> enforce_limits(const std::string& process_id);
    std::vector<LimitViolation> enforce_limits();

    // Consistent point-in-time view of every process (live and terminal).
    std::vector<workspace::ProcessView> view();

    bool notebook_busy(const std::string& notebook_path);
    std::vector<std::string> live_process_ids();
    bool net_attempted(const std::string& process_id) const;
    const ProcessHandle& handle(const std::string& process_id) const;
    std::string interrupt_reason(const std::string& process_id) const;

    // Stops every live process (used at shutdown).
    void interrupt_all(const std::string& reason);

    Tick grace_period_seconds = 5;  // subprocess backend: TERM -> KILL delay

private:
    struct Entry {
        ProcessHandle handle;
        std::unique_ptr<ProcessRuntime> runtime;
        StatusKind last_status = StatusKind::executing;
        std::string stop_reason;
        bool stop_requested = false;
        std::string truncated_output;     // capped at limits.max_output_bytes
        bool truncated = false;
        std::optional<PollResult> frozen;  // terminal poll result
        std::set<std::string> violations_emitted;
        bool late_interrupt_noop = false;
    };

    Entry& require_entry(const std::string& process_id);
    const Entry& require_entry(const std::string& process_id) const;
    void refresh_entry(Entry& entry);
    void capture_output(Entry& entry);
    PollResult snapshot_result(Entry& entry) const;

    Clock& clock_;
    BackendKind backend_;
    std::filesystem::path workspace_root_;
    std::map<std::string, Entry> processes_;
    std::int64_t next_id_ = 1;
};

}  // namespace agentrt::executor
