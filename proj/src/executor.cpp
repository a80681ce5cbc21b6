#include "agentrt/executor.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <thread>

#include "agentrt/sim_process.hpp"

namespace agentrt::executor {

std::string Origin::describe() const {
    if (is_cell) return "cell " + std::to_string(cell_index) + " of " + path;
    return path;
}

std::string status_kind_name(StatusKind kind) {
    switch (kind) {
        case StatusKind::idle: return "idle";
        case StatusKind::executing: return "executing";
        case StatusKind::completed: return "completed";
        case StatusKind::failed: return "failed";
        case StatusKind::interrupted: return "interrupted";
    }
    return "idle";
}

Json PollResult::to_json() const {
    Json j;
    j["status"] = status;
    j["execution_duration_seconds"] = execution_duration_seconds;
    if (output) j["output"] = *output;
    if (current_output) j["current_output"] = *current_output;
    return j;
}

namespace {

class SimRuntime : public ProcessRuntime {
public:
    SimRuntime(const std::string& script, Tick start_tick)
        : process_(script), start_tick_(start_tick) {}

    void refresh(Tick now) override {
        if (stopped_) return;
        const Tick elapsed = std::max<Tick>(0, now - start_tick_);
        state_ = process_.state_at(elapsed);
        last_elapsed_ = elapsed;
    }

    StatusKind status() const override {
        if (stopped_) return StatusKind::interrupted;
        if (!state_.finished) return StatusKind::executing;
        return state_.failed ? StatusKind::failed : StatusKind::completed;
    }

    const std::string& output() const override { return state_.output; }

    std::string error() const override {
        if (stopped_) return stop_reason_;
        return state_.error;
    }

    std::int64_t memory_bytes() const override { return state_.memory_bytes; }
    bool net_attempted() const override { return state_.net_attempted; }

    Tick terminal_elapsed() const override {
        if (stopped_) return stop_elapsed_;
        return state_.finish_elapsed;
    }

    void request_stop(const std::string& reason, Tick now) override {
        refresh(now);
        if (state_.finished || stopped_) return;
        stopped_ = true;
        stop_reason_ = reason;
        stop_elapsed_ = std::max<Tick>(0, now - start_tick_);
        state_ = process_.state_at(stop_elapsed_);  // freeze output at stop point
    }

private:
    SimProcess process_;
    Tick start_tick_;
    SimProcess::State state_;
    Tick last_elapsed_ = 0;
    bool stopped_ = false;
    std::string stop_reason_;
    Tick stop_elapsed_ = 0;
};

class SubprocessRuntime : public ProcessRuntime {
public:
    SubprocessRuntime(const std::filesystem::path& program,
                      const std::vector<std::string>& args, Tick start_tick, Tick grace)
        : start_tick_(start_tick), grace_(grace) {
        int fds[2];
        if (pipe(fds) != 0) {
            fail_early("pipe failed");
            return;
        }
        pid_ = fork();
        if (pid_ < 0) {
            close(fds[0]);
            close(fds[1]);
            fail_early("fork failed");
            return;
        }
        if (pid_ == 0) {
            setpgid(0, 0);
            dup2(fds[1], STDOUT_FILENO);
            dup2(fds[1], STDERR_FILENO);
            close(fds[0]);
            close(fds[1]);
            std::vector<const char*> argv;
            argv.push_back("/bin/sh");
            const std::string prog = program.string();
            argv.push_back(prog.c_str());
            for (const auto& a : args) argv.push_back(a.c_str());
            argv.push_back(nullptr);
            execv("/bin/sh", const_cast<char* const*>(argv.data()));
            _exit(127);
        }
        close(fds[1]);
        read_fd_ = fds[0];
        fcntl(read_fd_, F_SETFL, O_NONBLOCK);
    }

    ~SubprocessRuntime() override {
        if (pid_ > 0 && !reaped_) {
            kill(-pid_, SIGKILL);
            waitpid(pid_, nullptr, 0);
        }
        if (read_fd_ >= 0) close(read_fd_);
    }

    void refresh(Tick now) override {
        drain();
        if (reaped_) return;
        if (stop_requested_ && !killed_ && now - stop_at_ >= grace_) {
            kill(-pid_, SIGKILL);
            killed_ = true;
        }
        int status = 0;
        const pid_t r = waitpid(pid_, &status, WNOHANG);
        if (r == pid_) {
            reaped_ = true;
            drain();
            terminal_elapsed_ = std::max<Tick>(0, now - start_tick_);
            if (stop_requested_) {
                kind_ = StatusKind::interrupted;
            } else if (WIFEXITED(status) && WEXITSTATUS(status) == 0) {
                kind_ = StatusKind::completed;
            } else {
                kind_ = StatusKind::failed;
                if (WIFEXITED(status)) {
                    error_ = "exit code " + std::to_string(WEXITSTATUS(status));
                } else if (WIFSIGNALED(status)) {
                    error_ = "terminated by signal " + std::to_string(WTERMSIG(status));
                }
            }
        }
    }

    StatusKind status() const override { return kind_; }
    const std::string& output() const override { return output_; }
    std::string error() const override {
        return kind_ == StatusKind::interrupted ? stop_reason_ : error_;
    }

    std::int64_t memory_bytes() const override {
        if (reaped_ || pid_ <= 0) return 0;
        std::ifstream in("/proc/" + std::to_string(pid_) + "/status");
        std::string line;
        while (std::getline(in, line)) {
            if (line.rfind("VmRSS:", 0) == 0) {
                std::int64_t kb = 0;
                try {
                    kb = std::stoll(line.substr(6));
                } catch (...) {
                }
                return kb * 1024;
            }
        }
        return 0;
    }

    bool net_attempted() const override { return false; }
    Tick terminal_elapsed() const override { return terminal_elapsed_; }

    void request_stop(const std::string& reason, Tick now) override {
        if (reaped_ || stop_requested_) return;
        stop_requested_ = true;
        stop_reason_ = reason;
        stop_at_ = now;
        if (pid_ > 0) kill(-pid_, SIGTERM);
    }

    bool reaped() const { return reaped_; }

private:
    void drain() {
        if (read_fd_ < 0) return;
        char buf[4096];
        while (true) {
            const ssize_t n = read(read_fd_, buf, sizeof(buf));
            if (n > 0) {
                output_.append(buf, static_cast<size_t>(n));
            } else {
                break;
            }
        }
    }

    void fail_early(const std::string& message) {
        reaped_ = true;
        kind_ = StatusKind::failed;
        error_ = message;
    }

    pid_t pid_ = -1;
    int read_fd_ = -1;
    Tick start_tick_ = 0;
    Tick grace_ = 5;
    std::string output_;
    std::string error_;
    StatusKind kind_ = StatusKind::executing;
    bool reaped_ = false;
    bool stop_requested_ = false;
    bool killed_ = false;
    std::string stop_reason_;
    Tick stop_at_ = 0;
    Tick terminal_elapsed_ = 0;
};

}  // namespace

Executor::Executor(Clock& clock, BackendKind backend, std::filesystem::path workspace_root)
    : clock_(clock), backend_(backend), workspace_root_(std::move(workspace_root)) {}

ProcessHandle Executor::start(const workspace::Workspace& ws, const Origin& origin,
                              const ResourceLimits& limits,
                              const std::vector<std::string>& args) {
    if (!limits.valid()) {
        throw ExecError("limits_invalid", "resource limits must all be positive");
    }
    const workspace::WorkspaceNode* node = ws.find(origin.path);
    if (!node) {
        throw ExecError("origin_missing", "no node at '" + origin.path + "'");
    }
    std::string program_text;
    if (origin.is_cell) {
        if (node->kind != workspace::NodeKind::notebook) {
            throw ExecError("origin_missing", "'" + origin.path + "' is not a notebook");
        }
        if (origin.cell_index < 0 ||
            origin.cell_index >= static_cast<int>(node->cells.size())) {
            throw ExecError("origin_missing",
                            "no cell " + std::to_string(origin.cell_index) + " in '" +
                                origin.path + "'");
        }
        if (notebook_busy(origin.path)) {
            throw ExecError("notebook_busy",
                            "a cell of '" + origin.path + "' is already executing");
        }
        program_text = node->cells[static_cast<size_t>(origin.cell_index)].source;
    } else {
        if (node->kind == workspace::NodeKind::directory ||
            node->kind == workspace::NodeKind::notebook) {
            throw ExecError("origin_missing", "'" + origin.path + "' is not runnable");
        }
        program_text = node->content;
    }

    Entry entry;
    entry.handle.process_id = "p" + std::to_string(next_id_++);
    entry.handle.origin = origin;
    entry.handle.started_at = clock_.now();
    entry.handle.limits = limits;

    if (backend_ == BackendKind::simulated) {
        entry.runtime = std::make_unique<SimRuntime>(program_text, entry.handle.started_at);
    } else {
        std::filesystem::path program = workspace_root_ / origin.path;
        if (origin.is_cell) {
            // Cells run through a materialized script file.
            const auto cell_dir = workspace_root_ / ".cells";
            std::filesystem::create_directories(cell_dir);
            program = cell_dir / (entry.handle.process_id + ".sh");
            std::ofstream out(program, std::ios::binary | std::ios::trunc);
            out << program_text;
        }
        entry.runtime = std::make_unique<SubprocessRuntime>(program, args,
                                                            entry.handle.started_at,
                                                            grace_period_seconds);
    }

    const std::string id = entry.handle.process_id;
    ProcessHandle handle = entry.handle;
    processes_.emplace(id, std::move(entry));
    refresh_entry(processes_.at(id));
    return handle;
}

Executor::Entry& Executor::require_entry(const std::string& process_id) {
    auto it = processes_.find(process_id);
    if (it == processes_.end()) {
        throw ExecError("unknown_process", "unknown process_id '" + process_id + "'");
    }
    return it->second;
}

const Executor::Entry& Executor::require_entry(const std::string& process_id) const {
    auto it = processes_.find(process_id);
    if (it == processes_.end()) {
        throw ExecError("unknown_process", "unknown process_id '" + process_id + "'");
    }
    return it->second;
}

void Executor::capture_output(Entry& entry) {
    if (entry.truncated) return;
    const std::string& raw = entry.runtime->output();
    const auto cap = static_cast<size_t>(entry.handle.limits.max_output_bytes);
    if (raw.size() > cap) {
        entry.truncated_output = raw.substr(0, cap);
        entry.truncated_output += kTruncationMarker;
        entry.truncated = true;
    } else {
        entry.truncated_output = raw;
    }
}

void Executor::refresh_entry(Entry& entry) {
    if (entry.frozen) return;
    entry.runtime->refresh(clock_.now());
    capture_output(entry);
    entry.last_status = entry.runtime->status();
    if (entry.last_status == StatusKind::completed ||
        entry.last_status == StatusKind::failed ||
        entry.last_status == StatusKind::interrupted) {
        PollResult result;
        result.status = entry.last_status == StatusKind::completed ? "completed"
                        : entry.last_status == StatusKind::failed ? "failed"
                                                                  : "interrupted";
        result.execution_duration_seconds = entry.runtime->terminal_elapsed();
        std::string out = entry.truncated_output;
        if (entry.last_status == StatusKind::completed && out.empty()) {
            out = kNoOutputSentinel;
        }
        result.output = out;
        entry.frozen = result;
    }
}

PollResult Executor::snapshot_result(Entry& entry) const {
    if (entry.frozen) return *entry.frozen;
    PollResult result;
    result.status = "still_executing";
    result.current_output = entry.truncated_output;
    result.execution_duration_seconds =
        std::max<Tick>(0, clock_.now() - entry.handle.started_at);
    return result;
}

PollResult Executor::poll(const std::string& process_id) {
    Entry& entry = require_entry(process_id);
    refresh_entry(entry);
    return snapshot_result(entry);
}

ExecutionStatus Executor::interrupt(const std::string& process_id, const std::string& reason) {
    Entry& entry = require_entry(process_id);
    refresh_entry(entry);
    if (entry.frozen) {
        // Already terminal: the late interrupt is a recorded no-op.
        entry.late_interrupt_noop = true;
        ExecutionStatus status;
        status.kind = entry.last_status;
        status.detail = entry.last_status == StatusKind::interrupted ? entry.stop_reason
                                                                     : entry.runtime->error();
        if (entry.last_status == StatusKind::completed) status.detail = *entry.frozen->output;
        return status;
    }
    entry.stop_reason = reason;
    entry.stop_requested = true;
    entry.runtime->request_stop(reason, clock_.now());
    if (backend_ == BackendKind::subprocess) {
        // Bounded wait: soft stop, escalating to a hard kill after the grace
        // period; the runtime handles the escalation on refresh.
        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::seconds(grace_period_seconds + 2);
        while (std::chrono::steady_clock::now() < deadline) {
            entry.runtime->refresh(clock_.now());
            if (entry.runtime->status() != StatusKind::executing) break;
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
    }
    refresh_entry(entry);
    ExecutionStatus status;
    status.kind = entry.last_status;
    status.detail = reason;
    return status;
}

std::optional<LimitViolation> Executor::enforce_limits(const std::string& process_id) {
    Entry& entry = require_entry(process_id);
    refresh_entry(entry);
    if (entry.frozen) return std::nullopt;
    const Tick elapsed = std::max<Tick>(0, clock_.now() - entry.handle.started_at);
    std::optional<LimitViolation> fired;
    if (elapsed > entry.handle.limits.max_runtime_seconds &&
        !entry.violations_emitted.count("runtime")) {
        entry.violations_emitted.insert("runtime");
        fired = LimitViolation{process_id, "runtime",
                               "runtime " + std::to_string(elapsed) + " s > limit " +
                                   std::to_string(entry.handle.limits.max_runtime_seconds) +
                                   " s"};
    } else if (entry.runtime->memory_bytes() > entry.handle.limits.max_memory_bytes &&
               !entry.violations_emitted.count("memory")) {
        entry.violations_emitted.insert("memory");
        fired = LimitViolation{process_id, "memory",
                               "memory " + std::to_string(entry.runtime->memory_bytes()) +
                                   " bytes > limit " +
                                   std::to_string(entry.handle.limits.max_memory_bytes) +
                                   " bytes"};
    }
    if (fired) interrupt(process_id, "resource_limit");
    return fired;
}

std::vector<LimitViolation> Executor::enforce_limits() {
    std::vector<LimitViolation> violations;
    for (auto& [id, entry] : processes_) {
        if (auto violation = enforce_limits(id)) violations.push_back(*violation);
    }
    return violations;
}

std::vector<workspace::ProcessView> Executor::view() {
    std::vector<workspace::ProcessView> views;
    for (auto& [id, entry] : processes_) {
        refresh_entry(entry);
        workspace::ProcessView v;
        v.process_id = id;
        v.is_cell = entry.handle.origin.is_cell;
        v.path = entry.handle.origin.path;
        v.cell_index = entry.handle.origin.cell_index;
        v.live = !entry.frozen;
        v.status = entry.frozen ? entry.frozen->status : "executing";
        v.started_at = entry.handle.started_at;
        v.elapsed_seconds = entry.frozen
                                ? entry.frozen->execution_duration_seconds
                                : std::max<Tick>(0, clock_.now() - entry.handle.started_at);
        views.push_back(std::move(v));
    }
    return views;
}

bool Executor::notebook_busy(const std::string& notebook_path) {
    for (auto& [id, entry] : processes_) {
        if (!entry.handle.origin.is_cell || entry.handle.origin.path != notebook_path) continue;
        refresh_entry(entry);
        if (!entry.frozen) return true;
    }
    return false;
}

std::vector<std::string> Executor::live_process_ids() {
    std::vector<std::string> ids;
    for (auto& [id, entry] : processes_) {
        refresh_entry(entry);
        if (!entry.frozen) ids.push_back(id);
    }
    return ids;
}

bool Executor::net_attempted(const std::string& process_id) const {
    return require_entry(process_id).runtime->net_attempted();
}

const ProcessHandle& Executor::handle(const std::string& process_id) const {
    return require_entry(process_id).handle;
}

std::string Executor::interrupt_reason(const std::string& process_id) const {
    return require_entry(process_id).stop_reason;
}

void Executor::interrupt_all(const std::string& reason) {
    for (auto& [id, entry] : processes_) {
        refresh_entry(entry);
        if (!entry.frozen) interrupt(id, reason);
    }
}

}  // namespace agentrt::executor
