#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "agentrt/clock.hpp"
#include "agentrt/workspace.hpp"

namespace agentrt::workspace {

// Point-in-time view of one process, published by the executor.
struct ProcessView {
    std::string process_id;
    bool is_cell = false;
    std::string path;       // notebook or script path
    int cell_index = -1;    // cells only
    bool live = false;      // status executing
    std::string status;     // executing | completed | failed | interrupted
    std::int64_t elapsed_seconds = 0;
    Tick started_at = 0;
};

struct SnapshotEntry {
    enum class Kind { cell_executing, script_running, notebook_idle };
    Kind kind = Kind::notebook_idle;
    std::string name;
    int cell_index = -1;             // cell_executing only
    std::int64_t elapsed_seconds = 0;  // cell_executing / script_running

    bool operator==(const SnapshotEntry&) const = default;
};

struct IDESnapshot {
    std::int64_t turn_index = 0;
    std::vector<std::string> open_files;
    std::vector<SnapshotEntry> entries;  // the rendered process list, in order
    std::vector<std::pair<std::string, std::string>> kernel_states;  // notebook -> executing|idle
    std::string rendered_text;
};

// Renders the environment summary. Order is total: executing cells sorted by
// notebook path, then running scripts sorted by (path, start tick, id), then
// idle notebooks sorted by path. Every line is LF-terminated.
IDESnapshot render_snapshot(const Workspace& ws,
                            const std::vector<ProcessView>& executor_view,
                            std::int64_t turn_index);

// Inverse of the rendering grammar; nullopt when the text does not match it.
std::optional<std::vector<SnapshotEntry>> parse_snapshot_text(const std::string& text);

}  // namespace agentrt::workspace
