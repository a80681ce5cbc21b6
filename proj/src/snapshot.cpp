#include "agentrt/snapshot.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace agentrt::workspace {

namespace {

std::string render_entry(const SnapshotEntry& e) {
    std::ostringstream out;
    switch (e.kind) {
        case SnapshotEntry::Kind::cell_executing:
            out << "Cell " << e.cell_index << " of " << e.name << " executing ("
                << e.elapsed_seconds << " s)";
            break;
        case SnapshotEntry::Kind::script_running:
            out << e.name << " running (" << e.elapsed_seconds << " s)";
            break;
        case SnapshotEntry::Kind::notebook_idle:
            out << e.name << " idle";
            break;
    }
    return out.str();
}

}  // namespace

IDESnapshot render_snapshot(const Workspace& ws,
                            const std::vector<ProcessView>& executor_view,
                            std::int64_t turn_index) {
    IDESnapshot snap;
    snap.turn_index = turn_index;
    snap.open_files = ws.open_files();

    std::vector<const ProcessView*> cells;
    std::vector<const ProcessView*> scripts;
    std::vector<std::string> executing_notebooks;
    for (const ProcessView& pv : executor_view) {
        if (!pv.live) continue;
        if (pv.is_cell) {
            cells.push_back(&pv);
            executing_notebooks.push_back(pv.path);
        } else {
            scripts.push_back(&pv);
        }
    }
    auto by_path = [](const ProcessView* a, const ProcessView* b) {
        if (a->path != b->path) return a->path < b->path;
        if (a->started_at != b->started_at) return a->started_at < b->started_at;
        return a->process_id < b->process_id;
    };
    std::sort(cells.begin(), cells.end(), by_path);
    std::sort(scripts.begin(), scripts.end(), by_path);

    for (const ProcessView* pv : cells) {
        SnapshotEntry e;
        e.kind = SnapshotEntry::Kind::cell_executing;
        e.name = pv->path;
        e.cell_index = pv->cell_index;
        e.elapsed_seconds = pv->elapsed_seconds;
        snap.entries.push_back(std::move(e));
    }
    for (const ProcessView* pv : scripts) {
        SnapshotEntry e;
        e.kind = SnapshotEntry::Kind::script_running;
        e.name = pv->path;
        e.elapsed_seconds = pv->elapsed_seconds;
        snap.entries.push_back(std::move(e));
    }
    for (const std::string& nb : ws.notebook_paths()) {
        const bool executing =
            std::find(executing_notebooks.begin(), executing_notebooks.end(), nb) !=
            executing_notebooks.end();
        snap.kernel_states.emplace_back(nb, executing ? "executing" : "idle");
        if (!executing) {
            SnapshotEntry e;
            e.kind = SnapshotEntry::Kind::notebook_idle;
            e.name = nb;
            snap.entries.push_back(std::move(e));
        }
    }

    std::string text = "Execution Status:\n";
    if (snap.entries.empty()) {
        text += "no active processes\n";
    } else {
        for (const SnapshotEntry& e : snap.entries) {
            text += render_entry(e);
            text += '\n';
        }
    }
    snap.rendered_text = std::move(text);
    return snap;
}

namespace {

bool all_digits(const std::string& s) {
    return !s.empty() &&
           std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

// "<name> <verb> (<n> s)" with the suffix anchored at end of line.
bool parse_timed_line(const std::string& line, const std::string& verb, std::string* name,
                      std::int64_t* seconds) {
    if (line.size() < 6 || line.compare(line.size() - 3, 3, " s)") != 0) return false;
    const size_t open = line.rfind(" (");
    if (open == std::string::npos) return false;
    const std::string digits = line.substr(open + 2, line.size() - 3 - (open + 2));
    if (!all_digits(digits)) return false;
    const std::string head = line.substr(0, open);
    const std::string suffix = " " + verb;
    if (head.size() <= suffix.size() ||
        head.compare(head.size() - suffix.size(), suffix.size(), suffix) != 0) {
        return false;
    }
    *name = head.substr(0, head.size() - suffix.size());
    *seconds = std::stoll(digits);
    return !name->empty();
}

}  // namespace

std::optional<std::vector<SnapshotEntry>> parse_snapshot_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "Execution Status:") return std::nullopt;

    std::vector<SnapshotEntry> entries;
    bool saw_empty_sentinel = false;
    while (std::getline(in, line)) {
        if (line == "no active processes") {
            saw_empty_sentinel = true;
            continue;
        }
        SnapshotEntry e;
        std::string name;
        std::int64_t seconds = 0;
        if (line.rfind("Cell ", 0) == 0) {
            const size_t of = line.find(" of ", 5);
            if (of != std::string::npos && all_digits(line.substr(5, of - 5))) {
                std::string rest = line.substr(of + 4);
                if (parse_timed_line(rest, "executing", &name, &seconds)) {
                    e.kind = SnapshotEntry::Kind::cell_executing;
                    e.cell_index = static_cast<int>(std::stoll(line.substr(5, of - 5)));
                    e.name = name;
                    e.elapsed_seconds = seconds;
                    entries.push_back(std::move(e));
                    continue;
                }
            }
        }
        if (parse_timed_line(line, "running", &name, &seconds)) {
            e.kind = SnapshotEntry::Kind::script_running;
            e.name = name;
            e.elapsed_seconds = seconds;
            entries.push_back(std::move(e));
            continue;
        }
        if (line.size() > 5 && line.compare(line.size() - 5, 5, " idle") == 0) {
            e.kind = SnapshotEntry::Kind::notebook_idle;
            e.name = line.substr(0, line.size() - 5);
            entries.push_back(std::move(e));
            continue;
        }
        return std::nullopt;
    }
    if (saw_empty_sentinel && !entries.empty()) return std::nullopt;
    return entries;
}

}  // namespace agentrt::workspace
