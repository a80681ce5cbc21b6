#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "agentrt/clock.hpp"

namespace agentrt::workspace {

class WorkspaceError : public std::runtime_error {
public:
    WorkspaceError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

enum class NodeKind { file, directory, notebook, script, log };

std::string node_kind_name(NodeKind kind);
std::optional<NodeKind> node_kind_from_name(const std::string& name);

enum class CellState { idle, executing, completed, failed, interrupted };

std::string cell_state_name(CellState state);

struct Cell {
    int index = 0;
    std::string source;
    std::optional<std::string> last_output;
    CellState state = CellState::idle;
};

struct WorkspaceNode {
    std::string path;  // normalized, workspace-relative
    NodeKind kind = NodeKind::file;
    std::string content;       // all kinds except notebook
    std::vector<Cell> cells;   // notebook only
    Tick modified_at = 0;
};

struct EditSpec {
    enum class Op { create, write, append, remove, insert_cell, replace_cell };
    Op op = Op::write;
    NodeKind kind = NodeKind::file;  // create only
    std::string content;             // write/append/create content, cell source for cell ops
    int cell_index = -1;             // cell ops only
};

std::string edit_op_name(EditSpec::Op op);
std::optional<EditSpec::Op> edit_op_from_name(const std::string& name);

// Returns the normalized workspace-relative path, or nullopt if the path is
// absolute, empty, or escapes the workspace root after normalization.
std::optional<std::string> normalize_path(const std::string& raw);

// The simulated IDE state: file tree, notebooks, scripts, logs, plus the
// open-files list the agent maintains. Single writer: only the turn loop
// mutates a Workspace.
class Workspace {
public:
    bool exists(const std::string& path) const;
    const WorkspaceNode* find(const std::string& path) const;
    const std::map<std::string, WorkspaceNode>& nodes() const { return nodes_; }

    // Applies exactly one edit; throws WorkspaceError without mutating on any
    // precondition failure. `now` stamps modified_at.
    void apply_edit(const std::string& raw_path, const EditSpec& edit, Tick now);

    void open_file(const std::string& raw_path);
    const std::vector<std::string>& open_files() const { return open_files_; }

    // Sorted notebook paths.
    std::vector<std::string> notebook_paths() const;

    // Executor-driven cell bookkeeping, called by the turn loop only.
    void set_cell_state(const std::string& path, int cell_index, CellState state,
                        const std::optional<std::string>& output);
    bool has_executing_cell(const std::string& path) const;

    // Content hash over the full ordered node map (paths, kinds, bytes, cells).
    std::uint64_t digest() const;

    // Disk persistence: plain directory tree. Notebooks are stored as cell
    // sources joined by "# %%" separator lines.
    void load_tree(const std::filesystem::path& root);
    void save_tree(const std::filesystem::path& root) const;

private:
    WorkspaceNode& require(const std::string& path, const char* op);

    std::map<std::string, WorkspaceNode> nodes_;
    std::vector<std::string> open_files_;
};

std::string serialize_notebook(const std::vector<Cell>& cells);
std::vector<Cell> parse_notebook(const std::string& text);

}  // namespace agentrt::workspace
