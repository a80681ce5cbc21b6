#include "agentrt/workspace.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "agentrt/hash.hpp"

namespace fs = std::filesystem;

namespace agentrt::workspace {

std::string node_kind_name(NodeKind kind) {
    switch (kind) {
        case NodeKind::file: return "file";
        case NodeKind::directory: return "directory";
        case NodeKind::notebook: return "notebook";
        case NodeKind::script: return "script";
        case NodeKind::log: return "log";
    }
    return "file";
}

std::optional<NodeKind> node_kind_from_name(const std::string& name) {
    if (name == "file") return NodeKind::file;
    if (name == "directory") return NodeKind::directory;
    if (name == "notebook") return NodeKind::notebook;
    if (name == "script") return NodeKind::script;
    if (name == "log") return NodeKind::log;
    return std::nullopt;
}

std::string cell_state_name(CellState state) {
    switch (state) {
        case CellState::idle: return "idle";
        case CellState::executing: return "executing";
        case CellState::completed: return "completed";
        case CellState::failed: return "failed";
        case CellState::interrupted: return "interrupted";
    }
    return "idle";
}

std::string edit_op_name(EditSpec::Op op) {
    switch (op) {
        case EditSpec::Op::create: return "create";
        case EditSpec::Op::write: return "write";
        case EditSpec::Op::append: return "append";
        case EditSpec::Op::remove: return "delete";
        case EditSpec::Op::insert_cell: return "insert_cell";
        case EditSpec::Op::replace_cell: return "replace_cell";
    }
    return "write";
}

std::optional<EditSpec::Op> edit_op_from_name(const std::string& name) {
    if (name == "create") return EditSpec::Op::create;
    if (name == "write") return EditSpec::Op::write;
    if (name == "append") return EditSpec::Op::append;
    if (name == "delete") return EditSpec::Op::remove;
    if (name == "insert_cell") return EditSpec::Op::insert_cell;
    if (name == "replace_cell") return EditSpec::Op::replace_cell;
    return std::nullopt;
}

std::optional<std::string> normalize_path(const std::string& raw) {
    if (raw.empty()) return std::nullopt;
    fs::path p(raw);
    if (p.is_absolute()) return std::nullopt;
    fs::path normal = p.lexically_normal();
    std::string s = normal.generic_string();
    if (s.empty() || s == ".") return std::nullopt;
    // Any leading ".." after normalization escapes the workspace root.
    if (s == ".." || s.rfind("../", 0) == 0) return std::nullopt;
    // Trailing slash from inputs like "dir/" normalizes to "dir/."; strip it.
    if (s.size() >= 2 && s.rfind("/.", s.size() - 2) == s.size() - 2) {
        s.resize(s.size() - 2);
    }
    if (s.empty()) return std::nullopt;
    return s;
}

bool Workspace::exists(const std::string& path) const {
    return nodes_.count(path) != 0;
}

const WorkspaceNode* Workspace::find(const std::string& path) const {
    auto it = nodes_.find(path);
    return it == nodes_.end() ? nullptr : &it->second;
}

WorkspaceNode& Workspace::require(const std::string& path, const char* op) {
    auto it = nodes_.find(path);
    if (it == nodes_.end()) {
        throw WorkspaceError("missing_node",
                             std::string(op) + ": no node at '" + path + "'");
    }
    return it->second;
}

void Workspace::apply_edit(const std::string& raw_path, const EditSpec& edit, Tick now) {
    auto normalized = normalize_path(raw_path);
    if (!normalized) {
        throw WorkspaceError("path_escape", "path escapes workspace root: '" + raw_path + "'");
    }
    const std::string& path = *normalized;

    switch (edit.op) {
        case EditSpec::Op::create: {
            if (nodes_.count(path)) {
                throw WorkspaceError("already_exists", "create: node exists at '" + path + "'");
            }
            WorkspaceNode node;
            node.path = path;
            node.kind = edit.kind;
            node.modified_at = now;
            if (edit.kind == NodeKind::notebook) {
                node.cells = parse_notebook(edit.content);
            } else {
                node.content = edit.content;
            }
            nodes_.emplace(path, std::move(node));
            return;
        }
        case EditSpec::Op::write:
        case EditSpec::Op::append: {
            WorkspaceNode& node = require(path, "write");
            if (node.kind == NodeKind::directory) {
                throw WorkspaceError("not_writable", "write: '" + path + "' is a directory");
            }
            if (node.kind == NodeKind::notebook) {
                throw WorkspaceError("not_writable",
                                     "write: '" + path + "' is a notebook; use cell edits");
            }
            if (edit.op == EditSpec::Op::write) {
                node.content = edit.content;
            } else {
                node.content += edit.content;
            }
            node.modified_at = now;
            return;
        }
        case EditSpec::Op::remove: {
            WorkspaceNode& node = require(path, "delete");
            if (node.kind == NodeKind::notebook && has_executing_cell(path)) {
                throw WorkspaceError("cell_executing",
                                     "delete: a cell of '" + path + "' is executing");
            }
            nodes_.erase(path);
            open_files_.erase(std::remove(open_files_.begin(), open_files_.end(), path),
                              open_files_.end());
            return;
        }
        case EditSpec::Op::insert_cell:
        case EditSpec::Op::replace_cell: {
            WorkspaceNode& node = require(path, "cell edit");
            if (node.kind != NodeKind::notebook) {
                throw WorkspaceError("not_a_notebook", "cell edit: '" + path + "' is not a notebook");
            }
            if (has_executing_cell(path)) {
                throw WorkspaceError("cell_executing",
                                     "cell edit: a cell of '" + path + "' is executing");
            }
            const int n = static_cast<int>(node.cells.size());
            if (edit.op == EditSpec::Op::insert_cell) {
                if (edit.cell_index < 0 || edit.cell_index > n) {
                    throw WorkspaceError("cell_index_out_of_bounds",
                                         "insert_cell: index " + std::to_string(edit.cell_index) +
                                             " out of bounds [0," + std::to_string(n) + "]");
                }
                Cell cell;
                cell.source = edit.content;
                node.cells.insert(node.cells.begin() + edit.cell_index, cell);
            } else {
                if (edit.cell_index < 0 || edit.cell_index >= n) {
                    throw WorkspaceError("cell_index_out_of_bounds",
                                         "replace_cell: index " + std::to_string(edit.cell_index) +
                                             " out of bounds [0," + std::to_string(n - 1) + "]");
                }
                node.cells[static_cast<size_t>(edit.cell_index)].source = edit.content;
                node.cells[static_cast<size_t>(edit.cell_index)].last_output.reset();
                node.cells[static_cast<size_t>(edit.cell_index)].state = CellState::idle;
            }
            for (size_t i = 0; i < node.cells.size(); ++i) {
                node.cells[i].index = static_cast<int>(i);
            }
            node.modified_at = now;
            return;
        }
    }
}

void Workspace::open_file(const std::string& raw_path) {
    auto normalized = normalize_path(raw_path);
    if (!normalized) {
        throw WorkspaceError("path_escape", "path escapes workspace root: '" + raw_path + "'");
    }
    require(*normalized, "open_file");
    if (std::find(open_files_.begin(), open_files_.end(), *normalized) == open_files_.end()) {
        open_files_.push_back(*normalized);
    }
}

std::vector<std::string> Workspace::notebook_paths() const {
    std::vector<std::string> out;
    for (const auto& [path, node] : nodes_) {
        if (node.kind == NodeKind::notebook) out.push_back(path);
    }
    return out;  // map iteration is already sorted
}

void Workspace::set_cell_state(const std::string& path, int cell_index, CellState state,
                               const std::optional<std::string>& output) {
    auto it = nodes_.find(path);
    if (it == nodes_.end() || it->second.kind != NodeKind::notebook) return;
    auto& cells = it->second.cells;
    if (cell_index < 0 || cell_index >= static_cast<int>(cells.size())) return;
    Cell& cell = cells[static_cast<size_t>(cell_index)];
    cell.state = state;
    if (output) cell.last_output = output;
}

bool Workspace::has_executing_cell(const std::string& path) const {
    const WorkspaceNode* node = find(path);
    if (!node || node->kind != NodeKind::notebook) return false;
    return std::any_of(node->cells.begin(), node->cells.end(),
                       [](const Cell& c) { return c.state == CellState::executing; });
}

std::uint64_t Workspace::digest() const {
    std::uint64_t h = fnv1a64("workspace");
    for (const auto& [path, node] : nodes_) {
        h = fnv1a64(path, h);
        h = fnv1a64(node_kind_name(node.kind), h);
        if (node.kind == NodeKind::notebook) {
            for (const Cell& cell : node.cells) {
                h = fnv1a64(cell.source, h);
                h = fnv1a64(cell.last_output.value_or(""), h);
                h = fnv1a64(cell_state_name(cell.state), h);
            }
        } else {
            h = fnv1a64(node.content, h);
        }
    }
    for (const auto& path : open_files_) h = fnv1a64(path, h);
    return h;
}

namespace {

NodeKind kind_from_extension(const fs::path& p) {
    const std::string ext = p.extension().string();
    if (ext == ".ipynb") return NodeKind::notebook;
    if (ext == ".py" || ext == ".sh") return NodeKind::script;
    if (ext == ".log") return NodeKind::log;
    return NodeKind::file;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

void Workspace::load_tree(const fs::path& root) {
    nodes_.clear();
    open_files_.clear();
    if (!fs::exists(root)) return;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        const std::string rel = fs::relative(entry.path(), root).generic_string();
        auto normalized = normalize_path(rel);
        if (!normalized) continue;
        WorkspaceNode node;
        node.path = *normalized;
        if (entry.is_directory()) {
            node.kind = NodeKind::directory;
        } else {
            node.kind = kind_from_extension(entry.path());
            const std::string bytes = read_file(entry.path());
            if (node.kind == NodeKind::notebook) {
                node.cells = parse_notebook(bytes);
            } else {
                node.content = bytes;
            }
        }
        nodes_.emplace(node.path, std::move(node));
    }
}

void Workspace::save_tree(const fs::path& root) const {
    fs::create_directories(root);
    for (const auto& [path, node] : nodes_) {
        const fs::path target = root / path;
        if (node.kind == NodeKind::directory) {
            fs::create_directories(target);
            continue;
        }
        fs::create_directories(target.parent_path());
        std::ofstream out(target, std::ios::binary | std::ios::trunc);
        if (node.kind == NodeKind::notebook) {
            out << serialize_notebook(node.cells);
        } else {
            out << node.content;
        }
    }
}

std::string serialize_notebook(const std::vector<Cell>& cells) {
    std::string out;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) out += "\n# %%\n";
        out += cells[i].source;
    }
    return out;
}

std::vector<Cell> parse_notebook(const std::string& text) {
    std::vector<Cell> cells;
    std::string current;
    std::istringstream in(text);
    std::string line;
    bool any_line = false;
    auto flush = [&]() {
        Cell cell;
        cell.index = static_cast<int>(cells.size());
        cell.source = current;
        cells.push_back(std::move(cell));
        current.clear();
    };
    while (std::getline(in, line)) {
        if (line == "# %%") {
            if (!current.empty() && current.back() == '\n') current.pop_back();
            flush();
            any_line = true;
            continue;
        }
        current += line;
        current += '\n';
        any_line = true;
    }
    if (any_line || !text.empty()) {
        if (!current.empty() && current.back() == '\n' &&
            (text.empty() || text.back() != '\n')) {
            current.pop_back();
        }
        flush();
    }
    return cells;
}

}  // namespace agentrt::workspace
