#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "agentrt/snapshot.hpp"
#include "agentrt/workspace.hpp"

using namespace agentrt;
using namespace agentrt::workspace;

namespace {

// Independent path-normalization oracle: segment stack over '/'-split parts;
// rejects anything that pops past the root or stays absolute.
bool oracle_path_ok(const std::string& raw) {
    if (raw.empty() || raw[0] == '/') return false;
    std::vector<std::string> stack;
    std::string part;
    auto flush = [&]() {
        if (part.empty() || part == ".") {
            part.clear();
            return true;
        }
        if (part == "..") {
            if (stack.empty()) return false;
            stack.pop_back();
            part.clear();
            return true;
        }
        stack.push_back(part);
        part.clear();
        return true;
    };
    for (char c : raw) {
        if (c == '/') {
            if (!flush()) return false;
        } else {
            part += c;
        }
    }
    if (!flush()) return false;
    return !stack.empty();
}

EditSpec create_spec(NodeKind kind, const std::string& content = "") {
    EditSpec e;
    e.op = EditSpec::Op::create;
    e.kind = kind;
    e.content = content;
    return e;
}

}  // namespace

TEST_CASE("create in empty workspace yields one node") {
    Workspace ws;
    ws.apply_edit("train.py", create_spec(NodeKind::script, "print go"), 1);
    CHECK(ws.nodes().size() == 1);
    const WorkspaceNode* node = ws.find("train.py");
    REQUIRE(node != nullptr);
    CHECK(node->kind == NodeKind::script);
    CHECK(node->content == "print go");
    CHECK(node->modified_at == 1);
}

TEST_CASE("replace_cell touches only the targeted cell") {
    Workspace ws;
    ws.apply_edit("m.ipynb", create_spec(NodeKind::notebook, "a\n# %%\nb\n# %%\nc\n# %%\nd"), 0);
    EditSpec edit;
    edit.op = EditSpec::Op::replace_cell;
    edit.cell_index = 3;
    edit.content = "new source";
    ws.apply_edit("m.ipynb", edit, 5);

    const WorkspaceNode* nb = ws.find("m.ipynb");
    REQUIRE(nb != nullptr);
    REQUIRE(nb->cells.size() == 4);
    CHECK(nb->cells[0].source == "a");
    CHECK(nb->cells[1].source == "b");
    CHECK(nb->cells[2].source == "c");
    CHECK(nb->cells[3].source == "new source");
    CHECK(nb->cells[3].index == 3);
}

TEST_CASE("insert_cell keeps indices contiguous from zero") {
    Workspace ws;
    ws.apply_edit("m.ipynb", create_spec(NodeKind::notebook, "a\n# %%\nc"), 0);

    EditSpec insert;
    insert.op = EditSpec::Op::insert_cell;
    insert.cell_index = 1;
    insert.content = "b";
    ws.apply_edit("m.ipynb", insert, 1);

    const WorkspaceNode* nb = ws.find("m.ipynb");
    REQUIRE(nb->cells.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(nb->cells[static_cast<size_t>(i)].index == i);
    CHECK(nb->cells[1].source == "b");

    insert.cell_index = 3;  // == length: append position
    insert.content = "d";
    CHECK_NOTHROW(ws.apply_edit("m.ipynb", insert, 2));
    insert.cell_index = 9;
    CHECK_THROWS_AS(ws.apply_edit("m.ipynb", insert, 3), WorkspaceError);
}

TEST_CASE("path escape attempts are rejected, matching the oracle") {
    Workspace ws;
    ws.apply_edit("a", create_spec(NodeKind::directory), 0);

    EditSpec del;
    del.op = EditSpec::Op::remove;
    CHECK_THROWS_AS(ws.apply_edit("a/../../etc", del, 1), WorkspaceError);
    CHECK_THROWS_AS(ws.apply_edit("../x", del, 1), WorkspaceError);
    CHECK_THROWS_AS(ws.apply_edit("/abs", del, 1), WorkspaceError);

    const std::vector<std::string> candidates = {
        "a/../../etc", "../x",  "/abs",      "a/b/../c", "a/./b", "..",
        ".",           "a//b",  "a/b/c/..",  "a/..",     "x",     "deep/nested/file.txt",
        "a/b/../../..", "./ok", "trail/",
    };
    for (const auto& raw : candidates) {
        CAPTURE(raw);
        CHECK(normalize_path(raw).has_value() == oracle_path_ok(raw));
    }
}

TEST_CASE("edit isolation: untouched nodes keep identical bytes") {
    Workspace ws;
    ws.apply_edit("keep.txt", create_spec(NodeKind::file, "stay"), 0);
    ws.apply_edit("nb.ipynb", create_spec(NodeKind::notebook, "cell0"), 0);
    ws.apply_edit("mut.txt", create_spec(NodeKind::file, "start"), 0);

    const std::string keep_before = ws.find("keep.txt")->content;
    const auto nb_before = ws.find("nb.ipynb")->cells;

    EditSpec append;
    append.op = EditSpec::Op::append;
    append.content = " more";
    ws.apply_edit("mut.txt", append, 2);

    CHECK(ws.find("keep.txt")->content == keep_before);
    REQUIRE(ws.find("nb.ipynb")->cells.size() == nb_before.size());
    CHECK(ws.find("nb.ipynb")->cells[0].source == nb_before[0].source);
    CHECK(ws.find("mut.txt")->content == "start more");
}

TEST_CASE("failed edits do not mutate the workspace") {
    Workspace ws;
    ws.apply_edit("nb.ipynb", create_spec(NodeKind::notebook, "only"), 0);
    const auto digest_before = ws.digest();

    EditSpec bad;
    bad.op = EditSpec::Op::replace_cell;
    bad.cell_index = 7;
    bad.content = "x";
    CHECK_THROWS_AS(ws.apply_edit("nb.ipynb", bad, 1), WorkspaceError);
    CHECK_THROWS_AS(ws.apply_edit("missing.txt", EditSpec{EditSpec::Op::write}, 1),
                    WorkspaceError);
    CHECK(ws.digest() == digest_before);
}

TEST_CASE("writes are blocked while a cell of the notebook executes") {
    Workspace ws;
    ws.apply_edit("nb.ipynb", create_spec(NodeKind::notebook, "a\n# %%\nb"), 0);
    ws.set_cell_state("nb.ipynb", 0, CellState::executing, std::nullopt);

    EditSpec edit;
    edit.op = EditSpec::Op::replace_cell;
    edit.cell_index = 1;
    edit.content = "y";
    CHECK_THROWS_AS(ws.apply_edit("nb.ipynb", edit, 1), WorkspaceError);

    ws.set_cell_state("nb.ipynb", 0, CellState::completed, std::string("out"));
    CHECK_NOTHROW(ws.apply_edit("nb.ipynb", edit, 2));
}

TEST_CASE("notebook serialization round-trips cell lists") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Cell> cells;
        const int n = 1 + static_cast<int>(rng() % 5);
        for (int i = 0; i < n; ++i) {
            Cell c;
            c.index = i;
            const int lines = static_cast<int>(rng() % 4);
            for (int l = 0; l < lines; ++l) {
                c.source += "line" + std::to_string(rng() % 100) + "\n";
            }
            if (rng() % 2 && !c.source.empty()) c.source.pop_back();  // no trailing newline
            cells.push_back(c);
        }
        const std::string text = serialize_notebook(cells);
        if (text.empty()) continue;  // a lone empty cell is an empty notebook
        const std::vector<Cell> parsed = parse_notebook(text);
        REQUIRE(parsed.size() == cells.size());
        for (size_t i = 0; i < cells.size(); ++i) {
            CAPTURE(trial);
            CHECK(parsed[i].source == cells[i].source);
        }
    }
}

TEST_CASE("snapshot renders the canonical executing/running/idle lines") {
    Workspace ws;
    ws.apply_edit("model_training.ipynb",
                  create_spec(NodeKind::notebook, "a\n# %%\nb\n# %%\nc\n# %%\nd"), 0);
    ws.apply_edit("hyperparameter_search.ipynb", create_spec(NodeKind::notebook, "x"), 0);
    ws.apply_edit("validation_script.py", create_spec(NodeKind::script, "sleep 60"), 0);

    std::vector<ProcessView> views;
    ProcessView cell;
    cell.process_id = "p1";
    cell.is_cell = true;
    cell.path = "model_training.ipynb";
    cell.cell_index = 3;
    cell.live = true;
    cell.status = "executing";
    cell.elapsed_seconds = 127;
    views.push_back(cell);
    ProcessView script;
    script.process_id = "p2";
    script.path = "validation_script.py";
    script.live = true;
    script.status = "executing";
    script.elapsed_seconds = 45;
    views.push_back(script);

    const IDESnapshot snap = render_snapshot(ws, views, 9);
    CHECK(snap.rendered_text ==
          "Execution Status:\n"
          "Cell 3 of model_training.ipynb executing (127 s)\n"
          "validation_script.py running (45 s)\n"
          "hyperparameter_search.ipynb idle\n");
    CHECK(snap.turn_index == 9);
    REQUIRE(snap.kernel_states.size() == 2);
    CHECK(snap.kernel_states[0].first == "hyperparameter_search.ipynb");
    CHECK(snap.kernel_states[0].second == "idle");
    CHECK(snap.kernel_states[1].second == "executing");
}

TEST_CASE("empty workspace renders the fixed sentinel") {
    Workspace ws;
    const IDESnapshot snap = render_snapshot(ws, {}, 0);
    CHECK(snap.rendered_text == "Execution Status:\nno active processes\n");
    CHECK(snap.entries.empty());
}

TEST_CASE("two executing cells in distinct notebooks sort by notebook path") {
    Workspace ws;
    ws.apply_edit("zeta.ipynb", create_spec(NodeKind::notebook, "z"), 0);
    ws.apply_edit("alpha.ipynb", create_spec(NodeKind::notebook, "a"), 0);

    std::vector<ProcessView> views;
    for (const auto& [nb, idx, secs] :
         {std::tuple{"zeta.ipynb", 0, std::int64_t{10}},
          std::tuple{"alpha.ipynb", 0, std::int64_t{4}}}) {
        ProcessView v;
        v.is_cell = true;
        v.path = nb;
        v.cell_index = idx;
        v.live = true;
        v.status = "executing";
        v.elapsed_seconds = secs;
        views.push_back(v);
    }
    const IDESnapshot snap = render_snapshot(ws, views, 0);

    // Reference: sort-and-format done independently of the renderer.
    CHECK(snap.rendered_text ==
          "Execution Status:\n"
          "Cell 0 of alpha.ipynb executing (4 s)\n"
          "Cell 0 of zeta.ipynb executing (10 s)\n");
}

TEST_CASE("snapshot text parses back to the exact entry list") {
    std::mt19937_64 rng(11);
    const std::vector<std::string> safe_names = {"a.ipynb", "b.ipynb", "train.py",
                                                 "eval.py",  "dir/net.py", "z.ipynb"};
    for (int trial = 0; trial < 200; ++trial) {
        Workspace ws;
        std::vector<ProcessView> views;
        std::set<std::string> used_nb;
        const int k = static_cast<int>(rng() % 4);
        for (int i = 0; i < k; ++i) {
            const std::string name = safe_names[rng() % safe_names.size()];
            if (name.find(".ipynb") != std::string::npos) {
                if (!ws.exists(name)) {
                    EditSpec ce;
                    ce.op = EditSpec::Op::create;
                    ce.kind = NodeKind::notebook;
                    ce.content = "s";
                    if (name.find('/') != std::string::npos) {
                        if (!ws.exists("dir")) ws.apply_edit("dir", create_spec(NodeKind::directory), 0);
                    }
                    ws.apply_edit(name, ce, 0);
                }
                if (rng() % 2 && !used_nb.count(name)) {
                    used_nb.insert(name);
                    ProcessView v;
                    v.is_cell = true;
                    v.path = name;
                    v.cell_index = static_cast<int>(rng() % 9);
                    v.live = true;
                    v.status = "executing";
                    v.elapsed_seconds = static_cast<std::int64_t>(rng() % 100000);
                    views.push_back(v);
                }
            } else {
                ProcessView v;
                v.path = name;
                v.live = true;
                v.status = "executing";
                v.elapsed_seconds = static_cast<std::int64_t>(rng() % 100000);
                views.push_back(v);
            }
        }
        const IDESnapshot snap = render_snapshot(ws, views, trial);
        const auto parsed = workspace::parse_snapshot_text(snap.rendered_text);
        REQUIRE(parsed.has_value());
        CHECK(*parsed == snap.entries);
    }
}

TEST_CASE("snapshot determinism: identical state renders identical bytes") {
    Workspace ws;
    ws.apply_edit("n.ipynb", create_spec(NodeKind::notebook, "c"), 0);
    ProcessView v;
    v.path = "s.py";
    v.live = true;
    v.status = "executing";
    v.elapsed_seconds = 3;
    const IDESnapshot a = render_snapshot(ws, {v}, 4);
    const IDESnapshot b = render_snapshot(ws, {v}, 4);
    CHECK(a.rendered_text == b.rendered_text);
}

TEST_CASE("workspace persists as a plain directory tree") {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "agentrt_ws_test";
    fs::remove_all(root);

    Workspace ws;
    ws.apply_edit("data", create_spec(NodeKind::directory), 0);
    ws.apply_edit("data/x.csv", create_spec(NodeKind::file, "a,b\n1,2\n"), 0);
    ws.apply_edit("nb.ipynb", create_spec(NodeKind::notebook, "one\n# %%\ntwo"), 0);
    ws.save_tree(root);

    Workspace loaded;
    loaded.load_tree(root);
    CHECK(loaded.find("data/x.csv")->content == "a,b\n1,2\n");
    REQUIRE(loaded.find("nb.ipynb") != nullptr);
    CHECK(loaded.find("nb.ipynb")->kind == NodeKind::notebook);
    REQUIRE(loaded.find("nb.ipynb")->cells.size() == 2);
    CHECK(loaded.find("nb.ipynb")->cells[1].source == "two");
    fs::remove_all(root);
}
