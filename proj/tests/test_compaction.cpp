#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "agentrt/compaction.hpp"

using namespace agentrt;
using namespace agentrt::compaction;

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ContextView filled_context(int turns, int body_chars, int verbose_chars) {
    ContextView ctx;
    for (int i = 0; i < turns; ++i) {
        ContextEntry e;
        e.turn_index = i;
        e.body = "did step " + std::to_string(i) + ". details follow here";
        e.body.resize(static_cast<size_t>(body_chars), 'b');
        e.verbose_output.assign(static_cast<size_t>(verbose_chars), 'v');
        ctx.append(std::move(e));
    }
    return ctx;
}

int files_in(const fs::path& dir) {
    int n = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        (void)entry;
        ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("measure is chars/4 with the documented fixed points") {
    CHECK(measure_text("") == 0);
    CHECK(measure_text(std::string(4000, 'x')) == 1000);
    CHECK(measure_text("abc") == 0);
    CHECK(measure_text("abcd") == 1);
}

TEST_CASE("measure is monotone under appends") {
    std::mt19937_64 rng(37);
    std::string text;
    std::int64_t last = 0;
    for (int i = 0; i < 500; ++i) {
        text.append(rng() % 7, 'a' + static_cast<char>(rng() % 26));
        const std::int64_t now = measure_text(text);
        CHECK(now >= last);
        last = now;
    }
}

TEST_CASE("passing compaction lands under the trigger threshold") {
    ContextBudget budget;
    budget.max_units = 2000;
    budget.trigger_fraction = 0.8;
    CompactionConfig config;
    config.output_tail_units = 50;
    config.summary_cap_units = 400;

    ContextView ctx = filled_context(10, 400, 1200);
    REQUIRE(ctx.measure() >= budget.trigger_threshold());

    const fs::path dir = fresh_dir("agentrt_comp_pass");
    ExtractiveSummarizer summarizer;
    const CompactionRecord rec =
        compact(ctx, budget, config, summarizer, HistoryFacts{}, 0, dir);

    CHECK(rec.applied);
    CHECK(rec.validation_passed);
    CHECK(ctx.measure() < budget.trigger_threshold());
    CHECK(rec.range_first == 0);
    CHECK(rec.range_last >= rec.range_first);
    REQUIRE(!ctx.entries().empty());
    CHECK(ctx.entries()[0].is_summary);
    fs::remove_all(dir);
}

TEST_CASE("failed validation leaves the context byte-identical") {
    ContextBudget budget;
    budget.max_units = 1000;
    CompactionConfig config;
    HistoryFacts facts;
    facts.live_process_ids = {"p4"};
    facts.edited_paths = {"train.py"};

    ContextView ctx = filled_context(8, 300, 600);
    const std::string before = ctx.text();

    const fs::path dir = fresh_dir("agentrt_comp_fail");
    LossySummarizer lossy;  // drops the entity list, so checks (a)/(b) fail
    const CompactionRecord rec = compact(ctx, budget, config, lossy, facts, 3, dir);

    CHECK_FALSE(rec.applied);
    CHECK_FALSE(rec.validation_passed);
    CHECK(ctx.text() == before);

    bool live_failed = false;
    for (const auto& check : rec.checks) {
        if (check.name == "live_processes" && !check.passed) live_failed = true;
    }
    CHECK(live_failed);
    fs::remove_all(dir);
}

TEST_CASE("summary omitting one edited path fails check (b) only") {
    HistoryFacts facts;
    facts.live_process_ids = {"p1"};
    facts.edited_paths = {"a.py", "b.py"};
    facts.submission_status = "rejected";

    const std::string summary =
        "- progress note\nlive process: p1\nedited path: a.py\nsubmission status: rejected\n";
    const auto checks = validate_summary(summary, facts, 1000);
    REQUIRE(checks.size() == 4);
    CHECK(checks[0].passed);   // live processes
    CHECK_FALSE(checks[1].passed);  // edited paths: b.py missing
    CHECK(checks[1].evidence.find("b.py") != std::string::npos);
    CHECK(checks[2].passed);   // submission status
    CHECK(checks[3].passed);   // cap
}

TEST_CASE("empty-range facts make the entity checks vacuously pass") {
    const auto checks = validate_summary("anything at all", HistoryFacts{}, 100);
    REQUIRE(checks.size() == 4);
    CHECK(checks[0].passed);
    CHECK(checks[1].passed);
    CHECK(checks[2].passed);
}

TEST_CASE("summary over the cap fails check (d)") {
    const std::string big(5000, 's');
    const auto checks = validate_summary(big, HistoryFacts{}, 1000);
    CHECK_FALSE(checks[3].passed);
}

TEST_CASE("unavailable summarizer falls back to stage-1 truncation only") {
    ContextBudget budget;
    budget.max_units = 1000;
    CompactionConfig config;
    config.output_tail_units = 10;

    ContextView ctx = filled_context(6, 200, 2000);
    const std::int64_t before = ctx.measure();

    const fs::path dir = fresh_dir("agentrt_comp_unavail");
    UnavailableSummarizer unavailable;
    const CompactionRecord rec =
        compact(ctx, budget, config, unavailable, HistoryFacts{}, 1, dir);

    CHECK_FALSE(rec.applied);
    CHECK(ctx.measure() < before);       // outputs were stripped
    CHECK(ctx.entries().size() == 6);    // but no entries were replaced
    CHECK_FALSE(ctx.entries()[0].is_summary);

    // archive still complete: one prompt file and one (empty) summary file
    CHECK(fs::exists(dir / "compaction_1_prompt.txt"));
    CHECK(fs::exists(dir / "compaction_1_summary.txt"));
    CHECK(fs::file_size(dir / "compaction_1_summary.txt") == 0);
    fs::remove_all(dir);
}

TEST_CASE("every compact call archives exactly one prompt and one summary file") {
    const fs::path dir = fresh_dir("agentrt_comp_archive");
    ContextBudget budget;
    budget.max_units = 1500;
    CompactionConfig config;
    ExtractiveSummarizer ok;
    LossySummarizer lossy;
    HistoryFacts facts;
    facts.edited_paths = {"x.py"};

    int seq = 0;
    for (int round = 0; round < 4; ++round) {
        ContextView ctx = filled_context(6, 300, 800);
        Summarizer& s = round % 2 ? static_cast<Summarizer&>(lossy)
                                  : static_cast<Summarizer&>(ok);
        compact(ctx, budget, config, s, facts, seq++, dir);
        CHECK(files_in(dir) == 2 * seq);
    }
    CHECK(fs::exists(dir / "compaction_0_prompt.txt"));
    CHECK(fs::exists(dir / "compaction_3_summary.txt"));
    fs::remove_all(dir);
}

TEST_CASE("extractive summary preserves the entity section verbatim") {
    HistoryFacts facts;
    facts.live_process_ids = {"p9"};
    facts.edited_paths = {"deep/model.py"};
    facts.submission_status = "validated";

    ContextView ctx = filled_context(4, 120, 0);
    const std::string prompt = build_prompt(ctx.entries(), facts);
    ExtractiveSummarizer summarizer;
    const auto summary = summarizer.summarize(prompt);
    REQUIRE(summary.has_value());

    const auto checks = validate_summary(*summary, facts, 10000);
    for (const auto& check : checks) {
        CAPTURE(check.name);
        CHECK(check.passed);
    }
    CHECK(summary->find("did step 0.") != std::string::npos);  // first sentence per turn
}
