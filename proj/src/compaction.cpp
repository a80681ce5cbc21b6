#include "agentrt/compaction.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace agentrt::compaction {

std::int64_t measure_text(const std::string& text) {
    return static_cast<std::int64_t>(text.size()) / 4;
}

std::string ContextView::text() const {
    std::string out;
    for (const ContextEntry& e : entries_) {
        if (e.is_summary) {
            out += "## Summary\n";
            out += e.body;
        } else {
            out += "## Turn " + std::to_string(e.turn_index) + "\n";
            out += e.body;
            if (!e.verbose_output.empty()) {
                out += '\n';
                out += e.verbose_output;
            }
        }
        out += "\n\n";
    }
    return out;
}

bool operator==(const ContextView& a, const ContextView& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (size_t i = 0; i < a.entries_.size(); ++i) {
        const auto& x = a.entries_[i];
        const auto& y = b.entries_[i];
        if (x.turn_index != y.turn_index || x.is_summary != y.is_summary ||
            x.body != y.body || x.verbose_output != y.verbose_output) {
            return false;
        }
    }
    return true;
}

Json CompactionRecord::to_json() const {
    Json j;
    j["sequence_no"] = sequence_no;
    j["input_range"] = Json::array({range_first, range_last});
    j["prompt"] = prompt;
    j["summary"] = summary;
    Json checks_json = Json::array();
    for (const auto& c : checks) {
        checks_json.push_back(Json{{"name", c.name}, {"passed", c.passed}, {"evidence", c.evidence}});
    }
    j["validation"] = Json{{"passed", validation_passed}, {"checks", checks_json}};
    j["applied"] = applied;
    return j;
}

CompactionRecord CompactionRecord::from_json(const Json& j) {
    CompactionRecord r;
    r.sequence_no = j.value("sequence_no", 0);
    if (j.contains("input_range") && j["input_range"].is_array() &&
        j["input_range"].size() == 2) {
        r.range_first = j["input_range"][0].get<std::int64_t>();
        r.range_last = j["input_range"][1].get<std::int64_t>();
    }
    r.prompt = j.value("prompt", "");
    r.summary = j.value("summary", "");
    if (j.contains("validation")) {
        r.validation_passed = j["validation"].value("passed", false);
        for (const Json& c : j["validation"].value("checks", Json::array())) {
            r.checks.push_back({c.value("name", ""), c.value("passed", false),
                                c.value("evidence", "")});
        }
    }
    r.applied = j.value("applied", false);
    return r;
}

namespace {

constexpr const char* kEntitiesHeader = "ENTITIES";

std::string entities_section(const HistoryFacts& facts) {
    std::string out = kEntitiesHeader;
    out += '\n';
    if (facts.live_process_ids.empty() && facts.edited_paths.empty() &&
        !facts.submission_status) {
        out += "none\n";
        return out;
    }
    for (const auto& id : facts.live_process_ids) out += "live process: " + id + "\n";
    for (const auto& path : facts.edited_paths) out += "edited path: " + path + "\n";
    if (facts.submission_status) {
        out += "submission status: " + *facts.submission_status + "\n";
    }
    return out;
}

std::string first_sentence(const std::string& body) {
    const size_t dot = body.find('.');
    const size_t nl = body.find('\n');
    size_t cut = std::min(dot == std::string::npos ? body.size() : dot + 1,
                          nl == std::string::npos ? body.size() : nl);
    return body.substr(0, cut);
}

void strip_verbose_tail(ContextEntry& entry, std::int64_t tail_units) {
    const auto keep_chars = static_cast<size_t>(tail_units) * 4;
    if (entry.verbose_output.size() > keep_chars) {
        entry.verbose_output =
            "[output truncated]\n" +
            entry.verbose_output.substr(entry.verbose_output.size() - keep_chars);
    }
}

void write_archive(const fs::path& dir, const std::string& name, const std::string& bytes) {
    fs::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << bytes;
}

}  // namespace

std::optional<std::string> ExtractiveSummarizer::summarize(const std::string& prompt) {
    std::istringstream in(prompt);
    std::string line;
    std::string out;
    std::string body;
    bool in_section = false;
    bool in_entities = false;
    auto flush = [&]() {
        if (in_section) {
            const std::string sentence = first_sentence(body);
            if (!sentence.empty()) {
                out += "- " + sentence + "\n";
            }
        }
        body.clear();
    };
    while (std::getline(in, line)) {
        if (in_entities) {
            out += line;
            out += '\n';
            continue;
        }
        if (line == kEntitiesHeader) {
            flush();
            in_section = false;
            in_entities = true;
            out += line;
            out += '\n';
            continue;
        }
        if (line.rfind("## ", 0) == 0) {
            flush();
            in_section = true;
            continue;
        }
        if (in_section && !line.empty()) {
            body += line;
            body += '\n';
        }
    }
    flush();
    return out;
}

std::optional<std::string> LossySummarizer::summarize(const std::string& prompt) {
    ExtractiveSummarizer inner;
    std::string full = *inner.summarize(prompt);
    const size_t entities = full.find(kEntitiesHeader);
    if (entities != std::string::npos) full.resize(entities);
    full += "summary without the entity list\n";
    return full;
}

std::string build_prompt(const std::vector<ContextEntry>& to_summarize,
                         const HistoryFacts& facts) {
    std::string prompt =
        "Summarize the turns below into a concise progress note.\n"
        "Preserve every item in the ENTITIES section verbatim.\n\n";
    for (const ContextEntry& e : to_summarize) {
        if (e.is_summary) {
            prompt += "## Summary\n";
        } else {
            prompt += "## Turn " + std::to_string(e.turn_index) + "\n";
        }
        prompt += e.body;
        if (!e.verbose_output.empty()) {
            prompt += '\n';
            prompt += e.verbose_output;
        }
        prompt += "\n\n";
    }
    prompt += entities_section(facts);
    return prompt;
}

std::vector<CompactionCheck> validate_summary(const std::string& summary,
                                              const HistoryFacts& facts,
                                              std::int64_t summary_cap_units) {
    std::vector<CompactionCheck> checks;

    CompactionCheck live{"live_processes", true, "no live processes required"};
    std::string missing;
    for (const auto& id : facts.live_process_ids) {
        if (summary.find(id) == std::string::npos) {
            live.passed = false;
            missing += (missing.empty() ? "" : ", ") + id;
        }
    }
    if (!facts.live_process_ids.empty()) {
        live.evidence = live.passed ? "all live process ids present"
                                    : "missing live process ids: " + missing;
    }
    checks.push_back(live);

    CompactionCheck paths{"edited_paths", true, "no edited paths required"};
    missing.clear();
    for (const auto& path : facts.edited_paths) {
        if (summary.find(path) == std::string::npos) {
            paths.passed = false;
            missing += (missing.empty() ? "" : ", ") + path;
        }
    }
    if (!facts.edited_paths.empty()) {
        paths.evidence = paths.passed ? "all edited paths present"
                                      : "missing edited paths: " + missing;
    }
    checks.push_back(paths);

    CompactionCheck submission{"submission_status", true, "no submission yet"};
    if (facts.submission_status) {
        const std::string needle = "submission status: " + *facts.submission_status;
        submission.passed = summary.find(needle) != std::string::npos;
        submission.evidence = submission.passed ? "latest submission status present"
                                                : "missing '" + needle + "'";
    }
    checks.push_back(submission);

    const std::int64_t units = measure_text(summary);
    CompactionCheck cap{"size_cap", units <= summary_cap_units,
                        std::to_string(units) + " units vs cap " +
                            std::to_string(summary_cap_units)};
    checks.push_back(cap);
    return checks;
}

CompactionRecord compact(ContextView& context, const ContextBudget& budget,
                         const CompactionConfig& config, Summarizer& summarizer,
                         const HistoryFacts& facts, int sequence_no,
                         const fs::path& agent_metadata_dir) {
    CompactionRecord record;
    record.sequence_no = sequence_no;

    // Stage 1: strip verbose outputs down to the retained tail, on a working
    // copy. The durable log is never touched by any stage.
    std::vector<ContextEntry> working = context.entries();
    for (ContextEntry& e : working) strip_verbose_tail(e, config.output_tail_units);

    // Stage 2: summarize the oldest fraction, growing the slice until the
    // projected post-compaction measure lands under the trigger threshold.
    const size_t n = working.size();
    size_t slice = n == 0 ? 0
                          : std::max<size_t>(
                                1, static_cast<size_t>(config.summarize_fraction *
                                                       static_cast<double>(n)));
    slice = std::min(slice, n);
    auto kept_measure = [&](size_t k) {
        ContextView kept;
        for (size_t i = k; i < n; ++i) kept.append(working[i]);
        return kept.measure();
    };
    const std::int64_t slack = 64;
    while (slice < n &&
           config.summary_cap_units + kept_measure(slice) + slack >=
               budget.trigger_threshold()) {
        ++slice;
    }

    std::vector<ContextEntry> to_summarize(working.begin(),
                                           working.begin() + static_cast<long>(slice));
    for (const ContextEntry& e : to_summarize) {
        if (e.is_summary) continue;
        if (record.range_first < 0) record.range_first = e.turn_index;
        record.range_last = e.turn_index;
    }
    record.prompt = build_prompt(to_summarize, facts);

    const std::string prompt_name =
        "compaction_" + std::to_string(sequence_no) + "_prompt.txt";
    const std::string summary_name =
        "compaction_" + std::to_string(sequence_no) + "_summary.txt";
    write_archive(agent_metadata_dir, prompt_name, record.prompt);

    const std::optional<std::string> summary = summarizer.summarize(record.prompt);
    if (!summary) {
        // Summarizer unavailable: keep the stage-1 truncation as a fallback.
        record.checks.push_back({"summarizer", false, "summarizer unavailable"});
        record.validation_passed = false;
        record.applied = false;
        write_archive(agent_metadata_dir, summary_name, "");
        ContextView fallback;
        for (auto& e : working) fallback.append(std::move(e));
        context = std::move(fallback);
        return record;
    }
    record.summary = *summary;
    write_archive(agent_metadata_dir, summary_name, record.summary);

    // Stage 3: validate.
    record.checks = validate_summary(record.summary, facts, config.summary_cap_units);
    record.validation_passed =
        std::all_of(record.checks.begin(), record.checks.end(),
                    [](const CompactionCheck& c) { return c.passed; });

    // Stage 4: replace the summarized history only on successful validation.
    if (record.validation_passed) {
        ContextView next;
        ContextEntry summary_entry;
        summary_entry.is_summary = true;
        summary_entry.turn_index = -1;
        summary_entry.body = record.summary;
        next.append(std::move(summary_entry));
        for (size_t i = slice; i < n; ++i) next.append(std::move(working[i]));
        context = std::move(next);
        record.applied = true;
    } else {
        record.applied = false;  // context left byte-identical
    }
    return record;
}

}  // namespace agentrt::compaction
