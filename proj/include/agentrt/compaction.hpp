#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agentrt/json_util.hpp"

namespace agentrt::compaction {

// Fixed unit rule: one unit per four characters, floor.
std::int64_t measure_text(const std::string& text);

struct ContextBudget {
    std::int64_t max_units = 200000;
    double trigger_fraction = 0.8;

    std::int64_t trigger_threshold() const {
        return static_cast<std::int64_t>(trigger_fraction * static_cast<double>(max_units));
    }
};

struct CompactionConfig {
    double summarize_fraction = 0.5;      // oldest fraction of turn entries
    std::int64_t output_tail_units = 2000;  // retained tail of verbose outputs
    std::int64_t summary_cap_units = 4000;
};

// One turn's contribution to the policy-facing context. Verbose process and
// cell output is kept separable so stage 1 can strip it without touching the
// durable log.
struct ContextEntry {
    std::int64_t turn_index = -1;
    bool is_summary = false;
    std::string body;
    std::string verbose_output;
};

class ContextView {
public:
    void append(ContextEntry entry) { entries_.push_back(std::move(entry)); }
    const std::vector<ContextEntry>& entries() const { return entries_; }
    std::string text() const;
    std::int64_t measure() const { return measure_text(text()); }

    friend bool operator==(const ContextView&, const ContextView&);
    std::vector<ContextEntry>& mutable_entries() { return entries_; }

private:
    std::vector<ContextEntry> entries_;
};

struct CompactionCheck {
    std::string name;
    bool passed = false;
    std::string evidence;
};

struct CompactionRecord {
    int sequence_no = 0;
    std::int64_t range_first = -1;  // oldest summarized turn
    std::int64_t range_last = -1;   // newest summarized turn
    std::string prompt;
    std::string summary;
    bool validation_passed = false;
    std::vector<CompactionCheck> checks;
    bool applied = false;

    Json to_json() const;
    static CompactionRecord from_json(const Json& j);
};

// Entities that a summary must preserve, extracted mechanically from the
// durable log over the summarized turn range.
struct HistoryFacts {
    std::vector<std::string> live_process_ids;
    std::vector<std::string> edited_paths;
    std::optional<std::string> submission_status;
};

class Summarizer {
public:
    virtual ~Summarizer() = default;
    // nullopt means the summarizer is unavailable.
    virtual std::optional<std::string> summarize(const std::string& prompt) = 0;
};

// Deterministic extractive summarizer used in CI: first sentence of each turn
// section plus the prompt's entity list, verbatim.
class ExtractiveSummarizer : public Summarizer {
public:
    std::optional<std::string> summarize(const std::string& prompt) override;
};

// Fault-injection variants for tests.
class UnavailableSummarizer : public Summarizer {
public:
    std::optional<std::string> summarize(const std::string&) override { return std::nullopt; }
};
class LossySummarizer : public Summarizer {  // drops the entity list
public:
    std::optional<std::string> summarize(const std::string& prompt) override;
};

std::string build_prompt(const std::vector<ContextEntry>& to_summarize, const HistoryFacts& facts);

// Checks (a)-(d): live process ids present, edited paths present, latest
// submission status present, summary within the unit cap.
std::vector<CompactionCheck> validate_summary(const std::string& summary,
                                              const HistoryFacts& facts,
                                              std::int64_t summary_cap_units);

// Runs the four stages. On validation pass the context becomes summary entry +
// retained recent turns; on fail the context is left byte-identical; on
// summarizer failure only stage 1 (output stripping) is kept. Always archives
// exactly one prompt file and one summary file under agent_metadata_dir.
CompactionRecord compact(ContextView& context, const ContextBudget& budget,
                         const CompactionConfig& config, Summarizer& summarizer,
                         const HistoryFacts& facts, int sequence_no,
                         const std::filesystem::path& agent_metadata_dir);

}  // namespace agentrt::compaction
