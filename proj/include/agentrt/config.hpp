#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agentrt/clock.hpp"
#include "agentrt/compaction.hpp"
#include "agentrt/executor.hpp"
#include "agentrt/interruption.hpp"
#include "agentrt/json_util.hpp"

namespace agentrt::harness {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& message) : std::runtime_error(message) {}
};

struct Budget {
    Tick max_ticks = 0;
    std::int64_t max_wall_seconds = 86400;

    bool valid() const { return max_ticks > 0 && max_wall_seconds > 0; }
};

struct AdvisorSpec {
    std::string id;
    std::string endpoint;  // "mock:<id>" by default
    std::string fixed_text;
    Tick delay_ticks = 0;
};

struct PolicySpec {
    enum class Kind { scripted, mock_llm };
    Kind kind = Kind::scripted;
    std::vector<std::string> steps;               // scripted
    std::vector<std::string> fallback_artifacts;  // scripted fallback submission
    std::uint64_t seed = 0;                       // mock_llm
    bool include_terminal = true;                 // mock_llm: allow submit variants
};

struct RunConfig {
    std::string task_id = "task";
    std::filesystem::path workspace_seed;  // empty -> start from an empty workspace
    Budget budget;
    bool offline = true;  // benchmark mode
    PolicySpec policy;
    std::vector<AdvisorSpec> advisors;
    Tick advisor_timeout = 0;
    interruption::InterruptionPolicy interruption;
    compaction::ContextBudget context_budget;
    compaction::CompactionConfig compaction;
    executor::ResourceLimits limits;
    executor::BackendKind backend = executor::BackendKind::simulated;
    bool backend_networked = false;  // backend declares it needs the network
    std::uint64_t seed = 0;
    std::string validator = "csv";  // submission validator hook: "csv" | "exists"
    bool fsync_log = true;

    Json to_json() const;
    static RunConfig from_json(const Json& j);
    std::string digest() const;
};

RunConfig load_config(const std::filesystem::path& file);
void save_config(const RunConfig& config, const std::filesystem::path& file);

}  // namespace agentrt::harness
