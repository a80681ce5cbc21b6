#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "agentrt/advisors.hpp"
#include "agentrt/clock.hpp"
#include "agentrt/snapshot.hpp"

namespace agentrt::policy {

struct PolicyInput {
    std::string context;  // post-compaction view
    const workspace::IDESnapshot* snapshot = nullptr;
    const std::vector<AdvisoryReview>* advisories = nullptr;
    Tick budget_remaining = 0;
};

class PolicyTimeout : public std::runtime_error {
public:
    PolicyTimeout() : std::runtime_error("policy timeout") {}
};

// The decision-maker: consumes context + snapshot, emits raw action text. No
// validity guarantee; the loop validates whatever comes back.
class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string decide(const PolicyInput& input) = 0;
};

// Plays back a fixed table of raw outputs; past the end it falls back to
// submit_final_answer with the configured artifacts.
class ScriptedPolicy : public Policy {
public:
    explicit ScriptedPolicy(std::vector<std::string> steps,
                            std::vector<std::string> fallback_artifacts = {});
    std::string decide(const PolicyInput& input) override;

private:
    std::vector<std::string> steps_;
    std::vector<std::string> fallback_artifacts_;
    std::size_t position_ = 0;
};

// Seeded generator of schema-valid actions across the whole vocabulary;
// deterministic for a fixed seed.
class MockLlmPolicy : public Policy {
public:
    explicit MockLlmPolicy(std::uint64_t seed, bool include_terminal = true);
    std::string decide(const PolicyInput& input) override;

private:
    std::mt19937_64 rng_;
    bool include_terminal_;
};

// Feeds recorded raw outputs back verbatim; used by deterministic replay.
class ReplayPolicy : public Policy {
public:
    explicit ReplayPolicy(std::vector<std::string> recorded_outputs);
    std::string decide(const PolicyInput& input) override;
    bool exhausted() const { return position_ >= recorded_outputs_.size(); }

private:
    std::vector<std::string> recorded_outputs_;
    std::size_t position_ = 0;
};

}  // namespace agentrt::policy
