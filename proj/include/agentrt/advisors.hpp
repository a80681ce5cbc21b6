#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "agentrt/clock.hpp"
#include "agentrt/json_util.hpp"

namespace agentrt::policy {

struct AdvisorResponse {
    std::string advisor_id;
    bool timed_out = false;
    bool failed = false;
    std::string analysis;
};

// Opaque advisor slot. Real frontier-model clients are out of scope; mock
// implementations answer deterministically and declare a local endpoint.
class Advisor {
public:
    virtual ~Advisor() = default;
    virtual std::string id() const = 0;
    virtual std::string endpoint() const = 0;  // "mock:..." / "local:..." / URL
    virtual AdvisorResponse analyze(const std::string& question,
                                    const std::vector<std::string>& context_refs,
                                    Tick timeout_ticks) = 0;
};

class MockAdvisor : public Advisor {
public:
    MockAdvisor(std::string id, std::string fixed_text, Tick delay_ticks = 0,
                std::string endpoint = "");
    std::string id() const override { return id_; }
    std::string endpoint() const override { return endpoint_; }
    AdvisorResponse analyze(const std::string& question,
                            const std::vector<std::string>& context_refs,
                            Tick timeout_ticks) override;

private:
    std::string id_;
    std::string fixed_text_;
    Tick delay_ticks_;
    std::string endpoint_;
};

struct AdvisorConfig {
    std::vector<std::shared_ptr<Advisor>> advisors;  // fixed order
    Tick per_advisor_timeout = 0;  // mock mode is instant; real mode 120 s
    bool offline_required = true;

    std::vector<std::string> advisor_ids() const;
};

struct AdvisoryReview {
    std::string question;
    std::vector<std::pair<std::string, std::string>> advisor_outputs;  // id -> analysis/marker
    std::string synthesis;
    std::int64_t created_turn = 0;

    Json to_json() const;
};

// Fans the question out to every advisor independently (no advisor sees
// another's output) and synthesizes attributed sections in advisor_ids order
// plus a consensus/disagreement digest. Section order and synthesis bytes do
// not depend on response arrival order. Archives the review when archive_dir
// is nonempty.
AdvisoryReview deep_think(const std::string& question,
                          const std::vector<std::string>& context_refs,
                          const AdvisorConfig& advisors, std::int64_t created_turn,
                          const std::filesystem::path& archive_dir = {});

struct IsolationVerdict {
    bool pass = false;
    std::vector<std::string> violations;
};

// Benchmark-mode guard: every advisor must attest a local endpoint. Any
// network-class endpoint fails the verdict and deep_think is disabled.
IsolationVerdict verify_isolation(const AdvisorConfig& advisors);

bool is_remote_endpoint(const std::string& endpoint);

}  // namespace agentrt::policy
