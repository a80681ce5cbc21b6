#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "agentrt/clock.hpp"
#include "agentrt/executor.hpp"
#include "agentrt/json_util.hpp"

namespace agentrt::interruption {

struct MetricSample {
    Tick tick = 0;
    double value = 0.0;
};

struct MetricStream {
    std::string name;
    std::vector<MetricSample> samples;  // ticks strictly increasing
};

enum class Orientation { minimize, maximize };

struct InterruptionPolicy {
    int window_w = 5;
    double rel_epsilon = 1e-3;
    int error_repeat_k = 3;
    int stagnation_patience = 5;
    std::string metric_name = "loss";
    Orientation orientation = Orientation::minimize;
    bool rule_convergence = true;
    bool rule_nonconvergent = true;
    bool rule_resource = true;

    bool valid() const { return window_w >= 2 && rel_epsilon > 0 && error_repeat_k >= 2; }
};

enum class Reason { none, convergence, resource_limit, non_convergent };

std::string reason_name(Reason reason);

struct InterruptDecision {
    bool fire = false;
    Reason reason = Reason::none;
    std::string evidence;

    Json to_json() const;
    bool operator==(const InterruptDecision&) const = default;
};

// Normalization for repetition counting: timestamps, hex addresses, and
// "line N" references are replaced by fixed placeholders.
std::string normalize_log_line(const std::string& line);

// A line counts as an error line when its lowercase form contains one of:
// error, exception, traceback, fatal, fail.
bool is_error_line(const std::string& line);

// Parses "<name> <float>" lines into a stream; sample ticks are ordinals.
MetricStream extract_metric(const std::vector<std::string>& lines, const std::string& name);

// Fires iff the best value in the trailing window improves on the best value
// before that window by less than rel_epsilon (relative). Needs at least
// window_w + 1 samples; fewer yields none.
InterruptDecision check_convergence(const MetricStream& stream, const InterruptionPolicy& policy);

// Fires iff (a) the same normalized error line occurs >= error_repeat_k times,
// or (b) the declared metric worsens strictly for a run of stagnation_patience
// consecutive samples.
InterruptDecision check_nonconvergence(const std::vector<std::string>& output_lines,
                                       const InterruptionPolicy& policy);

// Highest-priority firing rule: resource_limit > non_convergent > convergence.
// Only live processes are evaluated; resource evidence comes from the executor.
InterruptDecision evaluate(const executor::PollResult& poll,
                           const std::optional<executor::LimitViolation>& violation,
                           const std::vector<std::string>& output_lines,
                           const InterruptionPolicy& policy);

}  // namespace agentrt::interruption
