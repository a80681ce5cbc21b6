#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agentrt/clock.hpp"

namespace agentrt::executor {

// Line-oriented directives for the deterministic simulated backend:
//   sleep <s> | print <text> | alloc <bytes> | exit <code> | loss <float> | net
struct SimDirective {
    enum class Kind { sleep, print, alloc, exit_code, loss, net, invalid };
    Kind kind = Kind::invalid;
    std::int64_t int_arg = 0;
    double num_arg = 0.0;
    std::string text;
};

std::vector<SimDirective> parse_sim_script(const std::string& script);

// A simulated process is a pure function of (script, elapsed ticks): replaying
// the same clock sequence reproduces identical output, memory, and exit state.
class SimProcess {
public:
    explicit SimProcess(const std::string& script);

    struct State {
        bool finished = false;
        bool failed = false;        // exit code != 0 or invalid directive
        std::string error;          // failure detail
        std::string output;         // concatenated prints (and loss lines)
        std::int64_t memory_bytes = 0;
        bool net_attempted = false;
        Tick finish_elapsed = 0;    // process-relative, valid when finished
    };

    // State after `elapsed` ticks of process time. Directives other than sleep
    // take zero ticks; a directive runs once its cumulative sleep prefix has
    // elapsed.
    State state_at(Tick elapsed) const;

    // Elapsed tick at which the script finishes on its own (no interruption).
    Tick natural_finish() const;

private:
    std::vector<SimDirective> directives_;
    std::vector<Tick> fire_at_;  // cumulative sleep before each directive
    Tick natural_finish_ = 0;
};

}  // namespace agentrt::executor
