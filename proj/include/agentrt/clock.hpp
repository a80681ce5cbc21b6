#pragma once

#include <chrono>
#include <cstdint>
#include <thread>

namespace agentrt {

using Tick = std::int64_t;

// Logical time source for the run. Simulated runs use a manually advanced
// tick counter (1 tick == 1 second); real runs map wall-clock seconds onto
// ticks. Modules never read wall time themselves.
class Clock {
public:
    virtual ~Clock() = default;
    virtual Tick now() const = 0;
    virtual void advance(Tick ticks) = 0;
};

class SimClock : public Clock {
public:
    explicit SimClock(Tick start = 0) : now_(start) {}
    Tick now() const override { return now_; }
    void advance(Tick ticks) override {
        if (ticks > 0) now_ += ticks;
    }

private:
    Tick now_;
};

class WallClock : public Clock {
public:
    WallClock() : start_(std::chrono::steady_clock::now()) {}
    Tick now() const override {
        auto elapsed = std::chrono::steady_clock::now() - start_;
        return std::chrono::duration_cast<std::chrono::seconds>(elapsed).count();
    }
    void advance(Tick ticks) override {
        if (ticks > 0) std::this_thread::sleep_for(std::chrono::seconds(ticks));
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace agentrt
