#include "agentrt/sim_process.hpp"

#include <sstream>

namespace agentrt::executor {

namespace {

bool parse_int(const std::string& s, std::int64_t* out) {
    if (s.empty()) return false;
    try {
        size_t pos = 0;
        *out = std::stoll(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

bool parse_double(const std::string& s, double* out) {
    if (s.empty()) return false;
    try {
        size_t pos = 0;
        *out = std::stod(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

}  // namespace

std::vector<SimDirective> parse_sim_script(const std::string& script) {
    std::vector<SimDirective> directives;
    std::istringstream in(script);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        SimDirective d;
        std::string arg;
        if (word == "sleep") {
            ls >> arg;
            d.kind = parse_int(arg, &d.int_arg) && d.int_arg >= 0 ? SimDirective::Kind::sleep
                                                                  : SimDirective::Kind::invalid;
        } else if (word == "print") {
            d.kind = SimDirective::Kind::print;
            std::getline(ls, d.text);
            if (!d.text.empty() && d.text.front() == ' ') d.text.erase(0, 1);
        } else if (word == "alloc") {
            ls >> arg;
            d.kind = parse_int(arg, &d.int_arg) && d.int_arg >= 0 ? SimDirective::Kind::alloc
                                                                  : SimDirective::Kind::invalid;
        } else if (word == "exit") {
            ls >> arg;
            d.kind = parse_int(arg, &d.int_arg) ? SimDirective::Kind::exit_code
                                                : SimDirective::Kind::invalid;
        } else if (word == "loss") {
            ls >> arg;
            d.kind = parse_double(arg, &d.num_arg) ? SimDirective::Kind::loss
                                                   : SimDirective::Kind::invalid;
            d.text = arg;
        } else if (word == "net") {
            d.kind = SimDirective::Kind::net;
        } else {
            d.kind = SimDirective::Kind::invalid;
        }
        if (d.kind == SimDirective::Kind::invalid) {
            d.text = "invalid directive at line " + std::to_string(line_no) + ": " + line;
        }
        directives.push_back(std::move(d));
    }
    return directives;
}

SimProcess::SimProcess(const std::string& script) : directives_(parse_sim_script(script)) {
    Tick at = 0;
    fire_at_.reserve(directives_.size());
    for (const SimDirective& d : directives_) {
        fire_at_.push_back(at);
        if (d.kind == SimDirective::Kind::sleep) at += d.int_arg;
        if (d.kind == SimDirective::Kind::exit_code ||
            d.kind == SimDirective::Kind::invalid) {
            break;  // nothing past a terminating directive executes
        }
    }
    natural_finish_ = at;
}

SimProcess::State SimProcess::state_at(Tick elapsed) const {
    State state;
    for (size_t i = 0; i < fire_at_.size(); ++i) {
        if (fire_at_[i] > elapsed) return state;
        const SimDirective& d = directives_[i];
        switch (d.kind) {
            case SimDirective::Kind::sleep:
                if (fire_at_[i] + d.int_arg > elapsed) return state;  // mid-sleep
                break;
            case SimDirective::Kind::print:
                state.output += d.text;
                state.output += '\n';
                break;
            case SimDirective::Kind::alloc:
                state.memory_bytes += d.int_arg;
                break;
            case SimDirective::Kind::loss:
                state.output += "loss " + d.text + "\n";
                break;
            case SimDirective::Kind::net:
                state.net_attempted = true;
                break;
            case SimDirective::Kind::exit_code:
                state.finished = true;
                state.failed = d.int_arg != 0;
                if (state.failed) state.error = "exit code " + std::to_string(d.int_arg);
                state.finish_elapsed = fire_at_[i];
                return state;
            case SimDirective::Kind::invalid:
                state.finished = true;
                state.failed = true;
                state.error = d.text;
                state.finish_elapsed = fire_at_[i];
                return state;
        }
    }
    // Script exhausted without an explicit exit: implicit success.
    state.finished = true;
    state.finish_elapsed = natural_finish_;
    return state;
}

Tick SimProcess::natural_finish() const { return natural_finish_; }

}  // namespace agentrt::executor
