#include "agentrt/interruption.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <regex>
#include <sstream>

namespace agentrt::interruption {

std::string reason_name(Reason reason) {
    switch (reason) {
        case Reason::none: return "none";
        case Reason::convergence: return "convergence";
        case Reason::resource_limit: return "resource_limit";
        case Reason::non_convergent: return "non_convergent";
    }
    return "none";
}

Json InterruptDecision::to_json() const {
    Json j;
    j["fire"] = fire;
    j["reason"] = reason_name(reason);
    j["evidence"] = evidence;
    return j;
}

std::string normalize_log_line(const std::string& line) {
    static const std::regex iso_ts(
        R"(\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(\.\d+)?)");
    static const std::regex bare_ts(R"(\b\d{2}:\d{2}:\d{2}(\.\d+)?\b)");
    static const std::regex hex_addr(R"(0[xX][0-9a-fA-F]+)");
    static const std::regex line_ref(R"(\bline \d+\b)");
    std::string out = std::regex_replace(line, iso_ts, "<ts>");
    out = std::regex_replace(out, bare_ts, "<ts>");
    out = std::regex_replace(out, hex_addr, "<addr>");
    out = std::regex_replace(out, line_ref, "line <n>");
    return out;
}

bool is_error_line(const std::string& line) {
    std::string lower(line.size(), '\0');
    std::transform(line.begin(), line.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    static const char* markers[] = {"error", "exception", "traceback", "fatal", "fail"};
    for (const char* m : markers) {
        if (lower.find(m) != std::string::npos) return true;
    }
    return false;
}

MetricStream extract_metric(const std::vector<std::string>& lines, const std::string& name) {
    MetricStream stream;
    stream.name = name;
    Tick ordinal = 0;
    for (const std::string& line : lines) {
        std::istringstream in(line);
        std::string word;
        in >> word;
        if (word != name) continue;
        std::string value_str;
        in >> value_str;
        try {
            size_t pos = 0;
            const double value = std::stod(value_str, &pos);
            if (pos == value_str.size()) {
                stream.samples.push_back({ordinal++, value});
            }
        } catch (...) {
        }
    }
    return stream;
}

namespace {

std::string format_value(double v) {
    std::ostringstream out;
    out.precision(9);
    out << v;
    return out.str();
}

double best_of(const std::vector<MetricSample>& samples, size_t first, size_t last,
               Orientation orientation) {
    double best = orientation == Orientation::minimize
                      ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
    for (size_t i = first; i < last; ++i) {
        if (orientation == Orientation::minimize) {
            best = std::min(best, samples[i].value);
        } else {
            best = std::max(best, samples[i].value);
        }
    }
    return best;
}

}  // namespace

InterruptDecision check_convergence(const MetricStream& stream,
                                    const InterruptionPolicy& policy) {
    InterruptDecision decision;
    if (!policy.rule_convergence) return decision;
    const auto& samples = stream.samples;
    const auto w = static_cast<size_t>(policy.window_w);
    // The trailing window needs at least one earlier sample to compare against.
    if (samples.size() < w + 1) return decision;

    const size_t window_start = samples.size() - w;
    const double best_window = best_of(samples, window_start, samples.size(), policy.orientation);
    const double best_before = best_of(samples, 0, window_start, policy.orientation);

    const double raw_gain = policy.orientation == Orientation::minimize
                                ? best_before - best_window
                                : best_window - best_before;
    const double denom = std::abs(best_before);
    double rel_gain;
    if (denom == 0.0) {
        rel_gain = raw_gain > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    } else {
        rel_gain = raw_gain / denom;
    }
    if (rel_gain < policy.rel_epsilon) {
        decision.fire = true;
        decision.reason = Reason::convergence;
        decision.evidence = stream.name + ": best in window " + format_value(best_window) +
                            " vs best before " + format_value(best_before) +
                            ", relative improvement " + format_value(rel_gain) + " < " +
                            format_value(policy.rel_epsilon);
    }
    return decision;
}

InterruptDecision check_nonconvergence(const std::vector<std::string>& output_lines,
                                       const InterruptionPolicy& policy) {
    InterruptDecision decision;
    if (!policy.rule_nonconvergent || output_lines.empty()) return decision;

    // (a) repeated normalized error lines
    std::map<std::string, int> counts;
    for (const std::string& line : output_lines) {
        if (line.empty() || !is_error_line(line)) continue;
        const std::string normalized = normalize_log_line(line);
        const int count = ++counts[normalized];
        if (count >= policy.error_repeat_k) {
            decision.fire = true;
            decision.reason = Reason::non_convergent;
            decision.evidence = "error line repeated " + std::to_string(count) +
                                " times (threshold " + std::to_string(policy.error_repeat_k) +
                                "): " + normalized;
            return decision;
        }
    }

    // (b) the declared metric worsening strictly for a run of samples
    const MetricStream stream = extract_metric(output_lines, policy.metric_name);
    const auto patience = static_cast<size_t>(policy.stagnation_patience);
    if (patience >= 2 && stream.samples.size() >= patience) {
        size_t run = 1;
        for (size_t i = 1; i < stream.samples.size(); ++i) {
            const double prev = stream.samples[i - 1].value;
            const double cur = stream.samples[i].value;
            const bool worse = policy.orientation == Orientation::minimize ? cur > prev
                                                                           : cur < prev;
            run = worse ? run + 1 : 1;
            if (run >= patience) {
                decision.fire = true;
                decision.reason = Reason::non_convergent;
                decision.evidence = policy.metric_name + " worsened for " +
                                    std::to_string(run) + " consecutive samples (patience " +
                                    std::to_string(policy.stagnation_patience) + ")";
                return decision;
            }
        }
    }
    return decision;
}

InterruptDecision evaluate(const executor::PollResult& poll,
                           const std::optional<executor::LimitViolation>& violation,
                           const std::vector<std::string>& output_lines,
                           const InterruptionPolicy& policy) {
    InterruptDecision decision;
    if (poll.status != "still_executing") return decision;

    if (policy.rule_resource && violation) {
        decision.fire = true;
        decision.reason = Reason::resource_limit;
        decision.evidence = violation->limit + " limit: " + violation->evidence;
        return decision;
    }
    InterruptDecision nonconv = check_nonconvergence(output_lines, policy);
    if (nonconv.fire) return nonconv;
    const MetricStream stream = extract_metric(output_lines, policy.metric_name);
    return check_convergence(stream, policy);
}

}  // namespace agentrt::interruption
