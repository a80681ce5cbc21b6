#include "agentrt/config.hpp"

#include <fstream>
#include <sstream>

#include "agentrt/hash.hpp"

namespace fs = std::filesystem;

namespace agentrt::harness {

Json RunConfig::to_json() const {
    Json j;
    j["task_id"] = task_id;
    j["workspace_seed"] = workspace_seed.generic_string();
    j["budget"] = Json{{"max_ticks", budget.max_ticks},
                       {"max_wall_seconds", budget.max_wall_seconds}};
    j["offline"] = offline;
    j["seed"] = seed;

    Json p;
    p["type"] = policy.kind == PolicySpec::Kind::scripted ? "scripted" : "mock_llm";
    p["steps"] = policy.steps;
    p["fallback_artifacts"] = policy.fallback_artifacts;
    p["seed"] = policy.seed;
    p["include_terminal"] = policy.include_terminal;
    j["policy"] = p;

    Json advs = Json::array();
    for (const auto& a : advisors) {
        advs.push_back(Json{{"id", a.id},
                            {"endpoint", a.endpoint},
                            {"fixed_text", a.fixed_text},
                            {"delay_ticks", a.delay_ticks}});
    }
    j["advisors"] = advs;
    j["advisor_timeout"] = advisor_timeout;

    j["interruption"] = Json{
        {"window_w", interruption.window_w},
        {"rel_epsilon", interruption.rel_epsilon},
        {"error_repeat_k", interruption.error_repeat_k},
        {"stagnation_patience", interruption.stagnation_patience},
        {"metric", interruption.metric_name},
        {"orientation",
         interruption.orientation == interruption::Orientation::minimize ? "minimize"
                                                                         : "maximize"},
        {"rules", Json{{"convergence", interruption.rule_convergence},
                       {"non_convergent", interruption.rule_nonconvergent},
                       {"resource", interruption.rule_resource}}}};

    j["context"] = Json{{"max_units", context_budget.max_units},
                        {"trigger_fraction", context_budget.trigger_fraction},
                        {"summarize_fraction", compaction.summarize_fraction},
                        {"output_tail_units", compaction.output_tail_units},
                        {"summary_cap_units", compaction.summary_cap_units}};

    j["limits"] = Json{{"max_memory_bytes", limits.max_memory_bytes},
                       {"max_runtime_seconds", limits.max_runtime_seconds},
                       {"max_output_bytes", limits.max_output_bytes}};

    j["backend"] = backend == executor::BackendKind::simulated ? "simulated" : "subprocess";
    j["backend_networked"] = backend_networked;
    j["validator"] = validator;
    j["fsync_log"] = fsync_log;
    return j;
}

RunConfig RunConfig::from_json(const Json& j) {
    RunConfig c;
    c.task_id = j.value("task_id", "task");
    c.workspace_seed = j.value("workspace_seed", "");
    if (j.contains("budget")) {
        c.budget.max_ticks = j["budget"].value("max_ticks", std::int64_t{0});
        c.budget.max_wall_seconds = j["budget"].value("max_wall_seconds", std::int64_t{86400});
    }
    c.offline = j.value("offline", true);
    c.seed = j.value("seed", std::uint64_t{0});

    if (j.contains("policy")) {
        const Json& p = j["policy"];
        const std::string type = p.value("type", "scripted");
        if (type == "mock_llm") {
            c.policy.kind = PolicySpec::Kind::mock_llm;
        } else if (type == "scripted") {
            c.policy.kind = PolicySpec::Kind::scripted;
        } else {
            throw ConfigError("unknown policy type '" + type + "'");
        }
        for (const Json& s : p.value("steps", Json::array())) {
            c.policy.steps.push_back(s.is_string() ? s.get<std::string>() : s.dump());
        }
        for (const Json& s : p.value("fallback_artifacts", Json::array())) {
            c.policy.fallback_artifacts.push_back(s.get<std::string>());
        }
        c.policy.seed = p.value("seed", std::uint64_t{0});
        c.policy.include_terminal = p.value("include_terminal", true);
    }

    for (const Json& a : j.value("advisors", Json::array())) {
        AdvisorSpec spec;
        spec.id = a.value("id", "");
        spec.endpoint = a.value("endpoint", "mock:" + spec.id);
        spec.fixed_text = a.value("fixed_text", "");
        spec.delay_ticks = a.value("delay_ticks", std::int64_t{0});
        c.advisors.push_back(std::move(spec));
    }
    c.advisor_timeout = j.value("advisor_timeout", std::int64_t{0});

    if (j.contains("interruption")) {
        const Json& tp = j["interruption"];
        c.interruption.window_w = tp.value("window_w", 5);
        c.interruption.rel_epsilon = tp.value("rel_epsilon", 1e-3);
        c.interruption.error_repeat_k = tp.value("error_repeat_k", 3);
        c.interruption.stagnation_patience = tp.value("stagnation_patience", 5);
        c.interruption.metric_name = tp.value("metric", "loss");
        c.interruption.orientation = tp.value("orientation", "minimize") == "maximize"
                                         ? interruption::Orientation::maximize
                                         : interruption::Orientation::minimize;
        if (tp.contains("rules")) {
            c.interruption.rule_convergence = tp["rules"].value("convergence", true);
            c.interruption.rule_nonconvergent = tp["rules"].value("non_convergent", true);
            c.interruption.rule_resource = tp["rules"].value("resource", true);
        }
    }

    if (j.contains("context")) {
        const Json& ctx = j["context"];
        c.context_budget.max_units = ctx.value("max_units", std::int64_t{200000});
        c.context_budget.trigger_fraction = ctx.value("trigger_fraction", 0.8);
        c.compaction.summarize_fraction = ctx.value("summarize_fraction", 0.5);
        c.compaction.output_tail_units = ctx.value("output_tail_units", std::int64_t{2000});
        c.compaction.summary_cap_units = ctx.value("summary_cap_units", std::int64_t{4000});
    }

    if (j.contains("limits")) {
        const Json& lim = j["limits"];
        c.limits.max_memory_bytes = lim.value("max_memory_bytes", std::int64_t{1} << 30);
        c.limits.max_runtime_seconds = lim.value("max_runtime_seconds", std::int64_t{3600});
        c.limits.max_output_bytes = lim.value("max_output_bytes", std::int64_t{1} << 20);
    }

    const std::string backend = j.value("backend", "simulated");
    if (backend == "subprocess") {
        c.backend = executor::BackendKind::subprocess;
    } else if (backend == "simulated") {
        c.backend = executor::BackendKind::simulated;
    } else {
        throw ConfigError("unknown backend '" + backend + "'");
    }
    c.backend_networked = j.value("backend_networked", false);
    c.validator = j.value("validator", "csv");
    c.fsync_log = j.value("fsync_log", true);
    return c;
}

std::string RunConfig::digest() const { return content_digest(canonical_dump(to_json())); }

RunConfig load_config(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    Json j = Json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + file.string());
    return RunConfig::from_json(j);
}

void save_config(const RunConfig& config, const fs::path& file) {
    fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << config.to_json().dump(2) << "\n";
}

}  // namespace agentrt::harness
