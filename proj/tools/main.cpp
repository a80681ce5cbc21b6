#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "agentrt/config.hpp"
#include "agentrt/harness.hpp"
#include "agentrt/stats.hpp"

namespace fs = std::filesystem;
using namespace agentrt;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitNoMedal = 2;
constexpr int kExitFault = 3;

int cmd_run(const std::string& config_file, const std::string& out_dir) {
    harness::RunConfig config = harness::load_config(config_file);
    const harness::RunOutcome outcome = harness::run(config, out_dir);
    std::cout << outcome.to_json().dump(2) << "\n";
    if (outcome.reason.rfind("governance_refusal", 0) == 0) return kExitFault;
    return outcome.medal ? kExitSuccess : kExitNoMedal;
}

int cmd_replay(const std::string& run_dir) {
    const fs::path scratch = fs::path(run_dir) / "replay_scratch";
    fs::remove_all(scratch);
    const harness::ReplayReport report = harness::replay_run(run_dir, scratch);
    if (report.ok) {
        std::cout << "replay ok: " << report.turns_compared << " turns, zero divergences\n";
        return kExitSuccess;
    }
    std::cout << "replay divergence at turn " << report.divergence->turn << ", field '"
              << report.divergence->field << "'\n";
    return kExitFault;
}

int cmd_verify_stats(const std::string& outcomes_file, const std::string& estimator_name) {
    const auto estimator = estimator_name == "n-1"
                               ? harness::StdEstimator::sample_n_minus_1
                               : harness::StdEstimator::population_n;
    const auto rows = harness::load_outcomes(outcomes_file);
    const auto stats = harness::medal_stats(rows, estimator);
    std::cout << harness::render_stats_table(stats);
    return kExitSuccess;
}

int cmd_report(const std::string& stats_file, const std::string& failed_tasks_file) {
    const auto rows = harness::load_leaderboard(stats_file);
    std::cout << harness::leaderboard_report(rows);
    if (!failed_tasks_file.empty()) {
        std::ifstream in(failed_tasks_file);
        if (!in) {
            std::cerr << "cannot read " << failed_tasks_file << "\n";
            return kExitFault;
        }
        std::cout << "\nIncomplete or failed tasks (no medal across seeds):\n";
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty()) std::cout << "  - " << line << "\n";
        }
    }
    return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"turn-based agent runtime: run, replay, and report"};
    app.require_subcommand(1);

    std::string config_file, out_dir;
    auto* run_cmd = app.add_subcommand("run", "execute a run from a config file");
    run_cmd->add_option("--config", config_file, "run config JSON")->required();
    run_cmd->add_option("--out", out_dir, "output run directory")->required();

    std::string run_dir;
    auto* replay_cmd = app.add_subcommand("replay", "re-drive a recorded run and compare");
    replay_cmd->add_option("run_dir", run_dir, "recorded run directory")->required();

    std::string outcomes_file, estimator = "n";
    auto* stats_cmd = app.add_subcommand("verify-stats", "medal-rate statistics from outcomes");
    stats_cmd->add_option("--outcomes", outcomes_file, "outcome records JSON")->required();
    stats_cmd->add_option("--estimator", estimator, "std estimator: n or n-1")
        ->check(CLI::IsMember({"n", "n-1"}));

    std::string stats_file, failed_tasks;
    auto* report_cmd = app.add_subcommand("report", "render a leaderboard comparison table");
    report_cmd->add_option("--stats", stats_file, "per-agent stats JSON")->required();
    report_cmd->add_option("--failed-tasks", failed_tasks, "optional failed-task list");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(config_file, out_dir);
        if (replay_cmd->parsed()) return cmd_replay(run_dir);
        if (stats_cmd->parsed()) return cmd_verify_stats(outcomes_file, estimator);
        if (report_cmd->parsed()) return cmd_report(stats_file, failed_tasks);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFault;
    }
    return kExitFault;
}
