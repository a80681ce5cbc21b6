#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agentrt/json_util.hpp"

namespace agentrt::harness {

struct OutcomeRow {
    std::string task_id;
    std::string subset;  // Lite | Medium | Hard
    std::uint64_t seed = 0;
    bool medal = false;
};

struct MedalStats {
    std::string subset;
    int n = 0;        // task count
    double mean = 0;  // medal fraction, seeds averaged per task first
    double stddev = 0;
};

enum class StdEstimator { population_n, sample_n_minus_1 };

// Mean = per-task medal fraction averaged over tasks; std = sqrt(p(1-p)/n)
// under the default estimator, sqrt(p(1-p)/(n-1)) under the sample option.
// Rows come back in fixed order: Overall, Lite, Medium, Hard.
std::vector<MedalStats> medal_stats(const std::vector<OutcomeRow>& outcomes,
                                    StdEstimator estimator = StdEstimator::population_n);

std::string render_stats_table(const std::vector<MedalStats>& stats);

std::vector<OutcomeRow> load_outcomes(const std::filesystem::path& file);

struct LeaderboardRow {
    std::string agent;
    double lite = 0, medium = 0, hard = 0, all = 0;  // percentages
    double hours = 0;
    std::string date;
};

// Rows sorted by All descending, ties broken by agent name; percentages with
// two decimals.
std::string leaderboard_report(std::vector<LeaderboardRow> rows);

std::vector<LeaderboardRow> load_leaderboard(const std::filesystem::path& file);

}  // namespace agentrt::harness
