#include "agentrt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace agentrt::harness {

namespace {

const std::vector<std::string> kSubsetOrder = {"Lite", "Medium", "Hard"};

std::string fmt(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

MedalStats stats_for(const std::string& name,
                     const std::map<std::string, std::pair<double, int>>& task_fractions,
                     StdEstimator estimator) {
    MedalStats s;
    s.subset = name;
    s.n = static_cast<int>(task_fractions.size());
    double sum = 0;
    for (const auto& [task, frac] : task_fractions) {
        sum += frac.first / frac.second;
    }
    s.mean = s.n > 0 ? sum / s.n : 0.0;
    const double denom = estimator == StdEstimator::population_n
                             ? static_cast<double>(s.n)
                             : static_cast<double>(s.n - 1);
    s.stddev = denom > 0 ? std::sqrt(s.mean * (1.0 - s.mean) / denom) : 0.0;
    return s;
}

}  // namespace

std::vector<MedalStats> medal_stats(const std::vector<OutcomeRow>& outcomes,
                                    StdEstimator estimator) {
    if (outcomes.empty()) throw std::invalid_argument("medal_stats: no outcomes");

    // task -> (medal count, run count); also enforce one subset per task
    std::map<std::string, std::string> task_subset;
    std::map<std::string, std::map<std::string, std::pair<double, int>>> per_subset;
    std::map<std::string, std::pair<double, int>> overall;

    for (const OutcomeRow& row : outcomes) {
        bool known = std::find(kSubsetOrder.begin(), kSubsetOrder.end(), row.subset) !=
                     kSubsetOrder.end();
        if (!known) {
            throw std::invalid_argument("medal_stats: task '" + row.task_id +
                                        "' has unmapped subset '" + row.subset + "'");
        }
        auto [it, inserted] = task_subset.emplace(row.task_id, row.subset);
        if (!inserted && it->second != row.subset) {
            throw std::invalid_argument("medal_stats: task '" + row.task_id +
                                        "' mapped to two subsets");
        }
        auto& sub = per_subset[row.subset][row.task_id];
        sub.first += row.medal ? 1.0 : 0.0;
        sub.second += 1;
        auto& all = overall[row.task_id];
        all.first += row.medal ? 1.0 : 0.0;
        all.second += 1;
    }

    std::vector<MedalStats> result;
    result.push_back(stats_for("Overall", overall, estimator));
    for (const std::string& subset : kSubsetOrder) {
        auto it = per_subset.find(subset);
        if (it != per_subset.end()) {
            result.push_back(stats_for(subset, it->second, estimator));
        }
    }
    return result;
}

std::string render_stats_table(const std::vector<MedalStats>& stats) {
    std::ostringstream out;
    out << "Subset    Medal Rate (mean +/- std)    Problems (n)\n";
    for (const MedalStats& s : stats) {
        out << s.subset;
        for (size_t i = s.subset.size(); i < 10; ++i) out << ' ';
        const std::string rate = fmt(s.mean, 4) + " +/- " + fmt(s.stddev, 4);
        out << rate;
        for (size_t i = rate.size(); i < 29; ++i) out << ' ';
        out << s.n << "\n";
    }
    return out.str();
}

std::vector<OutcomeRow> load_outcomes(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read outcomes file " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const Json doc = Json::parse(buf.str());

    std::vector<OutcomeRow> rows;
    const Json& arr = doc.is_array() ? doc : doc.at("outcomes");
    for (const Json& r : arr) {
        OutcomeRow row;
        row.task_id = r.at("task_id").get<std::string>();
        row.subset = r.at("subset").get<std::string>();
        row.seed = r.value("seed", std::uint64_t{0});
        row.medal = r.at("medal").get<bool>();
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string leaderboard_report(std::vector<LeaderboardRow> rows) {
    std::sort(rows.begin(), rows.end(), [](const LeaderboardRow& a, const LeaderboardRow& b) {
        if (a.all != b.all) return a.all > b.all;
        return a.agent < b.agent;  // stable tie-break
    });
    std::ostringstream out;
    out << "Agent                          Lite    Med.    Hard    All     Hrs   Date\n";
    for (const LeaderboardRow& r : rows) {
        out << r.agent;
        for (size_t i = r.agent.size(); i < 31; ++i) out << ' ';
        for (double v : {r.lite, r.medium, r.hard, r.all}) {
            const std::string cell = fmt(v, 2);
            out << cell;
            for (size_t i = cell.size(); i < 8; ++i) out << ' ';
        }
        const std::string hrs = fmt(r.hours, 0);
        out << hrs;
        for (size_t i = hrs.size(); i < 6; ++i) out << ' ';
        out << r.date << "\n";
    }
    return out.str();
}

std::vector<LeaderboardRow> load_leaderboard(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read leaderboard file " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const Json doc = Json::parse(buf.str());

    std::vector<LeaderboardRow> rows;
    const Json& arr = doc.is_array() ? doc : doc.at("agents");
    for (const Json& r : arr) {
        LeaderboardRow row;
        row.agent = r.at("agent").get<std::string>();
        for (const char* key : {"lite", "medium", "hard", "all", "hours"}) {
            if (!r.contains(key)) {
                throw std::runtime_error("leaderboard row '" + row.agent +
                                         "' missing column '" + key + "'");
            }
        }
        row.lite = r.at("lite").get<double>();
        row.medium = r.at("medium").get<double>();
        row.hard = r.at("hard").get<double>();
        row.all = r.at("all").get<double>();
        row.hours = r.at("hours").get<double>();
        row.date = r.value("date", "");
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace agentrt::harness
