#include "agentrt/advisors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

namespace fs = std::filesystem;

namespace agentrt::policy {

MockAdvisor::MockAdvisor(std::string id, std::string fixed_text, Tick delay_ticks,
                         std::string endpoint)
    : id_(std::move(id)),
      fixed_text_(std::move(fixed_text)),
      delay_ticks_(delay_ticks),
      endpoint_(endpoint.empty() ? "mock:" + id_ : std::move(endpoint)) {}

AdvisorResponse MockAdvisor::analyze(const std::string& /*question*/,
                                     const std::vector<std::string>& /*context_refs*/,
                                     Tick timeout_ticks) {
    AdvisorResponse response;
    response.advisor_id = id_;
    if (delay_ticks_ > timeout_ticks) {
        response.timed_out = true;
        return response;
    }
    response.analysis = fixed_text_;
    return response;
}

std::vector<std::string> AdvisorConfig::advisor_ids() const {
    std::vector<std::string> ids;
    ids.reserve(advisors.size());
    for (const auto& a : advisors) ids.push_back(a->id());
    return ids;
}

Json AdvisoryReview::to_json() const {
    Json j;
    j["question"] = question;
    Json outputs = Json::array();
    for (const auto& [id, text] : advisor_outputs) {
        outputs.push_back(Json{{"advisor_id", id}, {"analysis", text}});
    }
    j["advisor_outputs"] = outputs;
    j["synthesis"] = synthesis;
    j["created_turn"] = created_turn;
    return j;
}

namespace {

std::string lower(const std::string& s) {
    std::string out(s.size(), '\0');
    std::transform(s.begin(), s.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(const std::string& s) {
    size_t first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    size_t last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> sentences;
    std::string current;
    for (char c : text) {
        if (c == '.' || c == '!' || c == '?' || c == '\n') {
            const std::string t = trim(current);
            if (!t.empty()) sentences.push_back(t);
            current.clear();
        } else {
            current += c;
        }
    }
    const std::string t = trim(current);
    if (!t.empty()) sentences.push_back(t);
    return sentences;
}

}  // namespace

AdvisoryReview deep_think(const std::string& question,
                          const std::vector<std::string>& context_refs,
                          const AdvisorConfig& advisors, std::int64_t created_turn,
                          const fs::path& archive_dir) {
    if (advisors.advisors.empty()) {
        throw std::invalid_argument("deep_think: advisor list is empty");
    }

    AdvisoryReview review;
    review.question = question;
    review.created_turn = created_turn;

    // Each advisor answers independently; nothing from one advisor reaches
    // another. Results are keyed by the fixed id order, so arrival order can
    // never influence the synthesized bytes.
    std::vector<AdvisorResponse> responses;
    for (const auto& advisor : advisors.advisors) {
        responses.push_back(
            advisor->analyze(question, context_refs, advisors.per_advisor_timeout));
    }

    int responders = 0;
    for (const auto& r : responses) {
        std::string text;
        if (r.timed_out) {
            text = "[timeout]";
        } else if (r.failed) {
            text = "[failed]";
        } else {
            text = r.analysis;
            ++responders;
        }
        review.advisor_outputs.emplace_back(r.advisor_id, text);
    }

    // Consensus: normalized sentences shared by at least two advisors, listed
    // in first-appearance order.
    std::map<std::string, std::set<std::string>> sentence_advisors;
    std::vector<std::pair<std::string, std::string>> first_seen;  // normalized -> original
    for (const auto& r : responses) {
        if (r.timed_out || r.failed) continue;
        for (const std::string& sentence : split_sentences(r.analysis)) {
            const std::string key = lower(sentence);
            if (!sentence_advisors.count(key)) first_seen.emplace_back(key, sentence);
            sentence_advisors[key].insert(r.advisor_id);
        }
    }
    std::vector<std::string> consensus;
    for (const auto& [key, original] : first_seen) {
        if (sentence_advisors[key].size() >= 2) consensus.push_back(original);
    }

    std::string synthesis = "Expert review: " + question + "\n";
    for (const auto& [id, text] : review.advisor_outputs) {
        synthesis += "\n### " + id + "\n" + text + "\n";
    }
    synthesis += "\n### Consensus\n";
    if (consensus.empty()) {
        synthesis += "none\n";
    } else {
        for (const auto& sentence : consensus) synthesis += "- " + sentence + "\n";
    }
    synthesis += "\n### Disagreement\n";
    synthesis += std::to_string(responders) + " of " +
                 std::to_string(responses.size()) + " advisors responded; " +
                 std::to_string(consensus.size()) + " shared finding(s)\n";
    review.synthesis = synthesis;

    if (!archive_dir.empty()) {
        fs::create_directories(archive_dir);
        std::ofstream out(archive_dir / ("deep_think_" + std::to_string(created_turn) + ".txt"),
                          std::ios::binary | std::ios::trunc);
        out << review.synthesis;
    }
    return review;
}

bool is_remote_endpoint(const std::string& endpoint) {
    const size_t colon = endpoint.find(':');
    if (colon == std::string::npos) return true;  // bare host: assume network
    const std::string scheme = lower(endpoint.substr(0, colon));
    static const std::set<std::string> local_schemes = {"mock", "local", "file", "unix",
                                                        "inproc"};
    return local_schemes.count(scheme) == 0;
}

IsolationVerdict verify_isolation(const AdvisorConfig& advisors) {
    IsolationVerdict verdict;
    verdict.pass = true;
    for (const auto& advisor : advisors.advisors) {
        const std::string endpoint = advisor->endpoint();
        if (endpoint.empty() || is_remote_endpoint(endpoint)) {
            verdict.pass = false;
            verdict.violations.push_back(advisor->id() + ": endpoint '" + endpoint +
                                         "' is not local");
        }
    }
    return verdict;
}

}  // namespace agentrt::policy
