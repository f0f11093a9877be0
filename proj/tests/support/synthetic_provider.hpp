#pragma once

// A chat provider that invents valid split proposals on the fly by parsing
// the class table out of the prompt. Drives randomized build tests where a
// hand-written script per tree would be impractical.

#include <algorithm>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treescheme/gateway.hpp"
#include "treescheme/tree.hpp"

namespace ts_test {

inline std::vector<std::string> parse_class_table(const std::string& prompt) {
    std::vector<std::string> names;
    std::istringstream in(prompt);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("- ", 0) != 0) continue;
        auto sep = line.find(" :: ");
        if (sep == std::string::npos) continue;
        names.push_back(line.substr(2, sep - 2));
    }
    return names;
}

class SyntheticSplitProvider : public treescheme::ChatProvider {
public:
    SyntheticSplitProvider(treescheme::Strategy strategy, unsigned seed)
        : strategy_(strategy), rng_(seed) {}

    /// Call indices (1-based, split prompts only) that should return an
    /// unparseable reply instead of a proposal.
    void fail_splits_at(std::vector<int> indices) { fail_at_ = std::move(indices); }

    treescheme::CompletionResponse complete(
        const treescheme::CompletionRequest& request) override {
        std::lock_guard<std::mutex> lock(mutex_);
        const std::string& prompt = request.messages.back().content;
        treescheme::CompletionResponse response;
        response.provider_id = id();
        response.usage = {220, 60};
        if (prompt.find("You are reviewing a proposed node") != std::string::npos) {
            int score = 3 + static_cast<int>(rng_() % 8);
            response.text = "{\"score\": " + std::to_string(score) + "}";
            return response;
        }
        ++split_calls_;
        if (std::find(fail_at_.begin(), fail_at_.end(), split_calls_) != fail_at_.end()) {
            response.text = "I would rather chat about the weather.";
            return response;
        }
        response.text = propose(parse_class_table(prompt));
        return response;
    }

    std::string id() const override { return "synthetic"; }

    int split_calls() const { return split_calls_; }

private:
    std::string propose(std::vector<std::string> names) {
        using nlohmann::json;
        std::shuffle(names.begin(), names.end(), rng_);
        std::size_t group_count = 2;
        if (strategy_ == treescheme::Strategy::open_nonbinary ||
            strategy_ == treescheme::Strategy::split_select ||
            strategy_ == treescheme::Strategy::freq_split_select) {
            std::size_t most = std::min<std::size_t>(names.size(), 4);
            group_count = 2 + rng_() % (most - 1);
        }

        std::vector<std::vector<std::string>> groups(group_count);
        for (std::size_t i = 0; i < names.size(); ++i)
            groups[i < group_count ? i : rng_() % group_count].push_back(names[i]);

        json doc;
        doc["reasoning"] = json::array(
            {{{"question", "What separates these classes?"},
              {"answer", "One observable property of the utterance."}}});
        doc["question"] = "Which of " + std::to_string(group_count) +
                          " behaviors starting at " + groups[0][0] +
                          " does the utterance show?";
        doc["groups"] = json::array();
        for (std::size_t g = 0; g < group_count; ++g) {
            std::string answer;
            if (strategy_ == treescheme::Strategy::yes_no)
                answer = g == 0 ? "Yes, it behaves like " + groups[0][0]
                                : "No, it does not";
            else
                answer = "It behaves like " + groups[g][0];
            doc["groups"].push_back({{"answer", answer}, {"classes", groups[g]}});
        }
        return doc.dump();
    }

    treescheme::Strategy strategy_;
    std::mt19937 rng_;
    std::mutex mutex_;
    int split_calls_ = 0;
    std::vector<int> fail_at_;
};

}  // namespace ts_test
