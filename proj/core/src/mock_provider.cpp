#include "treescheme/mock_provider.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

namespace treescheme {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<MockScriptEntry> load_mock_script(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mock script: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("mock script JSON: ") + e.what());
    }
    if (!doc.is_array()) throw ConfigError("mock script must be a JSON array");
    std::vector<MockScriptEntry> script;
    for (const auto& je : doc) {
        MockScriptEntry entry;
        if (je.contains("expect_substring") && !je["expect_substring"].is_null())
            entry.expect_substring = je["expect_substring"].get<std::string>();
        if (!je.contains("response"))
            throw ConfigError("mock script entry lacks \"response\"");
        entry.response = je["response"].get<std::string>();
        entry.prompt_tokens = je.value("prompt_tokens", 0L);
        entry.completion_tokens = je.value("completion_tokens", 0L);
        script.push_back(std::move(entry));
    }
    return script;
}

void save_mock_script(const std::vector<MockScriptEntry>& script,
                      const std::filesystem::path& path) {
    ordered_json doc = ordered_json::array();
    for (const auto& entry : script) {
        ordered_json je;
        if (entry.expect_substring) je["expect_substring"] = *entry.expect_substring;
        je["response"] = entry.response;
        je["prompt_tokens"] = entry.prompt_tokens;
        je["completion_tokens"] = entry.completion_tokens;
        doc.push_back(std::move(je));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write mock script: " + path.string());
    out << doc.dump(2) << "\n";
}

MockProvider::MockProvider(std::vector<MockScriptEntry> script)
    : script_(std::move(script)), consumed_(script_.size(), false) {}

std::shared_ptr<MockProvider> MockProvider::from_file(const std::filesystem::path& path) {
    return std::make_shared<MockProvider>(load_mock_script(path));
}

CompletionResponse MockProvider::complete(const CompletionRequest& request) {
    {
        std::lock_guard lock(mutex_);
        ++in_flight_;
        max_in_flight_ = std::max(max_in_flight_, in_flight_);
    }
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);

    std::string haystack;
    for (const auto& m : request.messages) {
        haystack += m.content;
        haystack += '\n';
    }

    std::lock_guard lock(mutex_);
    --in_flight_;
    ++calls_;
    for (std::size_t i = 0; i < script_.size(); ++i) {
        if (consumed_[i]) continue;
        const auto& entry = script_[i];
        if (entry.expect_substring &&
            haystack.find(*entry.expect_substring) == std::string::npos)
            continue;
        consumed_[i] = true;
        CompletionResponse response;
        response.text = entry.response;
        response.usage = {entry.prompt_tokens, entry.completion_tokens};
        response.provider_id = id();
        return response;
    }
    std::string preview = haystack.substr(0, 160);
    throw ConfigError("mock script has no unconsumed entry matching request starting: " +
                      preview);
}

int MockProvider::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

int MockProvider::max_in_flight() const {
    std::lock_guard lock(mutex_);
    return max_in_flight_;
}

std::size_t MockProvider::remaining() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (bool c : consumed_)
        if (!c) ++n;
    return n;
}

void MockNliJudge::add(const std::string& premise, const std::string& hypothesis,
                       NliVerdict verdict) {
    table_[{premise, hypothesis}] = verdict;
}

NliVerdict MockNliJudge::judge(const std::string& premise, const std::string& hypothesis) {
    if (premise == hypothesis) return NliVerdict::entailment;
    auto it = table_.find({premise, hypothesis});
    if (it != table_.end()) return it->second;
    if (default_) return *default_;
    throw UnparseableVerdict("mock judge has no entry for premise \"" + premise +
                             "\" / hypothesis \"" + hypothesis + "\"");
}

}  // namespace treescheme
