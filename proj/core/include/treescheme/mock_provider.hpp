#pragma once

#include <map>
#include <utility>

#include "treescheme/gateway.hpp"

namespace treescheme {

struct MockScriptEntry {
    std::optional<std::string> expect_substring;
    std::string response;
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

std::vector<MockScriptEntry> load_mock_script(const std::filesystem::path& path);
void save_mock_script(const std::vector<MockScriptEntry>& script,
                      const std::filesystem::path& path);

/// Scripted provider. Each call consumes the first unconsumed entry whose
/// expect_substring occurs in the request text (entries without one match
/// any request), so results do not depend on caller arrival order as long
/// as expectations identify requests uniquely.
class MockProvider : public ChatProvider {
public:
    explicit MockProvider(std::vector<MockScriptEntry> script);
    static std::shared_ptr<MockProvider> from_file(const std::filesystem::path& path);

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override { return "mock"; }

    /// Artificial per-call latency; lets tests observe real concurrency.
    void set_delay(std::chrono::milliseconds delay) { delay_ = delay; }

    int calls() const;
    int max_in_flight() const;
    std::size_t remaining() const;

private:
    mutable std::mutex mutex_;
    std::vector<MockScriptEntry> script_;
    std::vector<bool> consumed_;
    std::chrono::milliseconds delay_{0};
    int calls_ = 0;
    int in_flight_ = 0;
    int max_in_flight_ = 0;
};

/// Table-driven judge. Identical premise and hypothesis entail each other;
/// unknown pairs fall back to the default verdict when one is set.
class MockNliJudge : public NliJudge {
public:
    MockNliJudge() = default;
    explicit MockNliJudge(NliVerdict default_verdict) : default_(default_verdict) {}

    void add(const std::string& premise, const std::string& hypothesis, NliVerdict verdict);
    void set_default(std::optional<NliVerdict> verdict) { default_ = verdict; }

    NliVerdict judge(const std::string& premise, const std::string& hypothesis) override;

private:
    std::map<std::pair<std::string, std::string>, NliVerdict> table_;
    std::optional<NliVerdict> default_;
};

}  // namespace treescheme
