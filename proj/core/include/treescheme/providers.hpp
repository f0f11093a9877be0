#pragma once

#include "treescheme/gateway.hpp"

namespace treescheme {

struct ProviderConfig {
    std::string kind;  // "openai-compatible" | "mock" | "nli-endpoint"
    std::string base_url;
    std::string credential_env_var;
    std::string model_id;
    std::string mock_script;  // kind == "mock" only; path, relative to the config file
    int timeout_s = 60;
};

ProviderConfig load_provider_config(const std::filesystem::path& path);

/// Builds the transport for a config. Mock scripts load here; HTTP providers
/// read their credential from the configured environment variable at call
/// time, never from the config itself.
std::shared_ptr<ChatProvider> make_provider(const ProviderConfig& config);

/// Chat-completions client for any endpoint speaking the common JSON wire
/// format (POST {base_url}/chat/completions).
class OpenAiCompatProvider : public ChatProvider {
public:
    OpenAiCompatProvider(std::string base_url, std::string credential_env_var,
                         int timeout_s = 60);

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override { return "openai-compatible:" + base_url_; }

private:
    std::string bearer_token() const;

    std::string base_url_;
    std::string credential_env_var_;
    int timeout_s_;
};

struct JudgeConfig {
    std::string kind;  // "mock" | "prompt" | "nli-endpoint"
    // nli-endpoint
    std::string base_url;
    std::string credential_env_var;
    int timeout_s = 60;
    // prompt
    std::string model_id;
    // mock
    std::optional<std::string> default_verdict;
    std::vector<std::tuple<std::string, std::string, std::string>> pairs;
};

JudgeConfig load_judge_config(const std::filesystem::path& path);

/// gateway may be null unless kind == "prompt".
std::shared_ptr<NliJudge> make_judge(const JudgeConfig& config,
                                     std::shared_ptr<ChatGateway> gateway = nullptr);

/// Remote classifier: POST {base_url}/nli with {"premise","hypothesis"},
/// expects {"label": "contradiction"|"neutral"|"entailment"}.
class HttpNliJudge : public NliJudge {
public:
    HttpNliJudge(std::string base_url, std::string credential_env_var = "",
                 int timeout_s = 60);
    NliVerdict judge(const std::string& premise, const std::string& hypothesis) override;

private:
    std::string base_url_;
    std::string credential_env_var_;
    int timeout_s_;
};

/// Asks the chat model itself for a one-word verdict.
class PromptNliJudge : public NliJudge {
public:
    PromptNliJudge(std::shared_ptr<ChatGateway> gateway, std::string model_id);
    NliVerdict judge(const std::string& premise, const std::string& hypothesis) override;

private:
    std::shared_ptr<ChatGateway> gateway_;
    std::string model_id_;
};

}  // namespace treescheme
