#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "treescheme/mock_provider.hpp"
#include "treescheme/providers.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>

namespace treescheme {

using nlohmann::json;

namespace {

struct SplitUrl {
    std::string scheme_host_port;
    std::string path_prefix;  // no trailing slash
};

SplitUrl split_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("base_url must include a scheme: " + base_url);
    auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

std::string env_credential(const std::string& var) {
    const char* value = std::getenv(var.c_str());
    if (!value || !*value)
        throw AuthError("credential environment variable " + var + " is not set");
    return value;
}

[[noreturn]] void throw_http_status(int status, const std::string& body) {
    if (status == 401 || status == 403)
        throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
    bool retryable = status == 429 || status >= 500;
    throw TransportError("HTTP " + std::to_string(status) + ": " + body.substr(0, 200),
                         retryable);
}

json post_json(const std::string& base_url, const std::string& route,
               const std::string& credential_env_var, int timeout_s, const json& body) {
    SplitUrl url = split_url(base_url);
    httplib::Client client(url.scheme_host_port);
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);
    client.set_follow_location(true);

    httplib::Headers headers;
    if (!credential_env_var.empty())
        headers.emplace("Authorization", "Bearer " + env_credential(credential_env_var));

    auto result = client.Post(url.path_prefix + route, headers, body.dump(),
                              "application/json");
    if (!result)
        throw TransportError("cannot reach " + url.scheme_host_port + ": " +
                                 httplib::to_string(result.error()),
                             true);
    if (result->status != 200) throw_http_status(result->status, result->body);
    json parsed = json::parse(result->body, nullptr, false);
    if (parsed.is_discarded())
        throw TransportError("endpoint returned malformed JSON", false);
    return parsed;
}

}  // namespace

ProviderConfig load_provider_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open provider config: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("provider config JSON: ") + e.what());
    }
    if (!doc.contains("provider") || !doc["provider"].is_object())
        throw ConfigError("provider config needs a top-level \"provider\" object");
    const json& p = doc["provider"];
    ProviderConfig config;
    config.kind = p.value("kind", "");
    config.base_url = p.value("base_url", "");
    config.credential_env_var = p.value("credential_env_var", "");
    config.model_id = p.value("model_id", "");
    config.timeout_s = p.value("timeout_s", 60);
    if (p.contains("mock_script")) {
        std::filesystem::path script = p["mock_script"].get<std::string>();
        if (script.is_relative()) script = path.parent_path() / script;
        config.mock_script = script.string();
    }
    if (config.kind.empty()) throw ConfigError("provider config lacks \"kind\"");
    return config;
}

std::shared_ptr<ChatProvider> make_provider(const ProviderConfig& config) {
    if (config.kind == "mock") {
        if (config.mock_script.empty())
            throw ConfigError("mock provider config lacks \"mock_script\"");
        return MockProvider::from_file(config.mock_script);
    }
    if (config.kind == "openai-compatible") {
        if (config.base_url.empty())
            throw ConfigError("openai-compatible provider config lacks \"base_url\"");
        return std::make_shared<OpenAiCompatProvider>(config.base_url,
                                                      config.credential_env_var,
                                                      config.timeout_s);
    }
    if (config.kind == "nli-endpoint")
        throw ConfigError("kind \"nli-endpoint\" belongs in a judge config, "
                          "not a chat provider config");
    throw ConfigError("unknown provider kind: " + config.kind);
}

OpenAiCompatProvider::OpenAiCompatProvider(std::string base_url,
                                           std::string credential_env_var, int timeout_s)
    : base_url_(std::move(base_url)),
      credential_env_var_(std::move(credential_env_var)),
      timeout_s_(timeout_s) {}

CompletionResponse OpenAiCompatProvider::complete(const CompletionRequest& request) {
    json body;
    body["model"] = request.model_id;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_output;
    body["messages"] = json::array();
    for (const auto& m : request.messages)
        body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});

    auto start = std::chrono::steady_clock::now();
    json reply = post_json(base_url_, "/chat/completions", credential_env_var_, timeout_s_,
                           body);
    CompletionResponse response;
    response.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    response.provider_id = id();
    try {
        response.text = reply.at("choices").at(0).at("message").at("content")
                            .get<std::string>();
    } catch (const json::exception&) {
        throw TransportError("reply lacks choices[0].message.content", false);
    }
    if (reply.contains("usage")) {
        response.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0L);
        response.usage.completion_tokens = reply["usage"].value("completion_tokens", 0L);
    }
    return response;
}

JudgeConfig load_judge_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open judge config: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("judge config JSON: ") + e.what());
    }
    if (!doc.contains("judge") || !doc["judge"].is_object())
        throw ConfigError("judge config needs a top-level \"judge\" object");
    const json& j = doc["judge"];
    JudgeConfig config;
    config.kind = j.value("kind", "");
    config.base_url = j.value("base_url", "");
    config.credential_env_var = j.value("credential_env_var", "");
    config.timeout_s = j.value("timeout_s", 60);
    config.model_id = j.value("model_id", "");
    if (j.contains("default")) config.default_verdict = j["default"].get<std::string>();
    for (const auto& pair : j.value("pairs", json::array()))
        config.pairs.emplace_back(pair.at("premise").get<std::string>(),
                                  pair.at("hypothesis").get<std::string>(),
                                  pair.at("verdict").get<std::string>());
    if (config.kind.empty()) throw ConfigError("judge config lacks \"kind\"");
    return config;
}

std::shared_ptr<NliJudge> make_judge(const JudgeConfig& config,
                                     std::shared_ptr<ChatGateway> gateway) {
    if (config.kind == "mock") {
        auto judge = std::make_shared<MockNliJudge>();
        if (config.default_verdict)
            judge->set_default(nli_verdict_from_string(*config.default_verdict));
        for (const auto& [premise, hypothesis, verdict] : config.pairs)
            judge->add(premise, hypothesis, nli_verdict_from_string(verdict));
        return judge;
    }
    if (config.kind == "nli-endpoint") {
        if (config.base_url.empty())
            throw ConfigError("nli-endpoint judge config lacks \"base_url\"");
        return std::make_shared<HttpNliJudge>(config.base_url, config.credential_env_var,
                                              config.timeout_s);
    }
    if (config.kind == "prompt") {
        if (!gateway) throw ConfigError("prompt judge needs a chat gateway");
        if (config.model_id.empty())
            throw ConfigError("prompt judge config lacks \"model_id\"");
        return std::make_shared<PromptNliJudge>(std::move(gateway), config.model_id);
    }
    throw ConfigError("unknown judge kind: " + config.kind);
}

HttpNliJudge::HttpNliJudge(std::string base_url, std::string credential_env_var,
                           int timeout_s)
    : base_url_(std::move(base_url)),
      credential_env_var_(std::move(credential_env_var)),
      timeout_s_(timeout_s) {}

NliVerdict HttpNliJudge::judge(const std::string& premise, const std::string& hypothesis) {
    json body = {{"premise", premise}, {"hypothesis", hypothesis}};
    json reply = post_json(base_url_, "/nli", credential_env_var_, timeout_s_, body);
    if (!reply.contains("label") || !reply["label"].is_string())
        throw UnparseableVerdict("NLI endpoint reply lacks a \"label\" string");
    return nli_verdict_from_string(reply["label"].get<std::string>());
}

PromptNliJudge::PromptNliJudge(std::shared_ptr<ChatGateway> gateway, std::string model_id)
    : gateway_(std::move(gateway)), model_id_(std::move(model_id)) {
    if (!gateway_) throw ConfigError("prompt judge needs a chat gateway");
}

NliVerdict PromptNliJudge::judge(const std::string& premise, const std::string& hypothesis) {
    CompletionRequest request;
    request.model_id = model_id_;
    request.temperature = 0.0;
    request.max_output = 8;
    request.messages = {
        {Message::Role::system,
         "You are a natural language inference classifier. Reply with exactly one word."},
        {Message::Role::user,
         "Premise: " + premise + "\nHypothesis: " + hypothesis +
             "\nIs the hypothesis a contradiction of the premise, neutral, or an "
             "entailment? Answer with one word: contradiction, neutral, or entailment."}};
    CompletionResponse response = gateway_->complete(request, "nli");

    std::string lowered;
    for (char c : response.text)
        lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::size_t best = std::string::npos;
    NliVerdict verdict = NliVerdict::neutral;
    for (auto [word, v] : {std::pair{"contradiction", NliVerdict::contradiction},
                           std::pair{"entailment", NliVerdict::entailment},
                           std::pair{"neutral", NliVerdict::neutral}}) {
        auto pos = lowered.find(word);
        if (pos != std::string::npos && pos < best) {
            best = pos;
            verdict = v;
        }
    }
    if (best == std::string::npos)
        throw UnparseableVerdict("judge reply has no verdict word: " +
                                 response.text.substr(0, 120));
    return verdict;
}

}  // namespace treescheme
